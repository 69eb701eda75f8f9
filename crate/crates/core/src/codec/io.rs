use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::field::Scalar;
use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Reads a dense row-major matrix: one CSV record per row, no header.
pub fn read_matrix<T: Scalar, R: Read>(reader: R) -> Result<Matrix<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::invalid(format!("matrix csv: {e}")))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(T::parse).collect::<Result<Vec<T>>>()?);
    }
    if rows.is_empty() {
        return Err(Error::invalid("matrix csv is empty"));
    }
    let m = Matrix::from_rows(rows)?;
    if !m.data().iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("matrix csv has non-finite entries"));
    }
    Ok(m)
}

pub fn read_matrix_csv<T: Scalar>(path: &Path) -> Result<Matrix<T>> {
    let file = File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    read_matrix(file)
}

/// Reads a vector stored either as one row or as one column.
pub fn read_vector_csv<T: Scalar>(path: &Path) -> Result<Vec<T>> {
    let m: Matrix<T> = read_matrix_csv(path)?;
    if m.rows() != 1 && m.cols() != 1 {
        return Err(Error::invalid(format!(
            "{} holds a {}x{} matrix, expected a vector",
            path.display(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.into_data())
}

pub fn write_matrix<T: Scalar, W: Write>(m: &Matrix<T>, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for i in 0..m.rows() {
        wtr.write_record(m.row(i).iter().map(|v| v.to_string()))
            .map_err(|e| Error::invalid(format!("matrix csv: {e}")))?;
    }
    wtr.flush().map_err(|e| Error::invalid(format!("matrix csv: {e}")))
}

pub fn write_matrix_csv<T: Scalar>(m: &Matrix<T>, path: &Path) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::invalid(format!("cannot create {}: {e}", path.display())))?;
    write_matrix(m, file)
}

#[cfg(test)]
mod tests {
    use super::super::field::Fp;
    use super::*;

    #[test]
    fn round_trip() {
        let m = Matrix::from_rows(vec![vec![1.5, -2.0], vec![0.25, 1e-7]]).unwrap();
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        let back: Matrix<f64> = read_matrix(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn prime_lift_of_signed_integers() {
        let m: Matrix<Fp> = read_matrix("1, -2\n# note\n3,4\n".as_bytes()).unwrap();
        assert_eq!(m[(0, 1)].to_signed(), -2);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,-2\n3,4\n");
    }

    #[test]
    fn bad_input() {
        assert!(read_matrix::<f64, _>("1,2\n3\n".as_bytes()).is_err());
        assert!(read_matrix::<f64, _>("1,x\n".as_bytes()).is_err());
        assert!(read_matrix::<f64, _>("".as_bytes()).is_err());
        assert!(read_matrix::<f64, _>("1,NaN\n".as_bytes()).is_err());
    }
}
