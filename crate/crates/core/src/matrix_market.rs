//! Matrix Market exchange format: coordinate and array, real/integer/complex,
//! general/symmetric/hermitian. Symmetric storage is expanded to full.

use crate::error::{Result, SolverError};
use crate::scalar::{real, Scalar, C};
use nalgebra::DMatrix;
use num_complex::Complex;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
}

fn parse_err(msg: impl Into<String>) -> SolverError {
    SolverError::ParseError(msg.into())
}

/// Read a Matrix Market file into a dense square complex matrix.
pub fn read_matrix_market<T: Scalar>(path: impl AsRef<Path>) -> Result<DMatrix<C<T>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| {
        SolverError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    read_matrix_market_from(BufReader::new(file))
}

/// Read from any buffered source (testable without touching the filesystem).
pub fn read_matrix_market_from<T: Scalar>(reader: impl BufRead) -> Result<DMatrix<C<T>>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err("empty file"))??;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(format!("invalid header line: {header}")));
    }
    let format = match tokens[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        other => return Err(parse_err(format!("unsupported format type: {other}"))),
    };
    let field = match tokens[3].as_str() {
        "real" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        other => return Err(parse_err(format!("unsupported field type: {other}"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(parse_err(format!("unsupported symmetry type: {other}"))),
    };

    // skip comments and blank lines up to the size line
    let mut size_line = None;
    for line in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some(line);
        break;
    }
    let size_line = size_line.ok_or_else(|| parse_err("missing size line"))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(format!("bad size line: {size_line}"))))
        .collect::<Result<_>>()?;

    let expected_dims = match format {
        Format::Coordinate => 3,
        Format::Array => 2,
    };
    if dims.len() != expected_dims {
        return Err(parse_err(format!("bad size line: {size_line}")));
    }
    let (nrows, ncols) = (dims[0], dims[1]);
    if nrows != ncols {
        return Err(SolverError::ShapeError(format!(
            "pencil component must be square, got {nrows}x{ncols}"
        )));
    }

    let mut m = DMatrix::from_element(nrows, ncols, Complex::new(T::zero(), T::zero()));
    let parse_value = |parts: &[&str]| -> Result<C<T>> {
        match field {
            Field::Real | Field::Integer => {
                let v: f64 = parts[0]
                    .parse()
                    .map_err(|_| parse_err(format!("bad value: {}", parts[0])))?;
                Ok(Complex::new(real(v), T::zero()))
            }
            Field::Complex => {
                if parts.len() < 2 {
                    return Err(parse_err("complex entry needs two values"));
                }
                let re: f64 = parts[0]
                    .parse()
                    .map_err(|_| parse_err(format!("bad value: {}", parts[0])))?;
                let im: f64 = parts[1]
                    .parse()
                    .map_err(|_| parse_err(format!("bad value: {}", parts[1])))?;
                Ok(cplx_t(re, im))
            }
        }
    };

    match format {
        Format::Coordinate => {
            let nnz = dims[2];
            let mut seen = 0usize;
            for line in lines {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                let parts: Vec<&str> = trimmed.split_whitespace().collect();
                let value_parts = match field {
                    Field::Complex => 2,
                    _ => 1,
                };
                if parts.len() != 2 + value_parts {
                    return Err(parse_err(format!("malformed entry: {trimmed}")));
                }
                let i: usize = parts[0]
                    .parse()
                    .map_err(|_| parse_err(format!("bad row index: {}", parts[0])))?;
                let j: usize = parts[1]
                    .parse()
                    .map_err(|_| parse_err(format!("bad column index: {}", parts[1])))?;
                if i < 1 || i > nrows || j < 1 || j > ncols {
                    return Err(parse_err(format!("index out of bounds: {i} {j}")));
                }
                let v = parse_value(&parts[2..])?;
                m[(i - 1, j - 1)] = v;
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => {
                        if i != j {
                            m[(j - 1, i - 1)] = v;
                        }
                    }
                    Symmetry::Hermitian => {
                        if i != j {
                            m[(j - 1, i - 1)] = v.conj();
                        }
                    }
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(format!(
                    "header declares {nnz} entries but file contains {seen}"
                )));
            }
        }
        Format::Array => {
            // general: full column-major listing; symmetric/hermitian: lower triangle
            let mut coords: Vec<(usize, usize)> = Vec::new();
            for j in 0..ncols {
                let start = if symmetry == Symmetry::General { 0 } else { j };
                for i in start..nrows {
                    coords.push((i, j));
                }
            }
            let mut idx = 0usize;
            for line in lines {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                let parts: Vec<&str> = trimmed.split_whitespace().collect();
                if idx >= coords.len() {
                    return Err(parse_err("more entries than the header declares"));
                }
                let v = parse_value(&parts)?;
                let (i, j) = coords[idx];
                m[(i, j)] = v;
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => {
                        if i != j {
                            m[(j, i)] = v;
                        }
                    }
                    Symmetry::Hermitian => {
                        if i != j {
                            m[(j, i)] = v.conj();
                        }
                    }
                }
                idx += 1;
            }
            if idx != coords.len() {
                return Err(parse_err(format!(
                    "header declares {} entries but file contains {idx}",
                    coords.len()
                )));
            }
        }
    }
    Ok(m)
}

fn cplx_t<T: Scalar>(re: f64, im: f64) -> C<T> {
    Complex::new(real(re), real(im))
}

/// Write a dense matrix as a general coordinate Matrix Market file
/// (real field when every imaginary part is zero). Values round-trip
/// bit-exactly through `read_matrix_market`.
pub fn write_matrix_market<T: Scalar>(path: impl AsRef<Path>, m: &DMatrix<C<T>>) -> Result<()> {
    let mut f = File::create(path)?;
    let is_real = m.iter().all(|e| e.im == T::zero());
    let field = if is_real { "real" } else { "complex" };
    let nnz = m.iter().filter(|e| **e != Complex::new(T::zero(), T::zero())).count();
    writeln!(f, "%%MatrixMarket matrix coordinate {field} general")?;
    writeln!(f, "{} {} {}", m.nrows(), m.ncols(), nnz)?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v == Complex::new(T::zero(), T::zero()) {
                continue;
            }
            let re = v.re.to_f64().unwrap();
            if is_real {
                writeln!(f, "{} {} {re:e}", i + 1, j + 1)?;
            } else {
                let im = v.im.to_f64().unwrap();
                writeln!(f, "{} {} {re:e} {im:e}", i + 1, j + 1)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::random_initial_block;
    use std::io::Cursor;

    fn read_str(s: &str) -> Result<DMatrix<C<f64>>> {
        read_matrix_market_from(Cursor::new(s.as_bytes().to_vec()))
    }

    #[test]
    fn symmetric_coordinate_expands_to_full() {
        let m = read_str(
            "%%MatrixMarket matrix coordinate real symmetric\n\
             % a comment\n\
             2 2 2\n\
             1 1 2.0\n\
             2 1 1.0\n",
        )
        .unwrap();
        assert_eq!(m[(0, 0)].re, 2.0);
        assert_eq!(m[(1, 0)].re, 1.0);
        assert_eq!(m[(0, 1)].re, 1.0);
        assert_eq!(m[(1, 1)].re, 0.0);
    }

    #[test]
    fn entry_count_mismatch_is_a_parse_error() {
        let err = read_str(
            "%%MatrixMarket matrix coordinate real general\n\
             2 2 3\n\
             1 1 1.0\n\
             2 2 1.0\n",
        )
        .unwrap_err();
        assert!(matches!(err, SolverError::ParseError(_)), "{err}");
    }

    #[test]
    fn pattern_field_is_rejected_by_name() {
        let err = read_str(
            "%%MatrixMarket matrix coordinate pattern general\n\
             2 2 1\n\
             1 1\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("pattern"), "{msg}");
    }

    #[test]
    fn non_square_is_a_shape_error() {
        let err = read_str(
            "%%MatrixMarket matrix coordinate real general\n\
             2 3 1\n\
             1 1 1.0\n",
        )
        .unwrap_err();
        assert!(matches!(err, SolverError::ShapeError(_)));
    }

    #[test]
    fn hermitian_coordinate_conjugates() {
        let m = read_str(
            "%%MatrixMarket matrix coordinate complex hermitian\n\
             2 2 2\n\
             1 1 1.0 0.0\n\
             2 1 2.0 3.0\n",
        )
        .unwrap();
        assert_eq!(m[(1, 0)], Complex::new(2.0, 3.0));
        assert_eq!(m[(0, 1)], Complex::new(2.0, -3.0));
    }

    #[test]
    fn array_format_symmetric() {
        let m = read_str(
            "%%MatrixMarket matrix array real symmetric\n\
             2 2\n\
             2.0\n\
             1.0\n\
             2.0\n",
        )
        .unwrap();
        assert_eq!(m[(0, 1)].re, 1.0);
        assert_eq!(m[(1, 1)].re, 2.0);
    }

    #[test]
    fn round_trip_real_and_complex() {
        let dir = tempfile::tempdir().unwrap();
        let real_m = random_initial_block::<f64>(7, 7, 1);
        let p1 = dir.path().join("real.mtx");
        write_matrix_market(&p1, &real_m).unwrap();
        let back = read_matrix_market::<f64>(&p1).unwrap();
        assert_eq!(real_m, back);

        let g = random_initial_block::<f64>(5, 5, 2);
        let h = random_initial_block::<f64>(5, 5, 3);
        let complex_m = g.zip_map(&h, |a, b| Complex::new(a.re, b.re));
        let p2 = dir.path().join("complex.mtx");
        write_matrix_market(&p2, &complex_m).unwrap();
        let back = read_matrix_market::<f64>(&p2).unwrap();
        assert_eq!(complex_m, back);
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_matrix_market::<f64>("definitely_missing.mtx").unwrap_err();
        assert!(err.to_string().contains("definitely_missing.mtx"));
    }
}
