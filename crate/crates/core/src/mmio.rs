//! Matrix Market (`coordinate` and `array`, real, general or symmetric) and
//! one-value-per-line vector files.
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every `f64` exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix, Storage};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

/// Reads a Matrix Market file. Coordinate files become sparse storage,
/// array files dense storage.
pub fn read_matrix_market(path: &Path) -> Result<Storage> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_matrix_market(&text, path)
}

fn parse_matrix_market(text: &str, path: &Path) -> Result<Storage> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(path, 1, format!("bad header {header:?}")));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(path, 1, format!("unsupported format {other}"))),
    };
    if tokens[3] != "real" && tokens[3] != "integer" && tokens[3] != "double" {
        return Err(parse_err(path, 1, format!("unsupported field {}", tokens[3])));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(path, 1, format!("unsupported symmetry {other}"))),
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_no, size_line) = data.next().ok_or_else(|| parse_err(path, 2, "missing size line"))?;
    let dims = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| parse_err(path, size_no + 1, e.to_string()))?;

    match layout {
        Layout::Coordinate => {
            let [m, n, nnz] = dims[..] else {
                return Err(parse_err(path, size_no + 1, "expected `rows cols nnz`"));
            };
            let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
            let mut seen = 0;
            for (no, line) in data {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(parse_err(path, no + 1, "expected `row col value`"));
                }
                let i: usize = parts[0].parse().map_err(|_| parse_err(path, no + 1, "bad row index"))?;
                let j: usize = parts[1].parse().map_err(|_| parse_err(path, no + 1, "bad column index"))?;
                let v: f64 = parts[2].parse().map_err(|_| parse_err(path, no + 1, "bad value"))?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(parse_err(path, no + 1, format!("entry ({i}, {j}) outside {m}x{n}")));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(path, size_no + 1, format!("declared {nnz} entries, found {seen}")));
            }
            Ok(Storage::Sparse(SparseMatrix::from_triplets(m, n, &triplets)?))
        }
        Layout::Array => {
            let [m, n] = dims[..] else {
                return Err(parse_err(path, size_no + 1, "expected `rows cols`"));
            };
            let mut values = Vec::with_capacity(m * n);
            for (no, line) in data {
                for t in line.split_whitespace() {
                    values.push(t.parse::<f64>().map_err(|_| parse_err(path, no + 1, "bad value"))?);
                }
            }
            if symmetric {
                if m != n {
                    return Err(parse_err(path, size_no + 1, "symmetric array must be square"));
                }
                // lower triangle, column by column
                let mut dense = DenseMatrix::zeros(m, n)?;
                let mut it = values.iter();
                for j in 0..n {
                    for i in j..m {
                        let v = *it.next().ok_or_else(|| parse_err(path, size_no + 1, "too few values"))?;
                        dense.set(i, j, v);
                        dense.set(j, i, v);
                    }
                }
                return Ok(Storage::Dense(dense));
            }
            if values.len() != m * n {
                return Err(parse_err(
                    path,
                    size_no + 1,
                    format!("expected {} values, found {}", m * n, values.len()),
                ));
            }
            Ok(Storage::Dense(DenseMatrix::new(m, n, values)?))
        }
    }
}

/// Writes sparse storage in coordinate format and dense storage in array format.
pub fn write_matrix_market(path: &Path, storage: &Storage) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        match storage {
            Storage::Sparse(s) => {
                writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
                writeln!(w, "{} {} {}", s.nrows(), s.ncols(), s.nnz())?;
                for (i, j, v) in s.triplets() {
                    writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
                }
            }
            Storage::Dense(d) => {
                writeln!(w, "%%MatrixMarket matrix array real general")?;
                writeln!(w, "{} {}", d.nrows(), d.ncols())?;
                for v in d.as_slice() {
                    writeln!(w, "{v:e}")?;
                }
            }
        }
        w.flush()
    };
    write(&mut w).map_err(io_err(path))
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(no, l)| {
            let v: f64 = l.trim().parse().map_err(|_| parse_err(path, no + 1, format!("bad value {l:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(path, no + 1, "non-finite value"))
            }
        })
        .collect()
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(v.len() * 24);
    for x in v {
        out.push_str(&format!("{x:e}\n"));
    }
    fs::write(path, out).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        let s = SparseMatrix::from_triplets(3, 4, &[(0, 0, 0.1), (2, 3, -1.0 / 3.0), (1, 1, 1e-300)]).unwrap();
        write_matrix_market(&path, &Storage::Sparse(s.clone())).unwrap();
        assert_eq!(read_matrix_market(&path).unwrap(), Storage::Sparse(s));
    }

    #[test]
    fn array_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        let d = DenseMatrix::from_rows(&[[1.0, std::f64::consts::PI], [-0.0, 2.5e17]]).unwrap();
        write_matrix_market(&path, &Storage::Dense(d.clone())).unwrap();
        assert_eq!(read_matrix_market(&path).unwrap(), Storage::Dense(d));
    }

    #[test]
    fn reads_symmetric_coordinate_and_comments() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n\n2 2 2\n1 1 4\n2 1 -1\n";
        let Storage::Sparse(s) = parse_matrix_market(text, Path::new("x")).unwrap() else {
            panic!("expected sparse");
        };
        assert_eq!(s.to_dense(), DenseMatrix::from_rows(&[[4.0, -1.0], [-1.0, 0.0]]).unwrap());
    }

    #[test]
    fn rejects_malformed_input() {
        let p = Path::new("x");
        assert!(parse_matrix_market("", p).is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix coordinate complex general\n1 1 0\n", p).is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", p).is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n", p).is_err());
        assert!(parse_matrix_market("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n", p).is_err());
    }

    #[test]
    fn vector_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let v = vec![0.1, -2.0, 1e-20, 3.0e8];
        write_vector(&path, &v).unwrap();
        assert_eq!(read_vector(&path).unwrap(), v);
        fs::write(&path, "1.0\nabc\n").unwrap();
        assert!(matches!(read_vector(&path), Err(Error::Parse { line: 2, .. })));
    }
}
