//! Matrix Market reader (coordinate and array layouts, real or integer fields).

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_matrix_market(&text, path)
}

/// Parses Matrix Market text; `origin` is only used in error messages.
pub fn parse_matrix_market(text: &str, origin: &Path) -> Result<DenseMatrix> {
    let err = |line: usize, msg: String| Error::MatrixMarket {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(1, format!("bad header `{header}`")));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(err(1, format!("unknown format `{other}`"))),
    };
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        "complex" => return Err(Error::ComplexField(PathBuf::from(origin))),
        "pattern" => return Err(Error::PatternField(PathBuf::from(origin))),
        other => return Err(err(1, format!("unknown field `{other}`"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(err(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_no, size_line) = body
        .next()
        .ok_or_else(|| err(1, "missing size line".into()))?;
    let size_no = size_no + 1;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(size_no, format!("bad size line: {e}")))?;
    let expected = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != expected {
        return Err(err(
            size_no,
            format!("expected {expected} integers on the size line"),
        ));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && rows != cols {
        return Err(err(
            size_no,
            "symmetric storage requires a square matrix".into(),
        ));
    }
    let mut m = DenseMatrix::zeros(rows, cols);

    let parse_value = |no: usize, t: Option<&str>| -> Result<f64> {
        let t = t.ok_or_else(|| err(no, "missing value".into()))?;
        let v: f64 = t.parse().map_err(|_| err(no, format!("bad value `{t}`")))?;
        if !v.is_finite() {
            return Err(err(no, format!("non-finite value `{t}`")));
        }
        Ok(v)
    };

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut seen = 0;
            for (no, line) in body {
                let no = no + 1;
                let mut it = line.split_whitespace();
                let mut index = |what: &str, bound: usize| -> Result<usize> {
                    let t = it
                        .next()
                        .ok_or_else(|| err(no, format!("missing {what} index")))?;
                    let i: usize = t
                        .parse()
                        .map_err(|_| err(no, format!("bad {what} index `{t}`")))?;
                    if i == 0 || i > bound {
                        return Err(err(no, format!("{what} index {i} outside 1..={bound}")));
                    }
                    Ok(i - 1)
                };
                let i = index("row", rows)?;
                let j = index("column", cols)?;
                let v = parse_value(no, it.next())?;
                m.set(i, j, v);
                if i != j {
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => m.set(j, i, v),
                        Symmetry::SkewSymmetric => m.set(j, i, -v),
                    }
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(err(
                    size_no,
                    format!("header promises {nnz} entries, found {seen}"),
                ));
            }
        }
        Layout::Array => {
            // Column-major; symmetric storage lists the lower triangle only.
            let mut positions = Vec::new();
            for j in 0..cols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::SkewSymmetric => j + 1,
                };
                for i in start..rows {
                    positions.push((i, j));
                }
            }
            let mut values = Vec::with_capacity(positions.len());
            for (no, line) in body {
                for t in line.split_whitespace() {
                    values.push(parse_value(no + 1, Some(t))?);
                }
            }
            if values.len() != positions.len() {
                return Err(err(
                    size_no,
                    format!(
                        "expected {} array values, found {}",
                        positions.len(),
                        values.len()
                    ),
                ));
            }
            for ((i, j), v) in positions.into_iter().zip(values) {
                m.set(i, j, v);
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric => m.set(j, i, v),
                    Symmetry::SkewSymmetric => m.set(j, i, -v),
                }
            }
        }
    }
    Ok(m)
}
