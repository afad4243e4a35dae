//! Matrix Market reader for dense real matrices.
//!
//! Supports the `matrix` object in `coordinate` and `array` layouts, with
//! `real`, `integer` or `pattern` fields and `general`, `symmetric` or
//! `skew-symmetric` storage. Complex data is rejected.

use std::io::BufRead;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

fn fail(line: usize, message: impl Into<String>) -> Error {
    Error::MatrixMarket {
        line,
        message: message.into(),
    }
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let file = std::fs::File::open(path)?;
    read_matrix_market(std::io::BufReader::new(file))
}

pub fn parse_matrix_market(text: &str) -> Result<DMatrix<f64>> {
    read_matrix_market(text.as_bytes())
}

pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<DMatrix<f64>> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (n, header) = match lines.next() {
        Some((n, l)) => (n, l?),
        None => return Err(fail(1, "empty input")),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(fail(n, "expected header '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    if tokens[1] != "matrix" {
        return Err(fail(n, format!("unsupported object '{}'", tokens[1])));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(fail(n, format!("unsupported layout '{other}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(fail(n, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(fail(n, format!("unsupported symmetry '{other}'"))),
    };
    if layout == Layout::Array && field == Field::Pattern {
        return Err(fail(n, "pattern field requires coordinate layout"));
    }

    // Remaining non-comment, non-blank lines.
    let mut data = Vec::new();
    for (n, l) in lines {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        data.push((n, t.to_string()));
    }
    let mut data = data.into_iter();
    let (size_line, size) = data.next().ok_or_else(|| fail(n, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| fail(size_line, format!("bad size entry '{s}'"))))
        .collect::<Result<_>>()?;
    let want = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(fail(size_line, format!("size line needs {want} integers")));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetry != Symmetry::General && rows != cols {
        return Err(fail(size_line, "symmetric storage requires a square matrix"));
    }
    let mut m = DMatrix::zeros(rows, cols);

    let parse_value = |line: usize, s: &str| -> Result<f64> {
        let v: f64 = match field {
            Field::Integer => s
                .parse::<i64>()
                .map(|v| v as f64)
                .map_err(|_| fail(line, format!("bad integer '{s}'")))?,
            _ => s.parse().map_err(|_| fail(line, format!("bad value '{s}'")))?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(line, "non-finite value"))
        }
    };

    let place = |line: usize, i: usize, j: usize, v: f64, m: &mut DMatrix<f64>| -> Result<()> {
        match symmetry {
            Symmetry::General => m[(i, j)] = v,
            Symmetry::Symmetric => {
                if j > i {
                    return Err(fail(line, "symmetric storage lists the lower triangle only"));
                }
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
            Symmetry::Skew => {
                if j >= i {
                    return Err(fail(line, "skew-symmetric storage lists the strict lower triangle only"));
                }
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        Ok(())
    };

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut seen = 0;
            for (line, text) in data {
                let parts: Vec<&str> = text.split_whitespace().collect();
                let want = if field == Field::Pattern { 2 } else { 3 };
                if parts.len() != want {
                    return Err(fail(line, format!("expected {want} fields, found {}", parts.len())));
                }
                let index = |s: &str, bound: usize| -> Result<usize> {
                    match s.parse::<usize>() {
                        Ok(k) if (1..=bound).contains(&k) => Ok(k - 1),
                        _ => Err(fail(line, format!("index '{s}' outside 1..={bound}"))),
                    }
                };
                let i = index(parts[0], rows)?;
                let j = index(parts[1], cols)?;
                let v = if field == Field::Pattern {
                    1.0
                } else {
                    parse_value(line, parts[2])?
                };
                place(line, i, j, v, &mut m)?;
                seen += 1;
                if seen > nnz {
                    return Err(fail(line, format!("more than the declared {nnz} entries")));
                }
            }
            if seen != nnz {
                return Err(fail(size_line, format!("declared {nnz} entries, found {seen}")));
            }
        }
        Layout::Array => {
            // Column-major; symmetric variants store the lower triangle.
            let mut slots = Vec::new();
            for j in 0..cols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                for i in start..rows {
                    slots.push((i, j));
                }
            }
            let mut k = 0;
            for (line, text) in data {
                for s in text.split_whitespace() {
                    let &(i, j) = slots
                        .get(k)
                        .ok_or_else(|| fail(line, format!("more than the expected {} values", slots.len())))?;
                    place(line, i, j, parse_value(line, s)?, &mut m)?;
                    k += 1;
                }
            }
            if k != slots.len() {
                return Err(fail(size_line, format!("expected {} values, found {k}", slots.len())));
            }
        }
    }
    Ok(m)
}
