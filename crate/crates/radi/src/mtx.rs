//! Matrix Market reading and writing.
//!
//! Supports `coordinate` and `array` formats with `real`, `integer` or `complex`
//! fields and `general`, `symmetric`, `hermitian` or `skew-symmetric` storage. Stored
//! triangles are expanded to the full matrix on read.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use radi_core::dense::{is_exactly_real, CMat, C64};
use radi_core::CscMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum MtxMatrix {
    Dense(CMat),
    Sparse(CscMatrix),
}

impl MtxMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            MtxMatrix::Dense(m) => m.shape(),
            MtxMatrix::Sparse(s) => (s.nrows(), s.ncols()),
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            MtxMatrix::Dense(m) => m.clone(),
            MtxMatrix::Sparse(s) => s.to_dense(),
        }
    }

    pub fn into_sparse(self) -> CscMatrix {
        match self {
            MtxMatrix::Dense(m) => CscMatrix::from_dense(&m),
            MtxMatrix::Sparse(s) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    Real,
    Integer,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
    Skew,
}

impl Symmetry {
    fn mirror(self, v: C64) -> C64 {
        match self {
            Symmetry::General | Symmetry::Symmetric => v,
            Symmetry::Hermitian => v.conj(),
            Symmetry::Skew => -v,
        }
    }
}

pub fn read_matrix_market(path: &Path) -> Result<MtxMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text, path)
}

/// Parses file contents; `path` only labels error messages.
pub fn parse_matrix_market(text: &str, path: &Path) -> Result<MtxMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::parse(path, hline, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(Error::parse(path, hline, format!("unsupported format '{other}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        other => return Err(Error::parse(path, hline, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(Error::parse(path, hline, format!("unsupported symmetry '{other}'"))),
    };
    if symmetry == Symmetry::Hermitian && field != Field::Complex {
        return Err(Error::parse(path, hline, "hermitian storage requires a complex field"));
    }

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('%')
    });
    let (sline, size) = data
        .next()
        .ok_or_else(|| Error::parse(path, hline, "missing size line"))?;
    let dims = parse_usizes(size, path, sline)?;
    let (rows, cols, nnz) = match (coordinate, dims.as_slice()) {
        (true, &[r, c, z]) => (r, c, z),
        (false, &[r, c]) => (r, c, 0),
        _ => return Err(Error::parse(path, sline, "malformed size line")),
    };
    let total = rows
        .checked_mul(cols)
        .filter(|&t| t <= isize::MAX as usize / 16)
        .ok_or_else(|| Error::parse(path, sline, "dimension overflow"))?;
    if symmetry != Symmetry::General && rows != cols {
        return Err(Error::parse(path, sline, "symmetric storage requires a square matrix"));
    }
    if coordinate && nnz > total {
        return Err(Error::parse(path, sline, "dimension overflow: more entries than matrix positions"));
    }

    let value_tokens = if field == Field::Complex { 2 } else { 1 };
    let mut last_line = sline;
    if coordinate {
        let mut triplets = Vec::with_capacity(nnz * if symmetry == Symmetry::General { 1 } else { 2 });
        let mut count = 0;
        for (ln, line) in data {
            last_line = ln;
            if count == nnz {
                return Err(Error::parse(path, ln, format!("more than the declared {nnz} entries")));
            }
            let mut it = line.split_whitespace();
            let i = parse_index(it.next(), rows, path, ln)?;
            let j = parse_index(it.next(), cols, path, ln)?;
            let v = parse_value(&mut it, field, value_tokens, path, ln)?;
            if it.next().is_some() {
                return Err(Error::parse(path, ln, "trailing tokens"));
            }
            push_entry(&mut triplets, symmetry, i, j, v, path, ln)?;
            count += 1;
        }
        if count != nnz {
            return Err(Error::parse(
                path,
                last_line,
                format!("expected {nnz} entries, found {count}"),
            ));
        }
        let csc = CscMatrix::from_triplets(rows, cols, &triplets).map_err(Error::Solver)?;
        Ok(MtxMatrix::Sparse(csc))
    } else {
        // column-major; only the lower triangle for non-general storage
        let positions: Vec<(usize, usize)> = (0..cols)
            .flat_map(|j| {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Skew => j + 1,
                    _ => j,
                };
                (start..rows).map(move |i| (i, j))
            })
            .collect();
        let mut m = CMat::zeros(rows, cols);
        let mut k = 0;
        for (ln, line) in data {
            last_line = ln;
            let mut it = line.split_whitespace();
            while let Some(first) = it.next() {
                if k == positions.len() {
                    return Err(Error::parse(path, ln, "more values than the declared size"));
                }
                let mut rest = std::iter::once(first).chain(&mut it);
                let v = parse_value(&mut rest, field, value_tokens, path, ln)?;
                let (i, j) = positions[k];
                m[(i, j)] = v;
                if i != j && symmetry != Symmetry::General {
                    m[(j, i)] = symmetry.mirror(v);
                }
                k += 1;
            }
        }
        if k != positions.len() {
            return Err(Error::parse(
                path,
                last_line,
                format!("expected {} values, found {k}", positions.len()),
            ));
        }
        Ok(MtxMatrix::Dense(m))
    }
}

fn parse_usizes(line: &str, path: &Path, ln: usize) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::parse(path, ln, format!("invalid size '{t}' (dimension overflow or not an integer)")))
        })
        .collect()
}

fn parse_index(tok: Option<&str>, bound: usize, path: &Path, ln: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::parse(path, ln, "missing index"))?;
    let i: usize = tok
        .parse()
        .map_err(|_| Error::parse(path, ln, format!("invalid index '{tok}'")))?;
    if i == 0 || i > bound {
        return Err(Error::parse(path, ln, format!("index {i} out of range 1..={bound}")));
    }
    Ok(i - 1)
}

fn parse_value<'a, I: Iterator<Item = &'a str>>(
    it: &mut I,
    field: Field,
    ntok: usize,
    path: &Path,
    ln: usize,
) -> Result<C64> {
    let mut parts = [0.0f64; 2];
    for slot in parts.iter_mut().take(ntok) {
        let tok = it.next().ok_or_else(|| Error::parse(path, ln, "missing value"))?;
        *slot = match field {
            Field::Integer => tok
                .parse::<i64>()
                .map(|v| v as f64)
                .map_err(|_| Error::parse(path, ln, format!("invalid integer '{tok}'")))?,
            _ => tok
                .parse::<f64>()
                .map_err(|_| Error::parse(path, ln, format!("invalid number '{tok}'")))?,
        };
    }
    Ok(C64::new(parts[0], parts[1]))
}

fn push_entry(
    t: &mut Vec<(usize, usize, C64)>,
    symmetry: Symmetry,
    i: usize,
    j: usize,
    v: C64,
    path: &Path,
    ln: usize,
) -> Result<()> {
    if symmetry != Symmetry::General {
        if i < j {
            return Err(Error::parse(path, ln, "symmetric storage lists only the lower triangle"));
        }
        if symmetry == Symmetry::Skew && i == j {
            return Err(Error::parse(path, ln, "skew-symmetric storage has no diagonal entries"));
        }
    }
    t.push((i, j, v));
    if i != j && symmetry != Symmetry::General {
        t.push((j, i, symmetry.mirror(v)));
    }
    Ok(())
}

fn field_name(real: bool) -> &'static str {
    if real {
        "real"
    } else {
        "complex"
    }
}

fn push_value(out: &mut String, v: C64, real: bool) {
    if real {
        let _ = write!(out, "{:.16e}", v.re);
    } else {
        let _ = write!(out, "{:.16e} {:.16e}", v.re, v.im);
    }
}

/// Array format, `real` when every entry is real.
pub fn format_dense(m: &CMat) -> String {
    let real = is_exactly_real(m);
    let mut out = format!(
        "%%MatrixMarket matrix array {} general\n{} {}\n",
        field_name(real),
        m.nrows(),
        m.ncols()
    );
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            push_value(&mut out, m[(i, j)], real);
            out.push('\n');
        }
    }
    out
}

/// Coordinate format, `real` when every stored entry is real.
pub fn format_sparse(s: &CscMatrix) -> String {
    let real = s.is_real();
    let mut out = format!(
        "%%MatrixMarket matrix coordinate {} general\n{} {} {}\n",
        field_name(real),
        s.nrows(),
        s.ncols(),
        s.nnz()
    );
    for (i, j, v) in s.triplets() {
        let _ = write!(out, "{} {} ", i + 1, j + 1);
        push_value(&mut out, v, real);
        out.push('\n');
    }
    out
}

pub fn write_dense(path: &Path, m: &CMat) -> Result<()> {
    fs::write(path, format_dense(m)).map_err(|e| Error::io(path, e))
}

pub fn write_sparse(path: &Path, s: &CscMatrix) -> Result<()> {
    fs::write(path, format_sparse(s)).map_err(|e| Error::io(path, e))
}
