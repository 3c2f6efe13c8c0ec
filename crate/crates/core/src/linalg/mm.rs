//! Matrix Market exchange format (coordinate and array, complex general).
//!
//! Values are written with 17 significant digits so that a round trip is
//! exact. The reader also accepts `real` and `symmetric` files.

use std::fmt::Write as _;
use std::path::Path;

use super::{CsrMatrix, DenseMatrix, TripletBuilder};
use crate::{Error, Result, C64};

fn fmt_value(out: &mut String, v: C64) {
    let _ = write!(out, "{:.16e} {:.16e}", v.re, v.im);
}

pub fn coordinate_to_string(a: &CsrMatrix) -> String {
    let mut s = String::with_capacity(48 * a.nnz() + 64);
    s.push_str("%%MatrixMarket matrix coordinate complex general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let _ = write!(s, "{} {} ", i + 1, j + 1);
            fmt_value(&mut s, v);
            s.push('\n');
        }
    }
    s
}

pub fn array_to_string(m: &DenseMatrix) -> String {
    let mut s = String::with_capacity(48 * m.nrows() * m.ncols() + 64);
    s.push_str("%%MatrixMarket matrix array complex general\n");
    let _ = writeln!(s, "{} {}", m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for &v in m.col(j) {
            fmt_value(&mut s, v);
            s.push('\n');
        }
    }
    s
}

pub fn write_coordinate(path: &Path, a: &CsrMatrix) -> Result<()> {
    std::fs::write(path, coordinate_to_string(a)).map_err(|e| Error::io(path, e))
}

pub fn write_array(path: &Path, m: &DenseMatrix) -> Result<()> {
    std::fs::write(path, array_to_string(m)).map_err(|e| Error::io(path, e))
}

/// Writes a vector as an `n x 1` array.
pub fn write_vector(path: &Path, v: &[C64]) -> Result<()> {
    write_array(path, &DenseMatrix::from_columns(v.len(), &[v.to_vec()]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    Real,
    Complex,
}

struct Header {
    coordinate: bool,
    field: Field,
    symmetric: bool,
}

fn parse_header(line: &str, src: &str) -> Result<Header> {
    let err = |msg: &str| Error::Parse {
        path: src.to_string(),
        msg: msg.to_string(),
    };
    let toks: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(err("missing %%MatrixMarket matrix header"));
    }
    let coordinate = match toks[2].as_str() {
        "coordinate" => true,
        "array" => false,
        _ => return Err(err("format must be coordinate or array")),
    };
    let field = match toks[3].as_str() {
        "real" | "integer" => Field::Real,
        "complex" => Field::Complex,
        _ => return Err(err("unsupported field")),
    };
    let symmetric = match toks[4].as_str() {
        "general" => false,
        "symmetric" => true,
        _ => return Err(err("unsupported symmetry")),
    };
    Ok(Header {
        coordinate,
        field,
        symmetric,
    })
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().skip(1).map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, src: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
        path: src.to_string(),
        msg: format!("bad number {tok:?}"),
    })
}

fn parse_value<'a>(it: &mut impl Iterator<Item = &'a str>, field: Field, src: &str) -> Result<C64> {
    let re: f64 = parse_num(it.next(), src)?;
    let im: f64 = match field {
        Field::Complex => parse_num(it.next(), src)?,
        Field::Real => 0.0,
    };
    Ok(C64::new(re, im))
}

pub fn coordinate_from_str(text: &str, src: &str) -> Result<CsrMatrix> {
    let first = text.lines().next().unwrap_or("");
    let h = parse_header(first, src)?;
    if !h.coordinate {
        return Err(Error::Parse {
            path: src.into(),
            msg: "expected coordinate format".into(),
        });
    }
    let mut lines = data_lines(text);
    let size = lines.next().ok_or_else(|| Error::Parse {
        path: src.into(),
        msg: "missing size line".into(),
    })?;
    let mut it = size.split_whitespace();
    let nrows: usize = parse_num(it.next(), src)?;
    let ncols: usize = parse_num(it.next(), src)?;
    let nnz: usize = parse_num(it.next(), src)?;
    let mut b = TripletBuilder::with_capacity(nrows, ncols, nnz);
    let mut count = 0;
    for line in lines {
        let mut it = line.split_whitespace();
        let i: usize = parse_num(it.next(), src)?;
        let j: usize = parse_num(it.next(), src)?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(Error::Parse {
                path: src.into(),
                msg: format!("entry ({i}, {j}) out of range"),
            });
        }
        let v = parse_value(&mut it, h.field, src)?;
        b.push(i - 1, j - 1, v);
        if h.symmetric && i != j {
            b.push(j - 1, i - 1, v);
        }
        count += 1;
    }
    if count != nnz {
        return Err(Error::Parse {
            path: src.into(),
            msg: format!("expected {nnz} entries, found {count}"),
        });
    }
    b.build()
}

pub fn array_from_str(text: &str, src: &str) -> Result<DenseMatrix> {
    let first = text.lines().next().unwrap_or("");
    let h = parse_header(first, src)?;
    if h.coordinate || h.symmetric {
        return Err(Error::Parse {
            path: src.into(),
            msg: "expected general array format".into(),
        });
    }
    let mut lines = data_lines(text);
    let size = lines.next().ok_or_else(|| Error::Parse {
        path: src.into(),
        msg: "missing size line".into(),
    })?;
    let mut it = size.split_whitespace();
    let nrows: usize = parse_num(it.next(), src)?;
    let ncols: usize = parse_num(it.next(), src)?;
    let mut vals = Vec::with_capacity(nrows * ncols);
    for line in lines {
        let mut it = line.split_whitespace();
        vals.push(parse_value(&mut it, h.field, src)?);
    }
    if vals.len() != nrows * ncols {
        return Err(Error::Parse {
            path: src.into(),
            msg: format!("expected {} values, found {}", nrows * ncols, vals.len()),
        });
    }
    let cols: Vec<Vec<C64>> = vals.chunks(nrows.max(1)).map(<[C64]>::to_vec).collect();
    if nrows == 0 {
        return Ok(DenseMatrix::zeros(0, ncols));
    }
    Ok(DenseMatrix::from_columns(nrows, &cols))
}

pub fn read_coordinate(path: &Path) -> Result<CsrMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    coordinate_from_str(&text, &path.display().to_string())
}

pub fn read_array(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    array_from_str(&text, &path.display().to_string())
}
