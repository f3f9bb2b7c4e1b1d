//! Plain-text complex matrix dumps.
//!
//! ```text
//! # complex-matrix rows=2 cols=2
//! 1.0e0 0.0e0
//! 0.0e0 -1.0e0
//! ...
//! ```
//!
//! One `re im` pair per line, row-major, printed with 17 significant digits
//! so a write/read cycle is exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

pub fn format_matrix(m: &CMat) -> String {
    let mut s = String::with_capacity(m.len() * 48 + 48);
    let _ = writeln!(s, "# complex-matrix rows={} cols={}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let _ = writeln!(s, "{:.16e} {:.16e}", z.re, z.im);
        }
    }
    s
}

pub fn parse_matrix(text: &str) -> Result<CMat> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix dump".into()))?;
    let rest = header
        .strip_prefix("# complex-matrix")
        .ok_or_else(|| Error::Parse(format!("bad header `{header}`")))?;
    let mut rows = None;
    let mut cols = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("rows=") {
            rows = v.parse::<usize>().ok();
        } else if let Some(v) = tok.strip_prefix("cols=") {
            cols = v.parse::<usize>().ok();
        }
    }
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) => (r, c),
        _ => return Err(Error::Parse(format!("header needs rows= and cols=: `{header}`"))),
    };
    let mut m = CMat::zeros(rows, cols);
    let mut n = 0;
    for line in lines {
        if line.starts_with('#') {
            continue;
        }
        if n >= rows * cols {
            return Err(Error::Parse("more values than the header declares".into()));
        }
        let mut it = line.split_whitespace();
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| Error::Parse(format!("line `{line}` needs two numbers")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("`{line}`: {e}")))
        };
        let re = parse(it.next())?;
        let im = parse(it.next())?;
        m[(n / cols, n % cols)] = C64::new(re, im);
        n += 1;
    }
    if n != rows * cols {
        return Err(Error::Parse(format!("expected {} values, found {n}", rows * cols)));
    }
    Ok(m)
}

pub fn write_matrix(m: &CMat, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_matrix(m))?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<CMat> {
    parse_matrix(&std::fs::read_to_string(path)?)
}
