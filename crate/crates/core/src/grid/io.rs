//! CSV field dumps: header `x,y,u1,u2` (vectors) or `x,y,d11,d12,d22`
//! (tensors), one row per node in storage order, 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Domain, TensorField, VectorField};
use crate::{Error, Result};

fn row_prefix(dom: &Domain, n: usize, out: &mut String) {
    let (i, j) = dom.ij(n);
    let (x, y) = dom.coords(i, j);
    let _ = write!(out, "{x:.16e},{y:.16e}");
}

pub fn vector_csv(u: &VectorField, dom: &Domain) -> Result<String> {
    if u.len() != dom.len() {
        return Err(Error::SizeMismatch {
            expected: dom.len(),
            got: u.len(),
        });
    }
    let mut s = String::from("x,y,u1,u2\n");
    for (n, v) in u.values.iter().enumerate() {
        row_prefix(dom, n, &mut s);
        let _ = writeln!(s, ",{:.16e},{:.16e}", v[0], v[1]);
    }
    Ok(s)
}

pub fn write_vector_csv(path: &Path, u: &VectorField, dom: &Domain) -> Result<()> {
    fs::write(path, vector_csv(u, dom)?)?;
    Ok(())
}

pub fn write_tensor_csv(path: &Path, t: &TensorField, dom: &Domain) -> Result<()> {
    if t.values.len() != dom.len() {
        return Err(Error::SizeMismatch {
            expected: dom.len(),
            got: t.values.len(),
        });
    }
    let mut s = String::from("x,y,d11,d12,d22\n");
    for (n, m) in t.values.iter().enumerate() {
        row_prefix(dom, n, &mut s);
        let _ = writeln!(s, ",{:.16e},{:.16e},{:.16e}", m[0][0], m[0][1], m[1][1]);
    }
    fs::write(path, s)?;
    Ok(())
}

/// Read a vector dump written by [`write_vector_csv`] for the same domain.
pub fn read_vector_csv(path: &Path, dom: &Domain) -> Result<VectorField> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "x,y,u1,u2" => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header x,y,u1,u2, found {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut values = Vec::with_capacity(dom.len());
    for (k, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", k + 2)))?;
        if cols.len() != 4 {
            return Err(Error::Parse(format!(
                "line {}: expected 4 columns, found {}",
                k + 2,
                cols.len()
            )));
        }
        values.push([cols[2], cols[3]]);
    }
    VectorField::from_values(dom, values)
}
