//! Line-oriented text dump of a [`ConicProblem`].
//!
//! ```text
//! conic v1
//! cones 2
//! psd 2
//! free 1
//! objective 1
//! 3 1e0
//! rows 1
//! 1e0 2 0:1e0 2:-1e0
//! ```
//!
//! Objective lines are `index value`; each row line is `rhs nnz index:value ...`.
//! Floats use the shortest representation that round-trips exactly.

use std::fmt::Write as _;

use super::problem::{Cone, ConicProblem, SparseRow};
use crate::error::{Error, Result};

pub fn dump(p: &ConicProblem) -> String {
    let mut out = String::from("conic v1\n");
    let _ = writeln!(out, "cones {}", p.cones.len());
    for cone in &p.cones {
        let _ = match cone {
            Cone::Psd(d) => writeln!(out, "psd {d}"),
            Cone::Nonneg(n) => writeln!(out, "nonneg {n}"),
            Cone::Free(n) => writeln!(out, "free {n}"),
        };
    }
    let obj: Vec<(usize, f64)> =
        p.c.iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| *v != 0.0)
            .collect();
    let _ = writeln!(out, "objective {}", obj.len());
    for (i, v) in obj {
        let _ = writeln!(out, "{i} {v:e}");
    }
    let _ = writeln!(out, "rows {}", p.rows.len());
    for (row, b) in p.rows.iter().zip(&p.b) {
        let _ = write!(out, "{b:e} {}", row.nnz());
        for (i, v) in row.idx.iter().zip(&row.val) {
            let _ = write!(out, " {i}:{v:e}");
        }
        out.push('\n');
    }
    out
}

fn bad(line: usize, msg: &str) -> Error {
    Error::MalformedProblem(format!("dump line {}: {msg}", line + 1))
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(line, "expected a number"))
}

pub fn load(text: &str) -> Result<ConicProblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::MalformedProblem(format!("dump ends before {what}")))
    };

    let (ln, header) = next("header")?;
    if header.trim() != "conic v1" {
        return Err(bad(ln, "expected `conic v1`"));
    }
    let (ln, l) = next("cones")?;
    let mut t = l.split_whitespace();
    if t.next() != Some("cones") {
        return Err(bad(ln, "expected `cones`"));
    }
    let ncones: usize = num(t.next(), ln)?;
    let mut cones = Vec::with_capacity(ncones);
    for _ in 0..ncones {
        let (ln, l) = next("cone")?;
        let mut t = l.split_whitespace();
        let kind = t.next();
        let size: usize = num(t.next(), ln)?;
        cones.push(match kind {
            Some("psd") => Cone::Psd(size),
            Some("nonneg") => Cone::Nonneg(size),
            Some("free") => Cone::Free(size),
            _ => return Err(bad(ln, "unknown cone")),
        });
    }
    let n: usize = cones.iter().map(Cone::len).sum();

    let (ln, l) = next("objective")?;
    let mut t = l.split_whitespace();
    if t.next() != Some("objective") {
        return Err(bad(ln, "expected `objective`"));
    }
    let nobj: usize = num(t.next(), ln)?;
    let mut c = vec![0.0; n];
    for _ in 0..nobj {
        let (ln, l) = next("objective entry")?;
        let mut t = l.split_whitespace();
        let i: usize = num(t.next(), ln)?;
        let v: f64 = num(t.next(), ln)?;
        *c.get_mut(i)
            .ok_or_else(|| bad(ln, "objective index out of range"))? = v;
    }

    let (ln, l) = next("rows")?;
    let mut t = l.split_whitespace();
    if t.next() != Some("rows") {
        return Err(bad(ln, "expected `rows`"));
    }
    let nrows: usize = num(t.next(), ln)?;
    let mut rows = Vec::with_capacity(nrows);
    let mut b = Vec::with_capacity(nrows);
    for _ in 0..nrows {
        let (ln, l) = next("row")?;
        let mut t = l.split_whitespace();
        b.push(num(t.next(), ln)?);
        let nnz: usize = num(t.next(), ln)?;
        let mut row = SparseRow::default();
        for _ in 0..nnz {
            let (i, v) = t
                .next()
                .and_then(|e| e.split_once(':'))
                .ok_or_else(|| bad(ln, "expected index:value"))?;
            row.idx.push(num(Some(i), ln)?);
            row.val.push(num(Some(v), ln)?);
        }
        rows.push(row);
    }
    let p = ConicProblem { cones, c, rows, b };
    super::presolve::validate(&p)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let p = ConicProblem {
            cones: vec![Cone::Psd(2), Cone::Nonneg(1), Cone::Free(1)],
            c: vec![0.1, 0.0, 1.0 / 3.0, 0.0, -7.25e-300],
            rows: vec![
                SparseRow {
                    idx: vec![0, 2],
                    val: vec![1.0, std::f64::consts::PI],
                },
                SparseRow {
                    idx: vec![1, 4],
                    val: vec![std::f64::consts::FRAC_1_SQRT_2, -1e17],
                },
            ],
            b: vec![1.0, 2.0f64.sqrt()],
        };
        let text = dump(&p);
        assert!(text.starts_with("conic v1\ncones 3\npsd 2\n"));
        assert_eq!(load(&text).unwrap(), p);
    }

    #[test]
    fn garbage_rejected() {
        assert!(load("conic v2\n").is_err());
        assert!(load("conic v1\ncones 1\ncube 3\n").is_err());
        assert!(load("conic v1\ncones 1\nfree 1\nobjective 1\n5 1e0\nrows 0\n").is_err());
    }
}
