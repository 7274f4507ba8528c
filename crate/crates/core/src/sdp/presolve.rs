use std::collections::HashMap;

use super::problem::{Cone, ConicProblem, SparseRow};
use crate::error::{Error, Result};

/// Relative pivot threshold for declaring a row linearly dependent on earlier rows.
pub const PIVOT_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-9;

/// Structural report on a problem, produced before solving.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub num_vars: usize,
    pub num_rows: usize,
    pub row_rank: usize,
    pub nnz: usize,
    pub cones: Vec<Cone>,
    /// Original row indices removed as linearly dependent.
    pub dropped_rows: Vec<usize>,
    /// Free variables pinned by single-entry rows: `(variable, value)`.
    pub fixed_free: Vec<(usize, f64)>,
    /// Set when the equalities themselves are inconsistent.
    pub inconsistent: bool,
}

/// Problem after presolve, plus what is needed to map a solution back.
#[derive(Debug, Clone)]
pub(crate) struct Presolved {
    pub rows: Vec<SparseRow>,
    pub b: Vec<f64>,
    /// Original index of each kept row.
    pub kept: Vec<usize>,
    /// `(variable, value, original row)`.
    pub fixed: Vec<(usize, f64, usize)>,
    pub dropped: Vec<usize>,
    /// Farkas ray over the original rows when the equalities are inconsistent:
    /// `A'y = 0` and `b'y = 1`.
    pub inconsistent: Option<Vec<f64>>,
}

/// Rejects NaN/Inf data and out-of-range indices.
pub(crate) fn validate(p: &ConicProblem) -> Result<()> {
    let n = p.num_vars();
    if p.c.len() != n {
        return Err(Error::MalformedProblem(format!(
            "objective has {} entries but cones hold {n} variables",
            p.c.len()
        )));
    }
    if p.b.len() != p.rows.len() {
        return Err(Error::MalformedProblem(format!(
            "{} rows but {} right-hand sides",
            p.rows.len(),
            p.b.len()
        )));
    }
    if p.c.iter().chain(&p.b).any(|v| !v.is_finite()) {
        return Err(Error::MalformedProblem(
            "non-finite objective or right-hand side".into(),
        ));
    }
    for (r, row) in p.rows.iter().enumerate() {
        if row.idx.len() != row.val.len() {
            return Err(Error::MalformedProblem(format!(
                "row {r} has mismatched index/value lengths"
            )));
        }
        if let Some(&i) = row.idx.iter().find(|&&i| i >= n) {
            return Err(Error::MalformedProblem(format!(
                "row {r} references variable {i} >= {n}"
            )));
        }
        if row.val.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedProblem(format!(
                "row {r} has a non-finite coefficient"
            )));
        }
    }
    Ok(())
}

fn free_mask(p: &ConicProblem) -> Vec<bool> {
    let mut mask = vec![false; p.num_vars()];
    for (cone, off) in p.cones.iter().zip(p.offsets()) {
        if let Cone::Free(len) = cone {
            mask[off..off + len].iter_mut().for_each(|m| *m = true);
        }
    }
    mask
}

pub(crate) fn presolve(p: &ConicProblem) -> Result<Presolved> {
    validate(p)?;
    let free = free_mask(p);

    // Single-entry rows on free variables fix that variable outright.
    let mut fixed: Vec<(usize, f64, usize)> = Vec::new();
    let mut fixed_value: HashMap<usize, f64> = HashMap::new();
    let mut candidate = vec![true; p.rows.len()];
    for (r, row) in p.rows.iter().enumerate() {
        if row.nnz() == 1 && free[row.idx[0]] && !fixed_value.contains_key(&row.idx[0]) {
            let v = p.b[r] / row.val[0];
            fixed_value.insert(row.idx[0], v);
            fixed.push((row.idx[0], v, r));
            candidate[r] = false;
        }
    }

    let mut rows: Vec<SparseRow> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut orig: Vec<usize> = Vec::new();
    for (r, row) in p.rows.iter().enumerate() {
        if !candidate[r] {
            continue;
        }
        let mut rhs = p.b[r];
        let mut terms = Vec::with_capacity(row.nnz());
        for (&i, &v) in row.idx.iter().zip(&row.val) {
            match fixed_value.get(&i) {
                Some(&fv) => rhs -= v * fv,
                None => terms.push((i, v)),
            }
        }
        rows.push(SparseRow::from_terms(terms));
        b.push(rhs);
        orig.push(r);
    }

    // Gram matrix of the remaining rows.
    let m = rows.len();
    let mut gram = vec![0.0; m * m];
    let mut by_col: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for (r, row) in rows.iter().enumerate() {
        for (&i, &v) in row.idx.iter().zip(&row.val) {
            by_col.entry(i).or_default().push((r, v));
        }
    }
    for entries in by_col.values() {
        for (a, &(ra, va)) in entries.iter().enumerate() {
            for &(rb, vb) in &entries[a..] {
                gram[ra * m + rb] += va * vb;
                if ra != rb {
                    gram[rb * m + ra] += va * vb;
                }
            }
        }
    }

    // Incremental Cholesky over the kept rows; a tiny pivot marks dependence.
    let mut kept: Vec<usize> = Vec::new();
    let mut lower: Vec<Vec<f64>> = Vec::new();
    let mut dropped = Vec::new();
    let mut inconsistent = None;
    for k in 0..m {
        let gkk = gram[k * m + k];
        let r = kept.len();
        let mut l = vec![0.0; r];
        for a in 0..r {
            let mut s = gram[k * m + kept[a]];
            for c in 0..a {
                s -= lower[a][c] * l[c];
            }
            l[a] = s / lower[a][a];
        }
        let d = gkk - l.iter().map(|v| v * v).sum::<f64>();
        if gkk == 0.0 || d <= PIVOT_TOL * gkk {
            // a_k = sum alpha_j a_kept[j], alpha = L^{-T} l.
            let mut alpha = l.clone();
            for a in (0..r).rev() {
                let mut s = alpha[a];
                for c in a + 1..r {
                    s -= lower[c][a] * alpha[c];
                }
                alpha[a] = s / lower[a][a];
            }
            let predicted: f64 = alpha.iter().zip(&kept).map(|(al, &j)| al * b[j]).sum();
            let mismatch = b[k] - predicted;
            let scale = 1.0
                + b[k].abs()
                + alpha
                    .iter()
                    .zip(&kept)
                    .map(|(al, &j)| (al * b[j]).abs())
                    .sum::<f64>();
            if mismatch.abs() > CONSISTENCY_TOL * scale && inconsistent.is_none() {
                let mut y = vec![0.0; p.rows.len()];
                y[orig[k]] = 1.0 / mismatch;
                for (al, &j) in alpha.iter().zip(&kept) {
                    y[orig[j]] -= al / mismatch;
                }
                inconsistent = Some(y);
            }
            dropped.push(orig[k]);
            continue;
        }
        l.push(d.sqrt());
        lower.push(l);
        kept.push(k);
    }

    Ok(Presolved {
        rows: kept.iter().map(|&k| rows[k].clone()).collect(),
        b: kept.iter().map(|&k| b[k]).collect(),
        kept: kept.iter().map(|&k| orig[k]).collect(),
        fixed,
        dropped,
        inconsistent,
    })
}

/// Structural checks and rank report without solving.
pub fn assemble_check(p: &ConicProblem) -> Result<Diagnostics> {
    let pre = presolve(p)?;
    Ok(Diagnostics {
        num_vars: p.num_vars(),
        num_rows: p.num_rows(),
        row_rank: pre.kept.len() + pre.fixed.len(),
        nnz: p.nnz(),
        cones: p.cones.clone(),
        dropped_rows: pre.dropped.clone(),
        fixed_free: pre.fixed.iter().map(|&(i, v, _)| (i, v)).collect(),
        inconsistent: pre.inconsistent.is_some(),
    })
}
