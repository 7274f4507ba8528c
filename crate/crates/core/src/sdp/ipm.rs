use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use super::presolve::{presolve, Presolved};
use super::problem::{mat_to_svec, svec_index, svec_to_mat, Cone, ConicProblem, SparseRow};
use crate::error::Result;

/// Tuning knobs for [`solve_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub max_iter: usize,
    /// Relative primal/dual residual tolerance.
    pub tol_feas: f64,
    /// Relative duality gap tolerance.
    pub tol_gap: f64,
    /// Tolerance on the normalized infeasibility rays.
    pub tol_infeas: f64,
    pub step_fraction: f64,
    pub regularization: f64,
    /// Fraction by which a warm start is pulled toward the central point.
    pub warm_push: f64,
    pub refine_steps: usize,
    /// When progress stalls, the best iterate is still reported `Optimal` if
    /// its residuals are below `tol_reduced` and its gap below
    /// `tol_reduced_gap` (flagged `reduced_accuracy`).
    pub tol_reduced: f64,
    pub tol_reduced_gap: f64,
    /// Consecutive steps shorter than `1e-4` before the run counts as stalled.
    pub stagnation_steps: usize,
    /// Iterations allowed without halving the merit `max(pres, dres, gap)`.
    pub progress_window: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol_feas: 1e-7,
            tol_gap: 1e-7,
            tol_infeas: 1e-7,
            step_fraction: 0.98,
            regularization: 1e-9,
            warm_push: 0.1,
            refine_steps: 2,
            tol_reduced: 1e-6,
            tol_reduced_gap: 1e-6,
            stagnation_steps: 8,
            progress_window: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    Stall,
}

/// Result of a solve. Vectors use the original problem layout.
///
/// For `PrimalInfeasible`, `y` is a Farkas ray normalized to `b'y = -1` with
/// `A'y` in the dual cone (zero on free variables), and `s = A'y`. For
/// `DualInfeasible`, `x` is a primal ray with `A x = 0`, `x` in the cone and
/// `c'x = -1`.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Relative duality gap.
    pub gap: f64,
    /// `||Ax - b|| / (1 + ||b||)`.
    pub primal_residual: f64,
    /// `||A'y + s - c|| / (1 + ||c||)`.
    pub dual_residual: f64,
    /// Sum over cone blocks of `|<x_k, s_k>|`.
    pub complementarity: f64,
    pub iterations: usize,
    /// `Optimal` was reached only at the relaxed tolerance.
    pub reduced_accuracy: bool,
}

/// Primal/dual starting point in the original layout.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

impl SolveOutcome {
    pub fn warm_start(&self) -> WarmStart {
        WarmStart {
            x: self.x.clone(),
            y: self.y.clone(),
            s: self.s.clone(),
        }
    }
}

/// Solves with default settings.
pub fn solve(p: &ConicProblem, warm: Option<&WarmStart>) -> Result<SolveOutcome> {
    solve_with(p, warm, &SolverSettings::default())
}

#[derive(Clone, Copy)]
enum Owner {
    Psd { block: usize, p: usize, q: usize },
    Nonneg { block: usize, k: usize },
    Free(usize),
    Fixed,
}

struct Layout {
    psd: Vec<(usize, usize)>,
    nonneg: Vec<(usize, usize)>,
    /// Unfixed free variables, original indices.
    free: Vec<usize>,
    /// Whether an index takes part in the reduced problem.
    active: Vec<bool>,
    degree: usize,
}

/// Per-block view of the rows, used to form the Schur complement.
struct RowMaps {
    /// For each PSD block: `(row, entries (p <= q, A[p,q]))`.
    psd: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>>,
    /// For each nonneg block, per variable: `(row, coef)`.
    nonneg: Vec<Vec<Vec<(usize, f64)>>>,
    /// Dense `m x nf` free-variable columns.
    free: DMatrix<f64>,
}

fn build_layout(p: &ConicProblem, pre: &Presolved) -> (Layout, Vec<Owner>) {
    let n = p.num_vars();
    let mut owner = vec![Owner::Fixed; n];
    let mut psd = Vec::new();
    let mut nonneg = Vec::new();
    for (cone, off) in p.cones.iter().zip(p.offsets()) {
        match *cone {
            Cone::Psd(d) => {
                let block = psd.len();
                for q in 0..d {
                    for pp in 0..=q {
                        owner[off + svec_index(pp, q)] = Owner::Psd { block, p: pp, q };
                    }
                }
                psd.push((off, d));
            }
            Cone::Nonneg(len) => {
                let block = nonneg.len();
                for k in 0..len {
                    owner[off + k] = Owner::Nonneg { block, k };
                }
                nonneg.push((off, len));
            }
            Cone::Free(len) => {
                for o in &mut owner[off..off + len] {
                    *o = Owner::Free(0);
                }
            }
        }
    }
    for &(v, _, _) in &pre.fixed {
        owner[v] = Owner::Fixed;
    }
    let mut free = Vec::new();
    for (k, o) in owner.iter_mut().enumerate() {
        if let Owner::Free(j) = o {
            *j = free.len();
            free.push(k);
        }
    }
    let active = owner.iter().map(|o| !matches!(o, Owner::Fixed)).collect();
    (
        Layout {
            psd,
            nonneg,
            free,
            active,
            degree: p.degree(),
        },
        owner,
    )
}

fn build_row_maps(layout: &Layout, owner: &[Owner], rows: &[SparseRow]) -> RowMaps {
    let mut psd: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>> = vec![Vec::new(); layout.psd.len()];
    let mut nonneg: Vec<Vec<Vec<(usize, f64)>>> = layout
        .nonneg
        .iter()
        .map(|&(_, len)| vec![Vec::new(); len])
        .collect();
    let mut free = DMatrix::zeros(rows.len(), layout.free.len());
    for (r, row) in rows.iter().enumerate() {
        for (&i, &v) in row.idx.iter().zip(&row.val) {
            match owner[i] {
                Owner::Psd { block, p, q } => {
                    let a = if p == q {
                        v
                    } else {
                        v / std::f64::consts::SQRT_2
                    };
                    let list = &mut psd[block];
                    if list.last().map(|e| e.0) != Some(r) {
                        list.push((r, Vec::new()));
                    }
                    list.last_mut().unwrap().1.push((p, q, a));
                }
                Owner::Nonneg { block, k } => nonneg[block][k].push((r, v)),
                Owner::Free(j) => free[(r, j)] = v,
                Owner::Fixed => {}
            }
        }
    }
    RowMaps { psd, nonneg, free }
}

/// NT scaling of one PSD block: `W = G G'`, `G^{-1} X G^{-T} = G' S G = diag(lambda)`.
struct PsdScale {
    g: DMatrix<f64>,
    gi_t: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

struct NnScale {
    /// `sqrt(x/s)`
    g: Vec<f64>,
    /// `sqrt(x s)`
    lambda: Vec<f64>,
}

struct Scaling {
    psd: Vec<PsdScale>,
    nn: Vec<NnScale>,
}

/// Scaled-space quantity, one entry per cone block.
#[derive(Clone)]
struct Comp {
    psd: Vec<DMatrix<f64>>,
    nn: Vec<Vec<f64>>,
}

struct Dir {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

/// Factorization of `D (K + reg) D` with the Jacobi scaling `D`.
struct Kkt {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    k0: DMatrix<f64>,
    d: DVector<f64>,
    refine: usize,
}

impl Kkt {
    fn solve_scaled(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let z = self.lu.solve(&rhs.component_mul(&self.d))?;
        Some(z.component_mul(&self.d))
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut sol = self.solve_scaled(rhs)?;
        for _ in 0..self.refine {
            let r = rhs - &self.k0 * &sol;
            sol += self.solve_scaled(&r)?;
        }
        Some(sol)
    }
}

struct Solver<'a> {
    layout: &'a Layout,
    maps: &'a RowMaps,
    rows: &'a [SparseRow],
    b: &'a [f64],
    c: &'a [f64],
    n: usize,
    m: usize,
    settings: &'a SolverSettings,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn jordan(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let ab = a * b;
    (&ab + ab.transpose()) * 0.5
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

impl<'a> Solver<'a> {
    fn ax(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(x)).collect()
    }

    fn aty(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (r, &yr) in self.rows.iter().zip(y) {
            if yr != 0.0 {
                r.axpy_into(yr, &mut out);
            }
        }
        out
    }

    fn active_norm(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(&self.layout.active)
            .filter(|(_, &a)| a)
            .map(|(x, _)| x * x)
            .sum::<f64>()
            .sqrt()
    }

    fn active_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.layout.active)
            .filter(|(_, &on)| on)
            .map(|((x, y), _)| x * y)
            .sum()
    }

    fn block_mat(&self, v: &[f64], b: usize) -> DMatrix<f64> {
        let (off, d) = self.layout.psd[b];
        svec_to_mat(&v[off..off + d * (d + 1) / 2], d)
    }

    fn set_block(&self, v: &mut [f64], b: usize, m: &DMatrix<f64>) {
        let (off, d) = self.layout.psd[b];
        mat_to_svec(m, &mut v[off..off + d * (d + 1) / 2]);
    }

    /// Cone-only product with the scaling operator `v -> W v W`; free and fixed
    /// positions come back zero.
    fn apply_w(&self, sc: &Scaling, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (b, ps) in sc.psd.iter().enumerate() {
            let vm = self.block_mat(v, b);
            let r = &ps.w * vm * &ps.w;
            self.set_block(&mut out, b, &r);
        }
        for (b, ns) in sc.nn.iter().enumerate() {
            let (off, len) = self.layout.nonneg[b];
            for k in 0..len {
                out[off + k] = ns.g[k] * ns.g[k] * v[off + k];
            }
        }
        out
    }

    fn scale_x(&self, sc: &Scaling, dx: &[f64]) -> Comp {
        let psd = sc
            .psd
            .iter()
            .enumerate()
            .map(|(b, ps)| ps.gi_t.transpose() * self.block_mat(dx, b) * &ps.gi_t)
            .collect();
        let nn = sc
            .nn
            .iter()
            .enumerate()
            .map(|(b, ns)| {
                let (off, len) = self.layout.nonneg[b];
                (0..len).map(|k| dx[off + k] / ns.g[k]).collect()
            })
            .collect();
        Comp { psd, nn }
    }

    fn scale_s(&self, sc: &Scaling, ds: &[f64]) -> Comp {
        let psd = sc
            .psd
            .iter()
            .enumerate()
            .map(|(b, ps)| ps.g.transpose() * self.block_mat(ds, b) * &ps.g)
            .collect();
        let nn = sc
            .nn
            .iter()
            .enumerate()
            .map(|(b, ns)| {
                let (off, len) = self.layout.nonneg[b];
                (0..len).map(|k| ds[off + k] * ns.g[k]).collect()
            })
            .collect();
        Comp { psd, nn }
    }

    fn scaling(&self, x: &[f64], s: &[f64]) -> Option<Scaling> {
        let mut psd = Vec::with_capacity(self.layout.psd.len());
        for b in 0..self.layout.psd.len() {
            let lx = self.block_mat(x, b).cholesky()?.l();
            let ls = self.block_mat(s, b).cholesky()?.l();
            let svd = (ls.transpose() * &lx).svd(true, true);
            let u = svd.u?;
            let v = svd.v_t?.transpose();
            let sig = svd.singular_values;
            if sig.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return None;
            }
            let d = sig.len();
            let mut g = lx * v;
            let mut gi_t = ls * u;
            for j in 0..d {
                let f = sig[j].sqrt();
                g.column_mut(j).scale_mut(1.0 / f);
                gi_t.column_mut(j).scale_mut(1.0 / f);
            }
            let w = &g * g.transpose();
            psd.push(PsdScale {
                g,
                gi_t,
                w,
                lambda: sig,
            });
        }
        let mut nn = Vec::with_capacity(self.layout.nonneg.len());
        for &(off, len) in &self.layout.nonneg {
            let mut g = Vec::with_capacity(len);
            let mut lambda = Vec::with_capacity(len);
            for k in off..off + len {
                if !(x[k] > 0.0 && s[k] > 0.0) {
                    return None;
                }
                g.push((x[k] / s[k]).sqrt());
                lambda.push((x[k] * s[k]).sqrt());
            }
            nn.push(NnScale { g, lambda });
        }
        Some(Scaling { psd, nn })
    }

    /// Schur complement `A W A'` over the cone variables.
    fn schur(&self, sc: &Scaling) -> DMatrix<f64> {
        let m = self.m;
        let mut big = DMatrix::zeros(m, m);
        for (b, ps) in sc.psd.iter().enumerate() {
            let rows = &self.maps.psd[b];
            let d = self.layout.psd[b].1;
            let w = &ps.w;
            let cols: Vec<Vec<f64>> = rows
                .par_iter()
                .map(|(_, ent)| {
                    let mut bj = DMatrix::zeros(d, d);
                    if ent.len() > d {
                        let mut a = DMatrix::zeros(d, d);
                        for &(p, q, v) in ent {
                            a[(p, q)] = v;
                            a[(q, p)] = v;
                        }
                        bj = w * a * w;
                    } else {
                        for &(p, q, v) in ent {
                            if p == q {
                                bj.ger(v, &w.column(p), &w.column(p), 1.0);
                            } else {
                                bj.ger(v, &w.column(p), &w.column(q), 1.0);
                                bj.ger(v, &w.column(q), &w.column(p), 1.0);
                            }
                        }
                    }
                    rows.iter()
                        .map(|(_, ei)| {
                            ei.iter()
                                .map(|&(p, q, v)| {
                                    if p == q {
                                        v * bj[(p, p)]
                                    } else {
                                        2.0 * v * bj[(p, q)]
                                    }
                                })
                                .sum()
                        })
                        .collect()
                })
                .collect();
            for (jj, col) in cols.iter().enumerate() {
                let j = rows[jj].0;
                for (ii, &val) in col.iter().enumerate() {
                    big[(rows[ii].0, j)] += val;
                }
            }
        }
        for (b, ns) in sc.nn.iter().enumerate() {
            for (k, col) in self.maps.nonneg[b].iter().enumerate() {
                let wk = ns.g[k] * ns.g[k];
                for &(i, ai) in col {
                    for &(j, aj) in col {
                        big[(i, j)] += wk * ai * aj;
                    }
                }
            }
        }
        big
    }

    fn kkt(&self, sc: &Scaling) -> Option<Kkt> {
        let m = self.m;
        let nf = self.layout.free.len();
        let mut k0 = DMatrix::zeros(m + nf, m + nf);
        let schur = self.schur(sc);
        let reg = self.settings.regularization;
        k0.view_mut((0, 0), (m, m)).copy_from(&schur);
        k0.view_mut((0, m), (m, nf)).copy_from(&self.maps.free);
        k0.view_mut((m, 0), (nf, m))
            .copy_from(&self.maps.free.transpose());
        let d = DVector::from_iterator(
            m + nf,
            (0..m + nf).map(|i| {
                let v = k0[(i, i)].abs();
                if i < m && v > 0.0 {
                    1.0 / v.sqrt()
                } else {
                    1.0
                }
            }),
        );
        let mut kr = k0.clone();
        for j in 0..m + nf {
            for i in 0..m + nf {
                kr[(i, j)] *= d[i] * d[j];
            }
        }
        for i in 0..m {
            kr[(i, i)] += reg;
        }
        for i in m..m + nf {
            kr[(i, i)] -= reg;
        }
        let lu = kr.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Kkt {
            lu,
            k0,
            d,
            refine: self.settings.refine_steps,
        })
    }

    fn free_part(&self, v: &[f64]) -> Vec<f64> {
        self.layout.free.iter().map(|&i| v[i]).collect()
    }

    /// `G V G'` where `V` solves `lambda o V = rc`.
    fn lyapunov_unscale(&self, sc: &Scaling, rc: &Comp) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (b, ps) in sc.psd.iter().enumerate() {
            let d = ps.lambda.len();
            let mut v = rc.psd[b].clone();
            for i in 0..d {
                for j in 0..d {
                    v[(i, j)] *= 2.0 / (ps.lambda[i] + ps.lambda[j]);
                }
            }
            let r = &ps.g * v * ps.g.transpose();
            self.set_block(&mut out, b, &r);
        }
        for (b, ns) in sc.nn.iter().enumerate() {
            let (off, len) = self.layout.nonneg[b];
            for k in 0..len {
                out[off + k] = ns.g[k] * ns.g[k] * rc.nn[b][k] / ns.lambda[k];
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        sc: &Scaling,
        kkt: &Kkt,
        fixed_part: &(Vec<f64>, Vec<f64>, f64),
        r_p: &[f64],
        r_d: &[f64],
        eta: f64,
        rc: &Comp,
        r_tau: f64,
        tau: f64,
        kappa: f64,
        r_g: f64,
    ) -> Option<Dir> {
        let (p2, dx2, denom) = fixed_part;
        let m = self.m;
        let nf = self.layout.free.len();
        let erd: Vec<f64> = r_d.iter().map(|v| eta * v).collect();
        let mut u = self.apply_w(sc, &erd);
        let gvg = self.lyapunov_unscale(sc, rc);
        for (a, g) in u.iter_mut().zip(&gvg) {
            *a += g;
        }
        let au = self.ax(&u);
        let mut rhs = DVector::zeros(m + nf);
        for i in 0..m {
            rhs[i] = -eta * r_p[i] - au[i];
        }
        for (j, &fi) in self.layout.free.iter().enumerate() {
            rhs[m + j] = -eta * r_d[fi];
        }
        let sol = kkt.solve(&rhs)?;
        let p1: Vec<f64> = sol.rows(0, m).iter().copied().collect();
        let mut dx1 = self.apply_w(sc, &self.aty(&p1));
        for (a, b) in dx1.iter_mut().zip(&u) {
            *a += b;
        }
        for (j, &fi) in self.layout.free.iter().enumerate() {
            dx1[fi] = sol[m + j];
        }
        let num = -eta * r_g - self.active_dot(self.c, &dx1) + dot(self.b, &p1) - r_tau / tau;
        let dtau = num / denom;
        let mut dy: Vec<f64> = p1.iter().zip(p2).map(|(a, b)| a + dtau * b).collect();
        let mut dx: Vec<f64> = dx1.iter().zip(dx2).map(|(a, b)| a + dtau * b).collect();
        // Recovering dx through W loses accuracy as W degenerates. Restore the
        // primal equation with corrections (W A'z, z) that leave the dual and
        // complementarity equations untouched.
        for _ in 0..self.settings.refine_steps {
            let adx = self.ax(&dx);
            let mut rhs = DVector::zeros(m + nf);
            for i in 0..m {
                rhs[i] = -(adx[i] - self.b[i] * dtau + eta * r_p[i]);
            }
            let sol = kkt.solve(&rhs)?;
            let z: Vec<f64> = sol.rows(0, m).iter().copied().collect();
            let wz = self.apply_w(sc, &self.aty(&z));
            for (a, b) in dx.iter_mut().zip(&wz) {
                *a += b;
            }
            for (j, &fi) in self.layout.free.iter().enumerate() {
                dx[fi] += sol[m + j];
            }
            for (a, b) in dy.iter_mut().zip(&z) {
                *a += b;
            }
        }
        let atdy = self.aty(&dy);
        let mut ds = vec![0.0; self.n];
        for i in 0..self.n {
            if self.layout.active[i] {
                ds[i] = -erd[i] - atdy[i] + self.c[i] * dtau;
            }
        }
        for &fi in &self.layout.free {
            ds[fi] = 0.0;
        }
        let dkappa = (r_tau - kappa * dtau) / tau;
        let _ = self.free_part(&ds);
        Some(Dir {
            dx,
            dy,
            ds,
            dtau,
            dkappa,
        })
    }

    fn interior(&self, x: &[f64], s: &[f64], dir: &Dir, alpha: f64) -> bool {
        let trial = |v: &[f64], d: &[f64]| -> Vec<f64> {
            v.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
        };
        let (xt, st) = (trial(x, &dir.dx), trial(s, &dir.ds));
        let psd_ok = (0..self.layout.psd.len()).all(|b| {
            self.block_mat(&xt, b).cholesky().is_some()
                && self.block_mat(&st, b).cholesky().is_some()
        });
        let nn_ok = self
            .layout
            .nonneg
            .iter()
            .all(|&(off, len)| (off..off + len).all(|k| xt[k] > 0.0 && st[k] > 0.0));
        psd_ok && nn_ok
    }

    /// Largest step keeping `(x, s, tau, kappa)` in the cone, given the
    /// scaled directions.
    fn max_step(
        &self,
        sc: &Scaling,
        dxs: &Comp,
        dss: &Comp,
        dir: &Dir,
        tau: f64,
        kappa: f64,
    ) -> f64 {
        let mut alpha = f64::INFINITY;
        let mut limit = |lo: f64| {
            if lo < 0.0 {
                alpha = alpha.min(-1.0 / lo);
            }
        };
        for (b, ps) in sc.psd.iter().enumerate() {
            let d = ps.lambda.len();
            let isq: Vec<f64> = ps.lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
            for m in [&dxs.psd[b], &dss.psd[b]] {
                let mut t = m.clone();
                for i in 0..d {
                    for j in 0..d {
                        t[(i, j)] *= isq[i] * isq[j];
                    }
                }
                let e = min_eig(&t);
                limit(e);
            }
        }
        for (b, ns) in sc.nn.iter().enumerate() {
            for k in 0..ns.lambda.len() {
                limit(dxs.nn[b][k] / ns.lambda[k]);
                limit(dss.nn[b][k] / ns.lambda[k]);
            }
        }
        limit(dir.dtau / tau);
        limit(dir.dkappa / kappa);
        alpha
    }
}

fn initial_point(layout: &Layout, n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    for &(off, d) in &layout.psd {
        for i in 0..d {
            e[off + svec_index(i, i)] = 1.0;
        }
    }
    for &(off, len) in &layout.nonneg {
        e[off..off + len].iter_mut().for_each(|v| *v = 1.0);
    }
    e
}

/// Primal-dual interior point on the homogeneous self-dual embedding with
/// Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
pub fn solve_with(
    p: &ConicProblem,
    warm: Option<&WarmStart>,
    settings: &SolverSettings,
) -> Result<SolveOutcome> {
    let pre = presolve(p)?;
    let (layout, owner) = build_layout(p, &pre);
    let n = p.num_vars();

    if let Some(ray) = &pre.inconsistent {
        let y: Vec<f64> = ray.iter().map(|v| -v).collect();
        let mut s = vec![0.0; n];
        for (row, &yr) in p.rows.iter().zip(&y) {
            row.axpy_into(yr, &mut s);
        }
        return Ok(finish(
            p,
            SolveStatus::PrimalInfeasible,
            vec![0.0; n],
            y,
            s,
            0,
        ));
    }

    let maps = build_row_maps(&layout, &owner, &pre.rows);
    let mut c = p.c.clone();
    for (i, ci) in c.iter_mut().enumerate() {
        if !layout.active[i] {
            *ci = 0.0;
        }
    }
    let solver = Solver {
        layout: &layout,
        maps: &maps,
        rows: &pre.rows,
        b: &pre.b,
        c: &c,
        n,
        m: pre.rows.len(),
        settings,
    };
    let m = solver.m;
    let bnorm = norm(&pre.b);
    let cnorm = norm(&c);

    let e = initial_point(&layout, n);
    let (mut x, mut y, mut s) = (e.clone(), vec![0.0; m], e.clone());
    for &fi in &layout.free {
        x[fi] = 0.0;
        s[fi] = 0.0;
    }
    if let Some(ws) = warm {
        if ws.x.len() == n && ws.s.len() == n && ws.y.len() == p.rows.len() {
            let t = settings.warm_push;
            for i in 0..n {
                if layout.active[i] {
                    x[i] = (1.0 - t) * ws.x[i] + t * e[i];
                    s[i] = (1.0 - t) * ws.s[i] + t * e[i];
                }
            }
            for &fi in &layout.free {
                s[fi] = 0.0;
            }
            for (k, &orig) in pre.kept.iter().enumerate() {
                y[k] = ws.y[orig];
            }
        }
    }
    let (mut tau, mut kappa) = (1.0, 1.0);
    let nu = layout.degree as f64;

    let mut status = SolveStatus::Stall;
    let mut iterations = 0;
    let mut small_steps = 0;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None;
    let mut progress = (f64::INFINITY, 0);
    for iter in 0..=settings.max_iter {
        iterations = iter;
        let ax = solver.ax(&x);
        let r_p: Vec<f64> = ax
            .iter()
            .zip(solver.b)
            .map(|(a, bb)| a - bb * tau)
            .collect();
        let aty = solver.aty(&y);
        let mut r_d = vec![0.0; n];
        for i in 0..n {
            if layout.active[i] {
                r_d[i] = aty[i] + s[i] - c[i] * tau;
            }
        }
        let cx = solver.active_dot(&c, &x);
        let by = dot(solver.b, &y);
        let r_g = cx - by + kappa;

        let pres = norm(&r_p) / tau / (1.0 + bnorm);
        let dres = solver.active_norm(&r_d) / tau / (1.0 + cnorm);
        let (pobj, dobj) = (cx / tau, by / tau);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        log::trace!(
            "ipm {iter:3} pobj {pobj:+.6e} dobj {dobj:+.6e} pres {pres:.1e} dres {dres:.1e} gap {gap:.1e} tau {tau:.1e} kappa {kappa:.1e}"
        );
        if pres <= settings.tol_feas && dres <= settings.tol_feas && gap <= settings.tol_gap {
            status = SolveStatus::Optimal;
            break;
        }
        let merit = pres.max(dres).max(gap);
        if pres.max(dres) <= settings.tol_reduced
            && gap <= settings.tol_reduced_gap
            && best.as_ref().is_none_or(|b| merit < b.0)
        {
            best = Some((merit, x.clone(), y.clone(), s.clone(), tau));
        }
        if merit < 0.5 * progress.0 {
            progress = (merit, iter);
        } else if iter - progress.1 > settings.progress_window {
            log::debug!("ipm {iter}: no progress since iteration {}", progress.1);
            break;
        }
        let mut aty_s = aty.clone();
        for i in 0..n {
            aty_s[i] += s[i];
        }
        if by > 0.0 && solver.active_norm(&aty_s) <= settings.tol_infeas * by {
            status = SolveStatus::PrimalInfeasible;
            break;
        }
        if cx < 0.0 && norm(&ax) <= settings.tol_infeas * (-cx) {
            status = SolveStatus::DualInfeasible;
            break;
        }
        if iter == settings.max_iter {
            break;
        }

        let Some(sc) = solver.scaling(&x, &s) else {
            log::debug!("ipm {iter}: iterate left the cone interior");
            break;
        };
        let Some(kkt) = solver.kkt(&sc) else {
            log::debug!("ipm {iter}: singular KKT system");
            break;
        };

        // Direction part that does not depend on the right-hand side.
        let wc = solver.apply_w(&sc, &c);
        let awc = solver.ax(&wc);
        let mut rhs2 = DVector::zeros(m + layout.free.len());
        for i in 0..m {
            rhs2[i] = solver.b[i] + awc[i];
        }
        for (j, &fi) in layout.free.iter().enumerate() {
            rhs2[m + j] = c[fi];
        }
        let Some(sol2) = kkt.solve(&rhs2) else {
            log::debug!("ipm {iter}: KKT solve failed");
            break;
        };
        let p2: Vec<f64> = sol2.rows(0, m).iter().copied().collect();
        let mut dx2 = solver.apply_w(&sc, &solver.aty(&p2));
        for i in 0..n {
            dx2[i] -= wc[i];
        }
        for (j, &fi) in layout.free.iter().enumerate() {
            dx2[fi] = sol2[m + j];
        }
        let denom = solver.active_dot(&c, &dx2) - dot(solver.b, &p2) - kappa / tau;
        let fixed_part = (p2, dx2, denom);

        let mu = (solver.active_dot(&x, &s) + tau * kappa) / (nu + 1.0);

        // Predictor.
        let rc_aff = Comp {
            psd: sc
                .psd
                .iter()
                .map(|ps| DMatrix::from_diagonal(&ps.lambda.map(|l| -l * l)))
                .collect(),
            nn: sc
                .nn
                .iter()
                .map(|ns| ns.lambda.iter().map(|l| -l * l).collect())
                .collect(),
        };
        let Some(aff) = solver.direction(
            &sc,
            &kkt,
            &fixed_part,
            &r_p,
            &r_d,
            1.0,
            &rc_aff,
            -tau * kappa,
            tau,
            kappa,
            r_g,
        ) else {
            break;
        };
        let dxs_a = solver.scale_x(&sc, &aff.dx);
        let dss_a = solver.scale_s(&sc, &aff.ds);
        let alpha_aff = solver
            .max_step(&sc, &dxs_a, &dss_a, &aff, tau, kappa)
            .min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        // Corrector.
        let mut rc = rc_aff.clone();
        for (b, ps) in sc.psd.iter().enumerate() {
            let d = ps.lambda.len();
            let cross = jordan(&dxs_a.psd[b], &dss_a.psd[b]);
            rc.psd[b] -= cross;
            for i in 0..d {
                rc.psd[b][(i, i)] += sigma * mu;
            }
        }
        for (b, ns) in sc.nn.iter().enumerate() {
            for k in 0..ns.lambda.len() {
                rc.nn[b][k] += sigma * mu - dxs_a.nn[b][k] * dss_a.nn[b][k];
            }
        }
        let r_tau = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
        let Some(dir) = solver.direction(
            &sc,
            &kkt,
            &fixed_part,
            &r_p,
            &r_d,
            1.0 - sigma,
            &rc,
            r_tau,
            tau,
            kappa,
            r_g,
        ) else {
            break;
        };
        let dxs = solver.scale_x(&sc, &dir.dx);
        let dss = solver.scale_s(&sc, &dir.ds);
        let mut alpha =
            (settings.step_fraction * solver.max_step(&sc, &dxs, &dss, &dir, tau, kappa)).min(1.0);
        if !alpha.is_finite() {
            break;
        }
        // The step bound comes from the scaled space; confirm in the original
        // one and back off if rounding pushed the trial point out.
        let mut tries = 0;
        while !solver.interior(&x, &s, &dir, alpha) && tries < 30 {
            alpha *= 0.7;
            tries += 1;
        }
        log::trace!("ipm {iter:3} alpha {alpha:.3e} aff {alpha_aff:.3e} sigma {sigma:.2e} backtracks {tries}");
        if alpha < 1e-4 {
            small_steps += 1;
            if small_steps >= settings.stagnation_steps {
                log::debug!("ipm {iter}: step length collapsed");
                break;
            }
        } else {
            small_steps = 0;
        }
        for i in 0..n {
            x[i] += alpha * dir.dx[i];
            s[i] += alpha * dir.ds[i];
        }
        for i in 0..m {
            y[i] += alpha * dir.dy[i];
        }
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        if !(tau > 0.0 && kappa > 0.0) || x.iter().chain(&y).chain(&s).any(|v| !v.is_finite()) {
            break;
        }
    }

    let mut reduced = false;
    if status == SolveStatus::Stall {
        if let Some((merit, bx, by, bs, bt)) = best {
            log::debug!("ipm: stalled; best iterate accepted at merit {merit:.2e}");
            (x, y, s, tau) = (bx, by, bs, bt);
            status = SolveStatus::Optimal;
            reduced = true;
        }
    }

    // Map back to the original layout.
    let mut y_full = vec![0.0; p.rows.len()];
    let (xo, so, yo) = match status {
        SolveStatus::PrimalInfeasible => {
            let by = dot(solver.b, &y);
            for (k, &orig) in pre.kept.iter().enumerate() {
                y_full[orig] = -y[k] / by;
            }
            (vec![0.0; n], None, y_full)
        }
        SolveStatus::DualInfeasible => {
            let cx = solver.active_dot(&c, &x);
            let xr: Vec<f64> = x.iter().map(|v| -v / cx).collect();
            (xr, Some(vec![0.0; n]), y_full)
        }
        _ => {
            let mut xr: Vec<f64> = x.iter().map(|v| v / tau).collect();
            for &(v, val, _) in &pre.fixed {
                xr[v] = val;
            }
            for (k, &orig) in pre.kept.iter().enumerate() {
                y_full[orig] = y[k] / tau;
            }
            // Duals of the rows that fixed a free variable.
            for &(v, _, r) in &pre.fixed {
                let mut acc = p.c[v];
                for (i, row) in p.rows.iter().enumerate() {
                    if i == r {
                        continue;
                    }
                    if let Ok(pos) = row.idx.binary_search(&v) {
                        acc -= row.val[pos] * y_full[i];
                    }
                }
                let pos = p.rows[r]
                    .idx
                    .binary_search(&v)
                    .expect("fixing row holds the variable");
                y_full[r] = acc / p.rows[r].val[pos];
            }
            let sr: Vec<f64> = s
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if layout.active[i] && !layout.free.contains(&i) {
                        v / tau
                    } else {
                        0.0
                    }
                })
                .collect();
            (xr, Some(sr), y_full)
        }
    };
    let so = so.unwrap_or_else(|| {
        let mut s = vec![0.0; n];
        for (row, &yr) in p.rows.iter().zip(&yo) {
            row.axpy_into(yr, &mut s);
        }
        s
    });
    let mut out = finish(p, status, xo, yo, so, iterations);
    out.reduced_accuracy = reduced;
    Ok(out)
}

/// Fills in objective values and residuals measured on the original problem.
fn finish(
    p: &ConicProblem,
    status: SolveStatus,
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    iterations: usize,
) -> SolveOutcome {
    let pobj = dot(&p.c, &x);
    let dobj = dot(&p.b, &y);
    let mut r_p = 0.0;
    for (row, &bi) in p.rows.iter().zip(&p.b) {
        r_p += (row.dot(&x) - bi).powi(2);
    }
    let mut rd = s.clone();
    for (row, &yr) in p.rows.iter().zip(&y) {
        row.axpy_into(yr, &mut rd);
    }
    let r_d = rd
        .iter()
        .zip(&p.c)
        .map(|(a, c)| (a - c).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut comp = 0.0;
    for (cone, off) in p.cones.iter().zip(p.offsets()) {
        if !matches!(cone, Cone::Free(_)) {
            comp += dot(&x[off..off + cone.len()], &s[off..off + cone.len()]).abs();
        }
    }
    SolveOutcome {
        status,
        primal_objective: pobj,
        dual_objective: dobj,
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        primal_residual: r_p.sqrt() / (1.0 + norm(&p.b)),
        dual_residual: r_d / (1.0 + norm(&p.c)),
        complementarity: comp,
        x,
        y,
        s,
        iterations,
        reduced_accuracy: false,
    }
}
