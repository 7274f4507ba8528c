//! Sequential rank-one constraint relaxation for continuous-band peak
//! sidelobe design.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexSequence, HermitianMatrix, C64};
use crate::metrics::{metrics_report, MetricsReport, SidelobeRegion};
use crate::sdp::{
    self, ConicProblem, HermitianBlock, LinExpr, ProblemBuilder, ScalarBlock, SolveOutcome,
    SolveStatus, SolverSettings, WarmStart,
};
use crate::trigpoly::{add_segment_rows, segment_weights, CausalTrigPoly, SegmentBoundCertificate};

/// How each lag's polynomial is lifted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LiftMode {
    /// Degree `N-1-l` per lag, `h_m = X[m+l, m]`.
    #[default]
    Trimmed,
    /// Degree `N-1` per lag with the first `l` coefficients pinned to zero.
    PaperFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", tag = "style")]
pub enum ConstraintStyle {
    /// Every `|f| <= f_r` through the segment LMI.
    #[default]
    Band,
    /// Only the bins `k/m`, `|k| <= K`.
    Grid { m: usize, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub n: usize,
    pub max_lag: usize,
    pub f_r: f64,
    pub zeta: f64,
    pub kappa: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub mode: LiftMode,
    #[serde(default)]
    pub style: ConstraintStyle,
    /// Seeds the direction that resolves a degenerate top eigenspace.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_solves")]
    pub max_solves: usize,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_max_solves() -> usize {
    2000
}

fn default_true() -> bool {
    true
}

impl DesignSpec {
    /// Band design with the stock iteration cap and warm starts on.
    pub fn new(n: usize, max_lag: usize, f_r: f64, zeta: f64, kappa: f64, epsilon: f64) -> Self {
        Self {
            n,
            max_lag,
            f_r,
            zeta,
            kappa,
            epsilon,
            mode: LiftMode::Trimmed,
            style: ConstraintStyle::Band,
            seed: 0,
            max_solves: default_max_solves(),
            warm_start: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n < 2 {
            return bad(format!("sequence length {} is too short", self.n));
        }
        if self.max_lag == 0 {
            return bad("max lag must be at least 1; the sidelobe set would be empty".into());
        }
        if self.max_lag >= self.n {
            return bad(format!(
                "max lag {} must be below N = {}",
                self.max_lag, self.n
            ));
        }
        if !(self.f_r > 0.0 && self.f_r < 0.5) {
            return bad(format!("f_R = {} must lie in (0, 1/2)", self.f_r));
        }
        if !(self.zeta > 1.0) {
            return bad(format!("zeta = {} must exceed 1", self.zeta));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return bad(format!("kappa = {} must lie in (0, 1)", self.kappa));
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!("epsilon = {} must be nonnegative", self.epsilon));
        }
        if self.max_solves == 0 {
            return bad("the solve budget must be positive".into());
        }
        if let ConstraintStyle::Grid { m, k } = self.style {
            if m == 0 || k * 2 > m || k as f64 / m as f64 != self.f_r {
                return bad(format!("grid K/M = {k}/{m} must equal f_R = {}", self.f_r));
            }
        }
        Ok(())
    }

    /// Region matching the design; gridded when the style carries a grid.
    pub fn region(&self) -> Result<SidelobeRegion> {
        let r = SidelobeRegion::continuous(self.max_lag, self.f_r)?;
        match self.style {
            ConstraintStyle::Grid { m, k } => r.with_grid(m, k),
            ConstraintStyle::Band => Ok(r),
        }
    }
}

/// Rank-one tightening row `u^H X u >= w N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub u: Vec<C64>,
    pub w: f64,
}

/// Iterate of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SrocrState {
    pub iteration: usize,
    pub x: HermitianMatrix,
    pub w: f64,
    pub delta: f64,
    pub t: f64,
    pub u: Vec<C64>,
    pub lambda_max: f64,
    pub last_feasible: bool,
}

/// One line of the iteration trace; row 0 is the relaxed start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub feasible: bool,
    /// The solver neither converged nor certified infeasibility.
    pub stalled: bool,
    /// Rank threshold used by this solve.
    pub w: f64,
    /// Increment after this solve.
    pub delta: f64,
    pub t: f64,
    pub lambda_max_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub spec: DesignSpec,
    pub x_opt: ComplexSequence,
    /// `max_n ||x_n| - 1|` before projection.
    pub pre_projection_deviation: f64,
    pub report: MetricsReport,
    pub trace: Vec<TraceRow>,
    pub t_final: f64,
    pub x_lifted: HermitianMatrix,
    /// Per-lag Gram witnesses from the last accepted solve (band style only).
    pub certificates: Vec<SegmentBoundCertificate>,
    /// The solve budget ran out before the stop rule fired.
    pub capped: bool,
    pub solves: usize,
}

impl DesignResult {
    /// Outer iterations, not counting the relaxed start.
    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }
}

/// Variable handles of an assembled problem.
#[derive(Debug, Clone)]
pub struct IterationSdp {
    pub problem: ConicProblem,
    pub t: ScalarBlock,
    pub x: HermitianBlock,
    /// Band style: per-lag bordered block and multiplier block.
    pub lags: Vec<(HermitianBlock, Option<HermitianBlock>)>,
    pub slack: Option<ScalarBlock>,
}

/// Builds the convex problem of one outer iteration (`rank = None` gives the
/// relaxed start).
pub fn assemble_iteration_sdp(spec: &DesignSpec, rank: Option<&RankRow>) -> Result<IterationSdp> {
    spec.validate()?;
    let n = spec.n;
    let mut pb = ProblemBuilder::new();
    let t = pb.add_free(1);
    pb.minimize(vec![(t.index(0), 1.0)]);
    let x = pb.add_hermitian(n);
    let mut lags = Vec::new();

    match spec.style {
        ConstraintStyle::Band => {
            let weights = segment_weights(spec.f_r)?;
            for l in 1..=spec.max_lag {
                let len = match spec.mode {
                    LiftMode::Trimmed => n - l,
                    LiftMode::PaperFull => n,
                };
                let k = len - 1;
                let bordered = pb.add_hermitian(len + 1);
                let p = (k > 0).then(|| pb.add_hermitian(k));
                for m in 0..len {
                    // Coefficient m of the lag polynomial as an entry of X.
                    let entry = match spec.mode {
                        LiftMode::Trimmed => Some((m + l, m)),
                        LiftMode::PaperFull => (m >= l).then(|| (m, m - l)),
                    };
                    let mut re = LinExpr::new();
                    let mut im = LinExpr::new();
                    bordered.add_re(&mut re, m, len, 1.0);
                    bordered.add_im(&mut im, m, len, 1.0);
                    if let Some((a, b)) = entry {
                        x.add_re(&mut re, a, b, -1.0);
                        x.add_im(&mut im, a, b, -1.0);
                    }
                    pb.add_row(re, 0.0);
                    pb.add_row(im, 0.0);
                }
                let mut corner = LinExpr::new();
                bordered.add_re(&mut corner, len, len, 1.0);
                pb.add_row(corner, 1.0);
                add_segment_rows(
                    &mut pb,
                    bordered,
                    p,
                    k,
                    weights,
                    &vec![(t.index(0), 1.0)],
                    0.0,
                );
                lags.push((bordered, p));
            }
        }
        ConstraintStyle::Grid { m, k } => {
            for l in 1..=spec.max_lag {
                for kk in -(k as isize)..=k as isize {
                    let f = kk as f64 / m as f64;
                    let z = pb.add_hermitian(2);
                    let mut e = LinExpr::new();
                    z.add_re(&mut e, 0, 0, 1.0);
                    e.push((t.index(0), -1.0));
                    pb.add_row(e, 0.0);
                    let mut e = LinExpr::new();
                    z.add_re(&mut e, 1, 1, 1.0);
                    pb.add_row(e, 1.0);
                    let mut re = LinExpr::new();
                    let mut im = LinExpr::new();
                    z.add_re(&mut re, 0, 1, 1.0);
                    z.add_im(&mut im, 0, 1, 1.0);
                    for i in 0..n - l {
                        let c = -C64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * i as f64);
                        x.add_complex(&mut re, &mut im, i + l, i, c);
                    }
                    pb.add_row(re, 0.0);
                    pb.add_row(im, 0.0);
                }
            }
        }
    }

    for i in 0..n {
        let mut e = LinExpr::new();
        x.add_re(&mut e, i, i, 1.0);
        pb.add_row(e, 1.0);
    }

    let slack = rank.map(|r| {
        let s = pb.add_nonneg(1);
        let mut re = LinExpr::new();
        let mut im = LinExpr::new();
        for p in 0..n {
            for q in 0..n {
                x.add_complex(&mut re, &mut im, p, q, r.u[p].conj() * r.u[q]);
            }
        }
        re.push((s.index(0), -1.0));
        pb.add_row(re, r.w * n as f64);
        s
    });

    Ok(IterationSdp {
        problem: pb.build(),
        t,
        x,
        lags,
        slack,
    })
}

/// Eigenvalues within this relative distance of the largest are treated as
/// one eigenspace.
pub const DEGENERACY_TOL: f64 = 1e-3;

/// Seeded unimodular direction used to break ties in the top eigenspace.
fn tie_breaker(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

/// Largest eigenvalue and a unit vector of its eigenspace. A degenerate top
/// eigenspace is resolved by projecting `tie` onto it.
fn principal(x: &HermitianMatrix, tie: &[C64]) -> Result<(f64, Vec<C64>)> {
    let e = eig_hermitian(x)?;
    let lmax = e.max_value();
    let top = e
        .values
        .iter()
        .take_while(|&&v| v >= lmax - DEGENERACY_TOL * lmax.abs())
        .count();
    if top == 1 {
        return Ok((lmax, e.principal_vector()));
    }
    let n = x.dim();
    let mut u = vec![C64::new(0.0, 0.0); n];
    for k in 0..top {
        let col = e.vectors.column(k);
        let c: C64 = col.iter().zip(tie).map(|(a, b)| a.conj() * b).sum();
        for (ui, ai) in u.iter_mut().zip(&col) {
            *ui += ai * c;
        }
    }
    let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Ok((lmax, e.principal_vector()));
    }
    Ok((lmax, u.into_iter().map(|z| z / norm).collect()))
}

enum Verdict {
    Feasible(SolveOutcome),
    Infeasible { stalled: bool },
}

/// Residual and gap tolerances at which a stalled solve is still accepted. Early iterations have
/// `t = 0` optima on which the multiplier blocks collapse, and late ones carry
/// large rank-row multipliers; both slow interior point convergence. The final
/// certificates are repaired to exact equalities.
pub const REDUCED_TOL: f64 = 1e-5;
pub const REDUCED_GAP_TOL: f64 = 1e-3;

fn run_solve(sdp: &IterationSdp, warm: Option<&WarmStart>) -> Result<Verdict> {
    let settings = SolverSettings {
        tol_reduced: REDUCED_TOL,
        tol_reduced_gap: REDUCED_GAP_TOL,
        ..SolverSettings::default()
    };
    let out = sdp::solve_with(&sdp.problem, warm, &settings)?;

    log::debug!(
        "sdp {:?}{} in {} iterations, t = {:.6e}",
        out.status,
        if out.reduced_accuracy {
            " (reduced accuracy)"
        } else {
            ""
        },
        out.iterations,
        out.x[sdp.t.index(0)]
    );
    Ok(match out.status {
        SolveStatus::Optimal => Verdict::Feasible(out),
        SolveStatus::PrimalInfeasible => Verdict::Infeasible { stalled: false },
        SolveStatus::DualInfeasible | SolveStatus::Stall => Verdict::Infeasible { stalled: true },
    })
}

/// Solves the relaxed problem: `(X0, w0, t0)`.
pub fn initial_point(spec: &DesignSpec) -> Result<(HermitianMatrix, f64, f64)> {
    let sdp = assemble_iteration_sdp(spec, None)?;
    let Verdict::Feasible(out) = run_solve(&sdp, None)? else {
        return Err(Error::Design(
            "the relaxed starting problem did not solve".into(),
        ));
    };
    let x0 = sdp.x.extract(&out.x);
    let (lmax, _) = principal(&x0, &tie_breaker(spec.n, spec.seed))?;
    Ok((
        x0,
        (1.0 - lmax / spec.n as f64).max(0.0) / spec.zeta,
        out.x[sdp.t.index(0)],
    ))
}

/// Per-lag witnesses read from a solved band-style problem.
fn certificates(
    spec: &DesignSpec,
    sdp: &IterationSdp,
    sol: &[f64],
    t: f64,
) -> Vec<SegmentBoundCertificate> {
    sdp.lags
        .iter()
        .map(|&(bordered, p)| {
            let b = bordered.extract(sol);
            let len = bordered.dim - 1;
            SegmentBoundCertificate {
                gamma: t.max(0.0).sqrt(),
                q: HermitianMatrix::from_upper(len, |i, j| b.get(i, j)),
                p: p.map(|p| p.extract(sol))
                    .unwrap_or_else(|| HermitianMatrix::zeros(0)),
                h: (0..len).map(|i| b.get(i, len)).collect(),
            }
        })
        .filter(|_| matches!(spec.style, ConstraintStyle::Band))
        .collect()
}

/// Lag polynomial of the lifted matrix, laid out as in the iteration problem.
fn lifted_lag_poly(spec: &DesignSpec, x: &HermitianMatrix, l: usize) -> Result<CausalTrigPoly> {
    let n = spec.n;
    let coeffs = match spec.mode {
        LiftMode::Trimmed => (0..n - l).map(|m| x.get(m + l, m)).collect(),
        LiftMode::PaperFull => (0..n)
            .map(|m| {
                if m >= l {
                    x.get(m, m - l)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect(),
    };
    CausalTrigPoly::new(coeffs)
}

/// Repairs the last solve's Gram pairs around the lag polynomials of the final
/// lifted matrix and lifts them to one common bound, which becomes `t`.
fn polish_certificates(
    spec: &DesignSpec,
    x: &HermitianMatrix,
    t: f64,
    certs: &[SegmentBoundCertificate],
) -> Result<(f64, Vec<SegmentBoundCertificate>)> {
    let weights = segment_weights(spec.f_r)?;
    let repaired = certs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let h = lifted_lag_poly(spec, x, i + 1)?;
            SegmentBoundCertificate::repaired(h.coeffs().to_vec(), &c.q, &c.p, weights)
        })
        .collect::<Result<Vec<_>>>()?;
    let t_cert = repaired
        .iter()
        .map(|c| c.gamma * c.gamma)
        .fold(0.0, f64::max);
    log::debug!("certificates repaired: t {:.9e} -> {:.9e}", t, t_cert);
    let common = repaired
        .into_iter()
        .map(|c| c.raised_to(t_cert.sqrt()))
        .collect();
    Ok((t_cert, common))
}

/// Runs the outer loop to its stop rule (or the solve budget).
pub fn srocr_run(spec: &DesignSpec) -> Result<DesignResult> {
    spec.validate()?;
    let n = spec.n as f64;

    let relaxed = assemble_iteration_sdp(spec, None)?;
    let Verdict::Feasible(out0) = run_solve(&relaxed, None)? else {
        return Err(Error::Design(
            "the relaxed starting problem did not solve".into(),
        ));
    };
    let x0 = relaxed.x.extract(&out0.x);
    let tie = tie_breaker(spec.n, spec.seed);
    let (lmax0, u0) = principal(&x0, &tie)?;
    let t0 = out0.x[relaxed.t.index(0)];
    let delta0 = (1.0 - lmax0 / n).max(0.0) / spec.zeta;
    let mut state = SrocrState {
        iteration: 0,
        x: x0,
        w: delta0,
        delta: delta0,
        t: t0,
        u: u0,
        lambda_max: lmax0,
        last_feasible: true,
    };
    let mut trace = vec![TraceRow {
        iter: 0,
        feasible: true,
        stalled: false,
        w: 0.0,
        delta: delta0,
        t: t0,
        lambda_max_ratio: lmax0 / n,
    }];
    let mut certs = certificates(spec, &relaxed, &out0.x, t0);
    let mut warm: Option<WarmStart> = None;
    let mut capped = true;
    let mut solves = 1;

    while solves < spec.max_solves {
        let w_used = state.w;
        let rank = RankRow {
            u: state.u.clone(),
            w: w_used,
        };
        let sdp = assemble_iteration_sdp(spec, Some(&rank))?;
        let verdict = run_solve(&sdp, if spec.warm_start { warm.as_ref() } else { None })?;
        solves += 1;
        let t_prev = state.t;
        let (feasible, stalled) = match verdict {
            Verdict::Feasible(out) => {
                let xn = sdp.x.extract(&out.x);
                let (lmax, u) = principal(&xn, &tie)?;
                state.t = out.x[sdp.t.index(0)];
                state.x = xn;
                state.u = u;
                state.lambda_max = lmax;
                state.delta = (1.0 - lmax / n).max(0.0) / spec.zeta;
                certs = certificates(spec, &sdp, &out.x, state.t);
                warm = Some(out.warm_start());
                (true, false)
            }
            Verdict::Infeasible { stalled } => {
                state.delta /= 2.0;
                (false, stalled)
            }
        };
        state.iteration += 1;
        state.last_feasible = feasible;
        state.w = (state.lambda_max / n + state.delta).min(1.0);
        trace.push(TraceRow {
            iter: state.iteration,
            feasible,
            stalled,
            w: w_used,
            delta: state.delta,
            t: state.t,
            lambda_max_ratio: state.lambda_max / n,
        });
        log::info!(
            "iter {:4} {} w {:.6} delta {:.3e} t {:.4} dB lambda/N {:.6}",
            state.iteration,
            if feasible {
                "feasible  "
            } else if stalled {
                "stall     "
            } else {
                "infeasible"
            },
            w_used,
            state.delta,
            t_db(state.t),
            state.lambda_max / n
        );
        let change = (10.0 * (state.t / t_prev).log10()).abs();
        if w_used >= spec.kappa && t_prev > 0.0 && change <= spec.epsilon {
            capped = false;
            break;
        }
    }
    if capped {
        log::warn!(
            "solve budget of {} exhausted before the stop rule",
            spec.max_solves
        );
    }

    if matches!(spec.style, ConstraintStyle::Band) {
        (state.t, certs) = polish_certificates(spec, &state.x, state.t, &certs)?;
    }

    // Rank-one extraction and projection onto the unit circle.
    let lifted: Vec<C64> = state
        .u
        .iter()
        .map(|u| u * state.lambda_max.sqrt())
        .collect();
    let raw = ComplexSequence::new(lifted)?;
    let deviation = raw.max_modulus_deviation();
    let x_opt = raw.project_unimodular();
    let region = spec.region()?;
    let report = metrics_report(&x_opt, &region, None)?;

    Ok(DesignResult {
        spec: spec.clone(),
        x_opt,
        pre_projection_deviation: deviation,
        report,
        trace,
        t_final: state.t,
        x_lifted: state.x,
        certificates: certs,
        capped,
        solves,
    })
}

/// The same loop with only the Doppler grid constrained.
pub fn design_grid_baseline(spec: &DesignSpec) -> Result<DesignResult> {
    if !matches!(spec.style, ConstraintStyle::Grid { .. }) {
        return Err(Error::Config(
            "the grid baseline needs a grid constraint style".into(),
        ));
    }
    srocr_run(spec)
}

/// Solver round-off can leave `t` a hair below zero.
fn t_db(t: f64) -> f64 {
    10.0 * t.max(0.0).log10()
}

/// CSV `iter,feasible,w,delta,t_db,lambda_max_ratio`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], mut w: W) -> Result<()> {
    writeln!(w, "iter,feasible,w,delta,t_db,lambda_max_ratio")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.iter,
            r.feasible as u8,
            r.w,
            r.delta,
            t_db(r.t),
            r.lambda_max_ratio
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::Cone;

    #[test]
    fn smallest_trimmed_problem() {
        let spec = DesignSpec::new(2, 1, 0.1, 10.0, 0.99, 1e-3);
        let sdp = assemble_iteration_sdp(&spec, None).unwrap();
        // t, X (2), bordered [[Q00, h0], [h0*, 1]] (2), no multiplier block.
        assert_eq!(
            sdp.problem.cones,
            vec![Cone::Free(1), Cone::Psd(4), Cone::Psd(4)]
        );
        assert_eq!(sdp.lags.len(), 1);
        assert!(sdp.lags[0].1.is_none());
        // h link (2) + corner + t = Q00 + diag (2)
        assert_eq!(sdp.problem.num_rows(), 6);
    }

    #[test]
    fn block_count_case_one() {
        let spec = DesignSpec::new(32, 3, 3.0 / 32.0, 10.0, 0.99, 1e-3);
        let rank = RankRow {
            u: vec![C64::new(1.0 / 32f64.sqrt(), 0.0); 32],
            w: 0.1,
        };
        let sdp = assemble_iteration_sdp(&spec, Some(&rank)).unwrap();
        let psd: Vec<usize> = sdp
            .problem
            .cones
            .iter()
            .filter_map(|c| {
                if let Cone::Psd(d) = c {
                    Some(d / 2)
                } else {
                    None
                }
            })
            .collect();
        // X, then per lag the bordered block (Q plus border) and P.
        assert_eq!(psd, vec![32, 32, 30, 31, 29, 30, 28]);
        assert!(sdp.slack.is_some());
    }

    #[test]
    fn paper_full_pins_leading_coefficients() {
        let mut spec = DesignSpec::new(4, 2, 0.2, 10.0, 0.99, 1e-3);
        spec.mode = LiftMode::PaperFull;
        let sdp = assemble_iteration_sdp(&spec, None).unwrap();
        let (b1, p1) = sdp.lags[0];
        assert_eq!(b1.dim, 5);
        assert_eq!(p1.unwrap().dim, 3);
        let out = sdp::solve(&sdp.problem, None).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        let b = b1.extract(&out.x);
        assert!(b.get(0, 4).norm() < 1e-7);
        let b2 = sdp.lags[1].0.extract(&out.x);
        assert!(b2.get(0, 4).norm() < 1e-7 && b2.get(1, 4).norm() < 1e-7);
    }

    #[test]
    fn w0_formula() {
        assert!(((1.0 - 20.0 / 32.0) / 10.0 - 0.0375f64).abs() < 1e-15);
    }

    #[test]
    fn relaxed_start_reaches_zero() {
        let spec = DesignSpec::new(8, 2, 0.125, 10.0, 0.99, 1e-3);
        let (x0, w0, t0) = initial_point(&spec).unwrap();
        assert!(t0.abs() <= 1e-6, "t0 = {t0}");
        assert!(x0.diag().iter().all(|d| (d - 1.0).abs() < 1e-7));
        let (lmax, _) = principal(&x0, &tie_breaker(8, 0)).unwrap();
        assert!((w0 - (1.0 - lmax / 8.0) / 10.0).abs() < 1e-15);
    }

    #[test]
    fn spec_rejections() {
        let ok = DesignSpec::new(8, 2, 0.125, 10.0, 0.99, 1e-3);
        assert!(ok.validate().is_ok());
        let mut s = ok.clone();
        s.max_lag = 0;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = ok.clone();
        s.style = ConstraintStyle::Grid { m: 32, k: 3 };
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        s.style = ConstraintStyle::Grid { m: 16, k: 2 };
        assert!(s.validate().is_ok());
        let mut s = ok;
        s.zeta = 1.0;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
    }
}
