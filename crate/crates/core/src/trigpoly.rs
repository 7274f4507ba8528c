//! Causal trigonometric polynomials and the segment-bounded-modulus LMI.
//!
//! Frequencies are in normalized cycles, `f` in `[-1/2, 1/2]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ElementaryToeplitz, HermitianMatrix, MatrixOperand, C64};
use crate::sdp::{self, HermitianBlock, LinExpr, ProblemBuilder, SolveStatus};

/// `H(f) = sum_n h_n exp(-j 2 pi f n)`, `n = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalTrigPoly {
    coeffs: Vec<C64>,
}

impl CausalTrigPoly {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain(
                "a trigonometric polynomial needs at least one coefficient".into(),
            ));
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn eval(&self, f: f64) -> C64 {
        // Horner in z = exp(-j 2 pi f).
        let z = C64::from_polar(1.0, -2.0 * PI * f);
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn modulus(&self, f: f64) -> f64 {
        self.eval(f).norm()
    }

    /// Delays by `l` samples, filling the first `l` coefficients with zeros.
    /// The modulus is unchanged.
    pub fn shifted(&self, l: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); l];
        coeffs.extend_from_slice(&self.coeffs);
        Self { coeffs }
    }
}

/// Weights of the quadratic `E(f) = d0 + 2 Re(d1 exp(-j 2 pi f))`, nonnegative
/// exactly on `|f| <= f_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentWeights {
    pub f_r: f64,
    pub d0: f64,
    pub d1: C64,
}

impl SegmentWeights {
    pub fn e(&self, f: f64) -> f64 {
        self.d0 + 2.0 * (self.d1 * C64::from_polar(1.0, -2.0 * PI * f)).re
    }
}

/// Weights for the symmetric band `[-f_r, f_r]`.
pub fn segment_weights(f_r: f64) -> Result<SegmentWeights> {
    if !(f_r > 0.0 && f_r < 0.5) {
        return Err(Error::Domain(format!(
            "band half-width {f_r} must lie in (0, 1/2)"
        )));
    }
    let t2 = (PI * f_r).tan().powi(2);
    Ok(SegmentWeights {
        f_r,
        d0: (t2 - 1.0) / 2.0,
        d1: C64::new((1.0 + t2) / 4.0, 0.0),
    })
}

/// `d0 Theta^(n) + conj(d1) Theta^(n+1) + d1 Theta^(n-1)` of dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiMatrix {
    pub dim: usize,
    pub offset: isize,
    pub weights: SegmentWeights,
}

impl PhiMatrix {
    pub fn new(dim: usize, offset: isize, weights: SegmentWeights) -> Self {
        Self {
            dim,
            offset,
            weights,
        }
    }

    /// `(coefficient, diagonal offset)` terms.
    pub fn terms(&self) -> [(C64, isize); 3] {
        let w = &self.weights;
        [
            (C64::new(w.d0, 0.0), self.offset),
            (w.d1.conj(), self.offset + 1),
            (w.d1, self.offset - 1),
        ]
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.entry(i, j);
            }
        }
        m
    }
}

impl MatrixOperand for PhiMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn entry(&self, i: usize, j: usize) -> C64 {
        self.terms()
            .iter()
            .map(|&(c, k)| c * ElementaryToeplitz::new(self.dim, k).entry(i, j))
            .sum()
    }

    fn trace_with(&self, b: &HermitianMatrix) -> C64 {
        self.terms()
            .iter()
            .map(|&(c, k)| c * b.diagonal_sum(k))
            .sum()
    }
}

/// One equality of the segment LMI: `gamma^2 delta_n = Tr(theta Q) + Tr(phi P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentTemplate {
    pub n: usize,
    pub theta: ElementaryToeplitz,
    pub phi: PhiMatrix,
}

/// Templates `n = 0..=k` for a polynomial of degree `k`.
pub fn build_segment_lmi(k: usize, weights: SegmentWeights) -> Vec<SegmentTemplate> {
    (0..=k)
        .map(|n| SegmentTemplate {
            n,
            theta: ElementaryToeplitz::new(k + 1, n as isize),
            phi: PhiMatrix::new(k, n as isize, weights),
        })
        .collect()
}

/// Appends the segment LMI rows to a problem under construction.
///
/// `q` carries `Q` in its leading `k+1` rows/columns, `p` is the `k x k`
/// multiplier block (absent when `k = 0`). `gamma_sq` is the linear expression
/// for `gamma^2` and `gamma_sq_const` a constant added to it.
pub(crate) fn add_segment_rows(
    pb: &mut ProblemBuilder,
    q: HermitianBlock,
    p: Option<HermitianBlock>,
    k: usize,
    weights: SegmentWeights,
    gamma_sq: &LinExpr,
    gamma_sq_const: f64,
) {
    for t in build_segment_lmi(k, weights) {
        let mut re = LinExpr::new();
        let mut im = LinExpr::new();
        let one = C64::new(1.0, 0.0);
        for i in 0..=k - t.n {
            q.add_complex(&mut re, &mut im, i + t.n, i, one);
        }
        if let Some(p) = p {
            for (coef, off) in t.phi.terms() {
                if off.unsigned_abs() >= k {
                    continue;
                }
                let start = 0.max(-off);
                let end = (k as isize).min(k as isize - off);
                for i in start..end {
                    p.add_complex(&mut re, &mut im, (i + off) as usize, i as usize, coef);
                }
            }
        }
        if t.n == 0 {
            re.extend(gamma_sq.iter().map(|&(i, v)| (i, -v)));
            pb.add_row(re, gamma_sq_const);
        } else {
            pb.add_row(re, 0.0);
            pb.add_row(im, 0.0);
        }
    }
}

/// `(f, |H(f)|)` at the global maximizer over `[-f_r, f_r]`: dense scan, then
/// golden-section refinement of every local peak within 1% of the best.
pub fn sup_modulus_on_band(h: &CausalTrigPoly, f_r: f64) -> (f64, f64) {
    let npts = 4096.max(64 * (h.degree() + 1));
    let step = 2.0 * f_r / (npts - 1) as f64;
    let grid: Vec<f64> = (0..npts)
        .map(|i| {
            if i == npts - 1 {
                f_r
            } else {
                -f_r + i as f64 * step
            }
        })
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&f| h.modulus(f)).collect();
    let best = vals.iter().cloned().fold(0.0, f64::max);

    let mut arg = (grid[0], vals[0]);
    for i in 0..npts {
        let left = if i > 0 {
            vals[i - 1]
        } else {
            f64::NEG_INFINITY
        };
        let right = if i + 1 < npts {
            vals[i + 1]
        } else {
            f64::NEG_INFINITY
        };
        if vals[i] < left || vals[i] < right || vals[i] < 0.99 * best {
            continue;
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(npts - 1)];
        let cand = golden_max(|f| h.modulus(f), lo, hi);
        let cand = if cand.1 >= vals[i] {
            cand
        } else {
            (grid[i], vals[i])
        };
        if cand.1 > arg.1 {
            arg = cand;
        }
    }
    arg
}

fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-13 {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    let (ga, gb) = (g(a), g(b));
    [(a, ga), (b, gb), (c, gc), (d, gd)]
        .into_iter()
        .fold((a, ga), |m, x| if x.1 > m.1 { x } else { m })
}

/// Witness for `|H(f)| <= gamma` on `|f| <= f_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentBoundCertificate {
    pub gamma: f64,
    pub q: HermitianMatrix,
    pub p: HermitianMatrix,
    pub h: Vec<C64>,
}

impl SegmentBoundCertificate {
    /// Largest violation of the segment LMI equalities.
    pub fn equality_residual(&self, weights: SegmentWeights) -> f64 {
        let k = self.h.len() - 1;
        build_segment_lmi(k, weights)
            .iter()
            .map(|t| {
                let lhs = if t.n == 0 {
                    self.gamma * self.gamma
                } else {
                    0.0
                };
                let p_part = if k > 0 {
                    t.phi.trace_with(&self.p)
                } else {
                    C64::new(0.0, 0.0)
                };
                (C64::new(lhs, 0.0) - t.theta.trace_with(&self.q) - p_part).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Turns a near-feasible Gram pair for `h` into an exact one: `P` is shifted
    /// to PSD, the off-diagonal equality residuals are spread along the
    /// diagonals of `Q`, `Q` is shifted until `Q - h h^H` is PSD, and `gamma^2`
    /// takes the remaining trace.
    pub fn repaired(
        h: Vec<C64>,
        q: &HermitianMatrix,
        p: &HermitianMatrix,
        weights: SegmentWeights,
    ) -> Result<Self> {
        let k = h.len() - 1;
        if q.dim() != k + 1 || p.dim() != k {
            return Err(Error::Dimension(format!(
                "Gram pair {}x{} and {}x{} for degree {k}",
                q.dim(),
                q.dim(),
                p.dim(),
                p.dim()
            )));
        }
        let shift = |m: &HermitianMatrix, lmin: f64| {
            let e = (-lmin).max(0.0) + REPAIR_SLACK * (1.0 + m.frobenius_norm());
            HermitianMatrix::from_upper(m.dim(), |i, j| {
                m.get(i, j)
                    + if i == j {
                        C64::new(e, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
            })
        };
        let p = if k > 0 {
            shift(p, p.min_eigenvalue()?)
        } else {
            p.clone()
        };
        let lmi = build_segment_lmi(k, weights);
        let mut fix = vec![C64::new(0.0, 0.0); k + 1];
        for t in lmi.iter().filter(|t| t.n > 0) {
            let p_part = t.phi.trace_with(&p);
            fix[t.n] = -(t.theta.trace_with(q) + p_part) / (k + 1 - t.n) as f64;
        }
        let q = HermitianMatrix::from_upper(k + 1, |i, j| q.get(i, j) + fix[j - i].conj());
        let gap = HermitianMatrix::from_upper(k + 1, |i, j| q.get(i, j) - h[i] * h[j].conj());
        let q = shift(&q, gap.min_eigenvalue()?);
        let p0 = if k > 0 {
            lmi[0].phi.trace_with(&p).re
        } else {
            0.0
        };
        let gamma_sq = lmi[0].theta.trace_with(&q).re + p0;
        Ok(Self {
            gamma: gamma_sq.max(0.0).sqrt(),
            q,
            p,
            h,
        })
    }

    /// Same witness for a larger bound: the extra `gamma^2` goes onto the
    /// diagonal of `Q`.
    pub fn raised_to(self, gamma: f64) -> Self {
        let d = self.q.dim();
        let e = ((gamma * gamma - self.gamma * self.gamma) / d as f64).max(0.0);
        Self {
            gamma: gamma.max(self.gamma),
            q: HermitianMatrix::from_upper(d, |i, j| {
                self.q.get(i, j)
                    + if i == j {
                        C64::new(e, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
            }),
            ..self
        }
    }

    /// `[[Q, h], [h^H, 1]]`.
    pub fn bordered(&self) -> HermitianMatrix {
        let k1 = self.h.len();
        HermitianMatrix::from_upper(k1 + 1, |i, j| match (i < k1, j < k1) {
            (true, true) => self.q.get(i, j),
            (true, false) => self.h[i],
            _ => C64::new(1.0, 0.0),
        })
    }
}

/// Relative headroom added to the PSD shifts of a repaired certificate.
pub const REPAIR_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum BoundVerdict {
    Feasible(SegmentBoundCertificate),
    Infeasible,
}

/// Decides `max_{|f| <= f_r} |H(f)| <= gamma` through the segment LMI.
pub fn certify_bound(h: &CausalTrigPoly, gamma: f64, f_r: f64) -> Result<BoundVerdict> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!(
            "bound {gamma} must be finite and nonnegative"
        )));
    }
    let weights = segment_weights(f_r)?;
    let k = h.degree();
    let coeffs = h.coeffs();
    if gamma == 0.0 {
        return Ok(if coeffs.iter().all(|c| c.norm() == 0.0) {
            BoundVerdict::Feasible(SegmentBoundCertificate {
                gamma,
                q: HermitianMatrix::zeros(k + 1),
                p: HermitianMatrix::zeros(k),
                h: coeffs.to_vec(),
            })
        } else {
            BoundVerdict::Infeasible
        });
    }

    let mut pb = ProblemBuilder::new();
    let z = pb.add_hermitian(k + 2);
    let pblk = (k > 0).then(|| pb.add_hermitian(k));
    for (i, &hi) in coeffs.iter().enumerate() {
        let mut re = LinExpr::new();
        let mut im = LinExpr::new();
        z.add_re(&mut re, i, k + 1, 1.0);
        z.add_im(&mut im, i, k + 1, 1.0);
        pb.add_row(re, hi.re);
        pb.add_row(im, hi.im);
    }
    let mut corner = LinExpr::new();
    z.add_re(&mut corner, k + 1, k + 1, 1.0);
    pb.add_row(corner, 1.0);
    add_segment_rows(&mut pb, z, pblk, k, weights, &LinExpr::new(), gamma * gamma);
    let problem = pb.build();

    let out = sdp::solve(&problem, None)?;
    match out.status {
        SolveStatus::Optimal | SolveStatus::Stall => {
            let zm = z.extract(&out.x);
            let q = HermitianMatrix::from_upper(k + 1, |i, j| zm.get(i, j));
            let p = pblk
                .map(|b| b.extract(&out.x))
                .unwrap_or_else(|| HermitianMatrix::zeros(0));
            // Near the boundary the iterate may stall short of feasibility;
            // its repaired form still decides the bound when it fits.
            let fixed = SegmentBoundCertificate::repaired(coeffs.to_vec(), &q, &p, weights)?;
            if fixed.gamma <= gamma {
                Ok(BoundVerdict::Feasible(fixed.raised_to(gamma)))
            } else if out.status == SolveStatus::Optimal {
                Ok(BoundVerdict::Feasible(SegmentBoundCertificate {
                    gamma,
                    q,
                    p,
                    h: coeffs.to_vec(),
                }))
            } else {
                Err(Error::SolverStall(format!(
                    "bound certification stalled after {} iterations",
                    out.iterations
                )))
            }
        }
        SolveStatus::PrimalInfeasible => Ok(BoundVerdict::Infeasible),
        status => Err(Error::SolverStall(format!(
            "bound certification ended with {status:?} after {} iterations",
            out.iterations
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn weights_at_quarter_band() {
        let w = segment_weights(0.25).unwrap();
        assert!(w.d0.abs() < 1e-15);
        assert!((w.d1.re - 0.5).abs() < 1e-15 && w.d1.im == 0.0);
        // E(f) = cos(2 pi f).
        for f in [-0.5, -0.3, 0.0, 0.1, 0.25, 0.4] {
            assert!((w.e(f) - (2.0 * PI * f).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_at_eighth_band() {
        let w = segment_weights(0.125).unwrap();
        assert!((w.d0 - (-0.414_213_562_373_095)).abs() < 1e-12);
        assert!((w.d1.re - 0.292_893_218_813_452_5).abs() < 1e-12);
        assert!(w.e(0.125).abs() < 1e-12 && w.e(-0.125).abs() < 1e-12);
    }

    #[test]
    fn weights_out_of_range() {
        for f in [0.0, 0.5, -0.1, f64::NAN] {
            assert!(matches!(segment_weights(f), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn phi_dimension_one() {
        let w = segment_weights(0.25).unwrap();
        let t = build_segment_lmi(1, w);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].phi.to_cmatrix()[(0, 0)], c(w.d0));
        assert_eq!(t[1].phi.to_cmatrix()[(0, 0)], w.d1);
        assert_eq!(t[0].theta.to_cmatrix(), CMatrix::identity(2));
    }

    #[test]
    fn theta_three_offset_two() {
        let w = segment_weights(0.1).unwrap();
        let t = build_segment_lmi(2, w);
        let m = t[2].theta.to_cmatrix();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[(i, j)], c(if (i, j) == (0, 2) { 1.0 } else { 0.0 }));
            }
        }
    }

    #[test]
    fn sup_examples() {
        let one = CausalTrigPoly::new(vec![c(1.0)]).unwrap();
        assert!((sup_modulus_on_band(&one, 0.2).1 - 1.0).abs() < 1e-15);
        let two = CausalTrigPoly::new(vec![c(1.0), c(1.0)]).unwrap();
        let (f, v) = sup_modulus_on_band(&two, 0.5);
        assert!(f.abs() < 1e-6 && (v - 2.0).abs() < 1e-12);
        assert!((two.modulus(0.25) - 2f64.sqrt()).abs() < 1e-14);
        assert!((sup_modulus_on_band(&two, 0.25).1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sup_at_band_edge() {
        // |1 - exp(-j 2 pi f)| = 2|sin(pi f)| grows toward the edges.
        let h = CausalTrigPoly::new(vec![c(1.0), c(-1.0)]).unwrap();
        let (f, v) = sup_modulus_on_band(&h, 0.1);
        assert!((f.abs() - 0.1).abs() < 1e-15);
        assert!((v - 2.0 * (PI * 0.1).sin()).abs() < 1e-14);
    }

    #[test]
    fn certify_flat() {
        let h = CausalTrigPoly::new(vec![c(1.0)]).unwrap();
        for f_r in [0.05, 0.25, 0.45] {
            assert!(matches!(
                certify_bound(&h, 1.0 + 1e-6, f_r).unwrap(),
                BoundVerdict::Feasible(_)
            ));
            assert_eq!(
                certify_bound(&h, 1.0 - 1e-3, f_r).unwrap(),
                BoundVerdict::Infeasible
            );
        }
    }

    #[test]
    fn certify_zero_bound() {
        let zero = CausalTrigPoly::new(vec![c(0.0); 3]).unwrap();
        assert!(matches!(
            certify_bound(&zero, 0.0, 0.1).unwrap(),
            BoundVerdict::Feasible(_)
        ));
        let h = CausalTrigPoly::new(vec![c(0.0), c(1e-3)]).unwrap();
        assert_eq!(
            certify_bound(&h, 0.0, 0.1).unwrap(),
            BoundVerdict::Infeasible
        );
    }

    #[test]
    fn certificate_satisfies_lmi() {
        let h =
            CausalTrigPoly::new(vec![c(1.0), C64::new(0.5, -0.3), C64::new(-0.2, 0.7)]).unwrap();
        let f_r = 0.125;
        let sup = sup_modulus_on_band(&h, f_r).1;
        let BoundVerdict::Feasible(cert) = certify_bound(&h, 1.01 * sup, f_r).unwrap() else {
            panic!("expected a certificate");
        };
        let w = segment_weights(f_r).unwrap();
        assert!(cert.equality_residual(w) < 1e-6);
        assert!(cert.bordered().min_eigenvalue().unwrap() > -1e-6);
        assert!(cert.p.min_eigenvalue().unwrap() > -1e-6);
    }
}
