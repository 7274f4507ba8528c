//! Reference problems and outcome checks shared by the solver suites.
#![allow(dead_code)]

use dtaf_core::sdp::{Cone, ConicProblem, ProblemBuilder, SolveOutcome, SolveStatus};

pub fn lp_corner() -> ConicProblem {
    // minimize x s.t. x - s = 3, x free, s >= 0
    let mut pb = ProblemBuilder::new();
    let x = pb.add_free(1);
    let s = pb.add_nonneg(1);
    pb.minimize(vec![(x.index(0), 1.0)]);
    pb.add_row(vec![(x.index(0), 1.0), (s.index(0), -1.0)], 3.0);
    pb.build()
}

pub fn lambda_max_epigraph() -> ConicProblem {
    // minimize t s.t. Y = t I - diag(2, -1) is PSD
    let mut pb = ProblemBuilder::new();
    let t = pb.add_free(1);
    let y = pb.add_psd(2);
    pb.minimize(vec![(t.index(0), 1.0)]);
    pb.add_row(vec![y.term(0, 0, 1.0), (t.index(0), -1.0)], -2.0);
    pb.add_row(vec![y.term(1, 1, 1.0), (t.index(0), -1.0)], 1.0);
    pb.add_row(vec![y.term(0, 1, 1.0)], 0.0);
    pb.build()
}

pub fn fixed_2x2(off_diag: f64) -> ConicProblem {
    let mut pb = ProblemBuilder::new();
    let x = pb.add_psd(2);
    pb.minimize(vec![x.term(0, 0, 1.0), x.term(1, 1, 1.0)]);
    pb.add_row(vec![x.term(0, 0, 1.0)], 1.0);
    pb.add_row(vec![x.term(1, 1, 1.0)], 1.0);
    pb.add_row(vec![x.term(0, 1, 1.0)], off_diag);
    pb.build()
}

/// Optimal status, residuals and gap at `1e-7`, complementarity at `1e-6`.
pub fn kkt(p: &ConicProblem, out: &SolveOutcome) -> Result<(), String> {
    if out.status != SolveStatus::Optimal {
        return Err(format!("status {:?}", out.status));
    }
    if out.primal_residual > 1e-7 {
        return Err(format!("primal residual {}", out.primal_residual));
    }
    if out.dual_residual > 1e-7 {
        return Err(format!("dual residual {}", out.dual_residual));
    }
    if out.gap > 1e-7 {
        return Err(format!("gap {}", out.gap));
    }
    if out.complementarity > 1e-6 * (1.0 + out.primal_objective.abs()) {
        return Err(format!("complementarity {}", out.complementarity));
    }
    if out.x.len() != p.num_vars() {
        return Err(format!(
            "{} primal entries for {} variables",
            out.x.len(),
            p.num_vars()
        ));
    }
    Ok(())
}

/// Smallest eigenvalue over PSD blocks and smallest entry over nonneg blocks.
pub fn cone_margin(p: &ConicProblem, v: &[f64]) -> f64 {
    let mut worst = f64::INFINITY;
    for (cone, off) in p.cones.iter().zip(p.offsets()) {
        match *cone {
            Cone::Psd(d) => {
                let m = dtaf_core::sdp::svec_to_mat(&v[off..off + cone.len()], d);
                worst = worst.min(m.symmetric_eigenvalues().min());
            }
            Cone::Nonneg(n) => {
                worst = worst.min(
                    v[off..off + n]
                        .iter()
                        .cloned()
                        .fold(f64::INFINITY, f64::min),
                )
            }
            Cone::Free(_) => {}
        }
    }
    worst
}

/// `b'y = -1` with `A'y` in the dual cone and zero on free variables.
pub fn certificate(p: &ConicProblem, out: &SolveOutcome) -> Result<(), String> {
    if out.status != SolveStatus::PrimalInfeasible {
        return Err(format!("status {:?}", out.status));
    }
    let by: f64 = out.y.iter().zip(&p.b).map(|(a, b)| a * b).sum();
    if (by + 1.0).abs() >= 1e-9 {
        return Err(format!("b'y = {by}"));
    }
    let mut aty = vec![0.0; p.num_vars()];
    for (row, &yr) in p.rows.iter().zip(&out.y) {
        row.axpy_into(yr, &mut aty);
    }
    let scale = 1.0 + out.y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if cone_margin(p, &aty) < -1e-7 * scale {
        return Err("A'y leaves the dual cone".into());
    }
    for (cone, off) in p.cones.iter().zip(p.offsets()) {
        if let Cone::Free(n) = cone {
            if aty[off..off + n].iter().any(|v| v.abs() > 1e-7 * scale) {
                return Err("A'y is nonzero on a free variable".into());
            }
        }
    }
    Ok(())
}
