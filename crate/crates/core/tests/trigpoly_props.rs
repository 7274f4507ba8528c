use std::f64::consts::PI;

use dtaf_core::linalg::{ElementaryToeplitz, HermitianMatrix, MatrixOperand, C64};
use dtaf_core::trigpoly::{
    certify_bound, segment_weights, sup_modulus_on_band, BoundVerdict, CausalTrigPoly, PhiMatrix,
    SegmentBoundCertificate, SegmentWeights,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_poly(rng: &mut ChaCha8Rng, k: usize) -> CausalTrigPoly {
    CausalTrigPoly::new(
        (0..=k)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
    )
    .unwrap()
}

#[test]
fn certify_agrees_with_sup_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let bands = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0];
    for trial in 0..100 {
        let k = rng.random_range(0..=8usize);
        let h = random_poly(&mut rng, k);
        let f_r = bands[trial % 3];
        let sup = sup_modulus_on_band(&h, f_r).1;
        let above = certify_bound(&h, (1.0 + 1e-4) * sup, f_r).unwrap();
        let below = certify_bound(&h, (1.0 - 1e-4) * sup, f_r).unwrap();
        assert!(
            matches!(above, BoundVerdict::Feasible(_)),
            "trial {trial}: K={k} f_r={f_r} should be feasible"
        );
        assert_eq!(
            below,
            BoundVerdict::Infeasible,
            "trial {trial}: K={k} f_r={f_r} should be infeasible"
        );
        if let BoundVerdict::Feasible(cert) = above {
            let w = segment_weights(f_r).unwrap();
            assert!(cert.equality_residual(w) < 1e-6 * (1.0 + sup * sup));
            assert!(cert.bordered().min_eigenvalue().unwrap() > -1e-6 * (1.0 + sup * sup));
        }
    }
}

fn sign_pattern_holds(w: &SegmentWeights) -> bool {
    let grid = 4096;
    (0..=grid).all(|i| {
        let f = -0.5 + i as f64 / grid as f64;
        let e = w.e(f);
        if f.abs() <= w.f_r {
            e >= -1e-10
        } else if f.abs() >= w.f_r + 1e-3 {
            e <= -1e-10
        } else {
            true
        }
    })
}

#[test]
fn e_sign_pattern_on_random_bands() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let f_r = rng.random_range(0.005..0.49);
        let w = segment_weights(f_r).unwrap();
        assert!(sign_pattern_holds(&w), "f_r = {f_r}");
        assert!(w.e(f_r).abs() < 1e-12 && w.e(-f_r).abs() < 1e-12);
        assert_eq!(w.d1.im, 0.0);
    }
}

#[test]
fn complex_d1_variant_breaks_the_sign_pattern() {
    // Adding j tan(pi f_r)/2 to d1 shifts the zeros of E off the symmetric band.
    for f_r in [1.0 / 16.0, 0.1, 1.0 / 8.0, 0.2, 1.0 / 4.0] {
        let real = segment_weights(f_r).unwrap();
        let skew = SegmentWeights {
            d1: real.d1 + C64::new(0.0, (PI * f_r).tan() / 2.0),
            ..real
        };
        assert!(
            skew.e(-f_r) < -1e-6,
            "f_r = {f_r}: E(-f_r) = {}",
            skew.e(-f_r)
        );
        assert!(!sign_pattern_holds(&skew));
    }
}

fn hermitian_from(vals: &[f64], k: usize) -> HermitianMatrix {
    let mut it = vals.iter().cycle();
    HermitianMatrix::from_upper(k, |i, j| {
        let re = *it.next().unwrap();
        let im = if i == j { 0.0 } else { *it.next().unwrap() };
        C64::new(re, im)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_keeps_supremum(coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8), l in 0usize..6, band in 0usize..3) {
        let f_r = [1.0 / 16.0, 0.125, 0.3][band];
        let h = CausalTrigPoly::new(coeffs.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap();
        let a = sup_modulus_on_band(&h, f_r).1;
        let b = sup_modulus_on_band(&h.shifted(l), f_r).1;
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
    }

    #[test]
    fn phi_expansion_multiplies_by_e(k in 1usize..=6, vals in proptest::collection::vec(-1.0f64..1.0, 36), f_r in 0.01f64..0.49) {
        let w = segment_weights(f_r).unwrap();
        let p = hermitian_from(&vals, k);
        let ki = k as isize;
        let phi: Vec<(isize, C64)> = (-ki..=ki).map(|n| (n, PhiMatrix::new(k, n, w).trace_with(&p))).collect();
        let theta: Vec<(isize, C64)> =
            (-(ki - 1)..ki).map(|m| (m, ElementaryToeplitz::new(k, m).trace_with(&p))).collect();
        for i in 0..1024 {
            let f = -0.5 + i as f64 / 1024.0;
            let z = |n: isize| C64::from_polar(1.0, -2.0 * PI * f * n as f64);
            let lhs: C64 = phi.iter().map(|&(n, t)| t * z(n)).sum();
            let rhs: C64 = theta.iter().map(|&(m, t)| t * z(m)).sum::<C64>() * w.e(f);
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
        }
        // Negative offsets are the conjugate continuation.
        for n in 1..=ki {
            let a = PhiMatrix::new(k, n, w).trace_with(&p);
            let b = PhiMatrix::new(k, -n, w).trace_with(&p);
            prop_assert!((a - b.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn repair_closes_perturbed_certificates(k in 0usize..=6, seed in 0u64..1000, noise in 1e-9f64..1e-5, band in 0usize..3) {
        let f_r = [1.0 / 16.0, 0.125, 0.3][band];
        let w = segment_weights(f_r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_poly(&mut rng, k);
        let sup = sup_modulus_on_band(&h, f_r).1;
        let BoundVerdict::Feasible(c) = certify_bound(&h, 1.01 * sup, f_r).unwrap() else {
            panic!("bound above the sup was refuted");
        };
        let vals: Vec<f64> = (0..64).map(|_| rng.random_range(-noise..noise)).collect();
        let bump = |m: &HermitianMatrix| {
            let e = hermitian_from(&vals, m.dim());
            HermitianMatrix::from_upper(m.dim(), |i, j| m.get(i, j) + e.get(i, j))
        };
        let r = SegmentBoundCertificate::repaired(h.coeffs().to_vec(), &bump(&c.q), &bump(&c.p), w).unwrap();
        let scale = 1.0 + sup * sup;
        prop_assert!(r.equality_residual(w) <= 1e-12 * scale);
        prop_assert!(r.bordered().min_eigenvalue().unwrap() >= 0.0);
        if k > 0 {
            prop_assert!(r.p.min_eigenvalue().unwrap() >= 0.0);
        }
        // The repaired bound is still a bound and stays near the solved one.
        prop_assert!(r.gamma >= sup * (1.0 - 1e-12));
        prop_assert!((r.gamma - c.gamma).abs() <= 1e-3 * (1.0 + c.gamma));
    }
}
