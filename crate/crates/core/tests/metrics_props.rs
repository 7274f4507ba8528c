use dtaf_core::linalg::{ComplexSequence, C64};
use dtaf_core::metrics::{daf, dtaf, ngpsl, ntpsl, SidelobeRegion};
use proptest::prelude::*;

fn unimodular(phases: &[f64]) -> ComplexSequence {
    ComplexSequence::from_phases(phases).unwrap()
}

fn phases(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..std::f64::consts::TAU, 2..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mirror_symmetry(ph in phases(24), fs in proptest::collection::vec(-0.5f64..0.5, 64)) {
        let x = unimodular(&ph);
        let n = x.len() as isize;
        for l in 0..n {
            for &f in &fs {
                let a = dtaf(&x, l, f).unwrap().norm();
                let b = dtaf(&x, -l, -f).unwrap().norm();
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn peak_and_bound(ph in phases(32), f in -0.5f64..0.5) {
        let x = unimodular(&ph);
        let n = x.len();
        prop_assert!((dtaf(&x, 0, 0.0).unwrap() - C64::new(n as f64, 0.0)).norm() < 1e-12);
        for l in -(n as isize - 1)..n as isize {
            prop_assert!(dtaf(&x, l, f).unwrap().norm() <= (n - l.unsigned_abs()) as f64 + 1e-12);
        }
    }

    #[test]
    fn zero_doppler_is_autocorrelation(ph in phases(20)) {
        let x = unimodular(&ph);
        let xs = x.as_slice();
        let n = xs.len();
        for l in 0..n {
            let r: C64 = (0..n - l).map(|i| xs[i + l] * xs[i].conj()).sum();
            prop_assert!((dtaf(&x, l as isize, 0.0).unwrap() - r).norm() < 1e-12);
        }
    }

    #[test]
    fn daf_samples_dtaf(ph in phases(16), l in 0isize..15, k in -8isize..8, m in 16usize..64) {
        let x = unimodular(&ph);
        let l = l % x.len() as isize;
        let a = daf(&x, l, k, m).unwrap();
        let b = dtaf(&x, l, k as f64 / m as f64).unwrap();
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn grid_peak_never_exceeds_continuous(ph in phases(32), lags in 1usize..4, k in 0usize..5) {
        let x = unimodular(&ph);
        let lags = lags.min(x.len() - 1);
        let r = SidelobeRegion::gridded(lags, 32, k).unwrap();
        prop_assert!(ngpsl(&x, &r).unwrap() <= ntpsl(&x, &r).unwrap().db + 1e-9);
    }
}

#[test]
fn ntpsl_matches_dense_grid() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..8 {
        let n = rng.random_range(4..=32usize);
        let ph: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let x = unimodular(&ph);
        let f_r = [1.0 / 16.0, 3.0 / 32.0, 0.25][rng.random_range(0..3usize)];
        let lags = 3.min(n - 1);
        let region = SidelobeRegion::continuous(lags, f_r).unwrap();
        let fast = ntpsl(&x, &region).unwrap().db;
        let pts = 65536;
        let mut peak = 0.0f64;
        for l in 1..=lags as isize {
            for i in 0..pts {
                let f = -f_r + 2.0 * f_r * i as f64 / (pts - 1) as f64;
                peak = peak.max(dtaf(&x, l, f).unwrap().norm());
            }
        }
        let dense = 20.0 * (peak / n as f64).log10();
        assert!(
            (fast - dense).abs() < 0.01,
            "oracle {fast} vs dense {dense}"
        );
        assert!(fast >= dense - 1e-9);
    }
}
