//! Single-pulse range-velocity detection scenario.
//!
//! Sign convention: approaching targets have negative velocity and normalized
//! Doppler `f_D = 2 v / (lambda f_s)` cycles per sample.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexSequence, C64};

/// Propagation speed used for range bins, m/s.
pub const PROPAGATION_SPEED: f64 = 3.0e8;

/// Relative slack when deciding that a range falls on a whole bin.
const BIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub range_m: f64,
    pub vel_mps: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarScene {
    pub lambda_m: f64,
    pub fs_hz: f64,
    pub targets: Vec<Target>,
    /// Noise power at the normalized map output, dB.
    pub noise_db: f64,
    pub pfa: f64,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub seed: u64,
}

impl RadarScene {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("scene: {e}")))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lambda_m > 0.0 && self.lambda_m.is_finite()) {
            return bad("wavelength must be positive");
        }
        if !(self.fs_hz > 0.0 && self.fs_hz.is_finite()) {
            return bad("sample rate must be positive");
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return bad("false-alarm probability must lie in (0, 1)");
        }
        if !self.noise_db.is_finite() {
            return bad("noise power must be finite");
        }
        for t in &self.targets {
            if !(t.range_m.is_finite() && t.vel_mps.is_finite() && t.power_db.is_finite()) {
                return bad("target fields must be finite");
            }
            self.delay_bin(t.range_m)?;
        }
        Ok(())
    }

    /// Range spanned by one sample, `c / (2 f_s)`.
    pub fn range_resolution(&self) -> f64 {
        PROPAGATION_SPEED / (2.0 * self.fs_hz)
    }

    /// Doppler resolution of an `n`-chip pulse in m/s, `lambda f_s / (2 n)`.
    pub fn velocity_resolution(&self, n: usize) -> f64 {
        self.lambda_m * self.fs_hz / (2.0 * n as f64)
    }

    /// Normalized Doppler of a radial velocity.
    pub fn doppler(&self, vel_mps: f64) -> f64 {
        2.0 * vel_mps / (self.lambda_m * self.fs_hz)
    }

    /// Whole-sample round-trip delay of a range; fractional delays are rejected.
    pub fn delay_bin(&self, range_m: f64) -> Result<usize> {
        let d = range_m / self.range_resolution();
        let r = d.round();
        if d < 0.0 || (d - r).abs() > BIN_TOL * d.max(1.0) {
            return Err(Error::Config(format!(
                "range {range_m} m is {d} samples; only whole range bins are supported"
            )));
        }
        Ok(r as usize)
    }

    pub fn noise_power(&self) -> f64 {
        10f64.powf(self.noise_db / 10.0)
    }

    /// `eta = -ln(P_FA) sigma^2`, linear.
    pub fn threshold(&self) -> f64 {
        -self.pfa.ln() * self.noise_power()
    }

    pub fn threshold_db(&self) -> f64 {
        10.0 * self.threshold().log10()
    }
}

/// Echo stream `r[m] = sum a x[m-d] e^{j 2 pi f_D (m-d)} + n[m]`.
///
/// The input noise variance is `N sigma^2` so that the normalized map output
/// carries noise power `sigma^2`.
pub fn synthesize_echo(x: &ComplexSequence, scene: &RadarScene, window: usize) -> Result<Vec<C64>> {
    scene.validate()?;
    let n = x.len();
    let xs = x.as_slice();
    let mut r = vec![C64::new(0.0, 0.0); window];
    for t in &scene.targets {
        let d = scene.delay_bin(t.range_m)?;
        if d + n > window {
            return Err(Error::Config(format!(
                "target at {} m (bin {d}) does not fit a {window}-sample window",
                t.range_m
            )));
        }
        let a = 10f64.powf(t.power_db / 20.0);
        let f = scene.doppler(t.vel_mps);
        for (k, xk) in xs.iter().enumerate() {
            r[d + k] += a * xk * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * k as f64);
        }
    }
    if !scene.noiseless {
        let sd = (n as f64 * scene.noise_power() / 2.0).sqrt();
        let normal = Normal::new(0.0, sd).map_err(|e| Error::Config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
        for v in r.iter_mut() {
            *v += C64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }
    Ok(r)
}

/// Matched-filter bank output, normalized so a matched unit target reads 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeVelocityMap {
    pub n: usize,
    pub range_bins: Vec<usize>,
    pub velocities: Vec<f64>,
    /// `power[i][j]` for range bin `i` and velocity hypothesis `j`, linear.
    pub power: Vec<Vec<f64>>,
    pub threshold: f64,
    pub range_resolution: f64,
    pub velocity_resolution: f64,
}

impl RangeVelocityMap {
    pub fn threshold_db(&self) -> f64 {
        10.0 * self.threshold.log10()
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    /// Cells above the threshold as `(range index, velocity index)`.
    pub fn detections(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.power.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if p > self.threshold {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// `y(d, v) = |sum_n r[n+d] conj(x[n]) e^{-j 2 pi f_v n}|^2 / N^2` for every
/// range bin whose window fits and every velocity hypothesis.
pub fn range_velocity_map(
    r: &[C64],
    x: &ComplexSequence,
    scene: &RadarScene,
    velocities: &[f64],
) -> RangeVelocityMap {
    let n = x.len();
    let xs = x.as_slice();
    let bins: Vec<usize> = if r.len() >= n {
        (0..=r.len() - n).collect()
    } else {
        Vec::new()
    };
    let steer: Vec<Vec<C64>> = velocities
        .iter()
        .map(|&v| {
            let f = scene.doppler(v);
            (0..n)
                .map(|k| {
                    xs[k].conj() * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * k as f64)
                })
                .collect()
        })
        .collect();
    let norm = (n * n) as f64;
    let power = bins
        .par_iter()
        .map(|&d| {
            steer
                .iter()
                .map(|s| {
                    s.iter()
                        .zip(&r[d..d + n])
                        .map(|(a, b)| a * b)
                        .sum::<C64>()
                        .norm_sqr()
                        / norm
                })
                .collect()
        })
        .collect();
    RangeVelocityMap {
        n,
        range_bins: bins,
        velocities: velocities.to_vec(),
        power,
        threshold: scene.threshold(),
        range_resolution: scene.range_resolution(),
        velocity_resolution: scene.velocity_resolution(n),
    }
}

/// Velocity hypotheses covering the unambiguous band with `oversample`
/// points per resolution cell.
pub fn velocity_grid(scene: &RadarScene, n: usize, oversample: usize) -> Vec<f64> {
    let step = scene.velocity_resolution(n) / oversample.max(1) as f64;
    let half = (n * oversample.max(1)) as isize / 2;
    (-half..half).map(|k| k as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub range_m: f64,
    pub vel_mps: f64,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FalseAlarmReport {
    pub sign_convention: String,
    pub threshold_db: f64,
    pub range_resolution_m: f64,
    pub velocity_resolution_mps: f64,
    pub detections: Vec<Detection>,
    pub false_alarms: Vec<Detection>,
    pub targets_detected: usize,
    /// False alarms `1..=L` bins from a target and within `f_R` of its Doppler.
    pub false_alarms_in_region: Option<usize>,
}

/// Echo, map and report for one scene. The echo window covers the farthest
/// target plus two pulse lengths; `threshold` overrides the scene's, linear.
pub fn simulate(
    x: &ComplexSequence,
    scene: &RadarScene,
    oversample: usize,
    threshold: Option<f64>,
    region: Option<(usize, f64)>,
) -> Result<(RangeVelocityMap, FalseAlarmReport)> {
    let n = x.len();
    let far = scene
        .targets
        .iter()
        .map(|t| scene.delay_bin(t.range_m))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    let r = synthesize_echo(x, scene, far + 2 * n)?;
    let vels = velocity_grid(scene, n, oversample);
    let mut map = range_velocity_map(&r, x, scene, &vels);
    if let Some(eta) = threshold {
        map = map.with_threshold(eta);
    }
    let report = false_alarm_report(&map, scene, region)?;
    Ok((map, report))
}

/// Scores the map: a detection is a false alarm unless it lies in a target's
/// own range bin and within one velocity resolution of it.
pub fn false_alarm_report(
    map: &RangeVelocityMap,
    scene: &RadarScene,
    region: Option<(usize, f64)>,
) -> Result<FalseAlarmReport> {
    let targets: Vec<(usize, f64)> = scene
        .targets
        .iter()
        .map(|t| Ok((scene.delay_bin(t.range_m)?, t.vel_mps)))
        .collect::<Result<_>>()?;
    let dv = map.velocity_resolution;
    let cell = |i: usize, j: usize| Detection {
        range_m: map.range_bins[i] as f64 * map.range_resolution,
        vel_mps: map.velocities[j],
        power_db: 10.0 * map.power[i][j].log10(),
    };
    let mut detections = Vec::new();
    let mut false_alarms = Vec::new();
    let mut hit = vec![false; targets.len()];
    let mut in_region = 0;
    for (i, j) in map.detections() {
        let d = map.range_bins[i];
        let v = map.velocities[j];
        detections.push(cell(i, j));
        let owner = targets
            .iter()
            .position(|&(td, tv)| td == d && (v - tv).abs() < dv);
        match owner {
            Some(k) => hit[k] = true,
            None => {
                false_alarms.push(cell(i, j));
                if let Some((lags, f_r)) = region {
                    let near = targets.iter().any(|&(td, tv)| {
                        let lag = d.abs_diff(td);
                        lag >= 1
                            && lag <= lags
                            && (scene.doppler(v) - scene.doppler(tv)).abs() <= f_r + 1e-12
                    });
                    if near {
                        in_region += 1;
                    }
                }
            }
        }
    }
    Ok(FalseAlarmReport {
        sign_convention: "approaching targets have negative velocity; f_D = 2v/(lambda f_s)".into(),
        threshold_db: map.threshold_db(),
        range_resolution_m: map.range_resolution,
        velocity_resolution_mps: map.velocity_resolution,
        detections,
        false_alarms,
        targets_detected: hit.iter().filter(|&&h| h).count(),
        false_alarms_in_region: region.map(|_| in_region),
    })
}

/// CSV `range_m,vel_mps,power_db,detected,false_alarm`.
pub fn write_map_csv<W: Write>(
    map: &RangeVelocityMap,
    report: &FalseAlarmReport,
    mut w: W,
) -> Result<()> {
    writeln!(w, "range_m,vel_mps,power_db,detected,false_alarm")?;
    let key = |d: &Detection| (d.range_m.to_bits(), d.vel_mps.to_bits());
    let alarms: std::collections::HashSet<_> = report.false_alarms.iter().map(key).collect();
    for (i, row) in map.power.iter().enumerate() {
        let range = map.range_bins[i] as f64 * map.range_resolution;
        for (j, &p) in row.iter().enumerate() {
            let detected = p > map.threshold;
            let fa = detected && alarms.contains(&(range.to_bits(), map.velocities[j].to_bits()));
            writeln!(
                w,
                "{range},{},{},{},{}",
                map.velocities[j],
                10.0 * p.log10(),
                detected as u8,
                fa as u8
            )?;
        }
    }
    Ok(())
}
