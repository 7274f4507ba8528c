//! Delay-Doppler ambiguity evaluation and sidelobe metrics.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexSequence, C64};
use crate::trigpoly::{sup_modulus_on_band, CausalTrigPoly};

/// Doppler sampling `k/M`, `|k| <= K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DopplerGrid {
    pub m: usize,
    pub k: usize,
}

/// Lags `1..=L` (and their mirrors) over the Doppler band `[-f_r, f_r]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidelobeRegion {
    pub max_lag: usize,
    pub f_r: f64,
    pub grid: Option<DopplerGrid>,
}

impl SidelobeRegion {
    /// `f_r = 0` collapses the band to the zero-Doppler cut.
    pub fn continuous(max_lag: usize, f_r: f64) -> Result<Self> {
        if max_lag == 0 {
            return Err(Error::Config(
                "the sidelobe region needs at least one lag".into(),
            ));
        }
        if !(0.0..=0.5).contains(&f_r) {
            return Err(Error::Config(format!(
                "Doppler half-width {f_r} outside [0, 1/2]"
            )));
        }
        Ok(Self {
            max_lag,
            f_r,
            grid: None,
        })
    }

    /// Region whose band edge is exactly the last grid point, `f_r = k/m`.
    pub fn gridded(max_lag: usize, m: usize, k: usize) -> Result<Self> {
        if m == 0 || 2 * k > m {
            return Err(Error::Config(format!(
                "grid K/M = {k}/{m} must lie in [0, 1/2]"
            )));
        }
        let mut r = Self::continuous(max_lag, k as f64 / m as f64)?;
        r.grid = Some(DopplerGrid { m, k });
        Ok(r)
    }

    /// Attaches a grid to an existing band; `k/m` must reproduce `f_r`.
    pub fn with_grid(self, m: usize, k: usize) -> Result<Self> {
        let r = Self::gridded(self.max_lag, m, k)?;
        if r.f_r != self.f_r {
            return Err(Error::Config(format!(
                "grid K/M = {k}/{m} does not equal f_R = {}",
                self.f_r
            )));
        }
        Ok(r)
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.max_lag > n {
            return Err(Error::Config(format!(
                "max lag {} exceeds the code length {n}",
                self.max_lag
            )));
        }
        Ok(())
    }

    fn grid(&self) -> Result<DopplerGrid> {
        self.grid
            .ok_or_else(|| Error::Config("this metric needs a Doppler grid (M, K)".into()))
    }
}

fn check_lag(n: usize, l: isize) -> Result<()> {
    if n == 0 || l.unsigned_abs() >= n {
        return Err(Error::Domain(format!(
            "lag {l} out of range for length {n}"
        )));
    }
    Ok(())
}

/// `A(l, f) = sum_n x_n conj(x_{n-l}) exp(-j 2 pi f (n - l))`.
pub fn dtaf(x: &ComplexSequence, l: isize, f: f64) -> Result<C64> {
    let n = x.len();
    check_lag(n, l)?;
    let xs = x.as_slice();
    let lo = 0.max(l) as usize;
    let hi = (n as isize).min(n as isize + l) as usize;
    Ok((lo..hi)
        .map(|i| {
            let m = i as isize - l;
            xs[i] * xs[m as usize].conj() * C64::from_polar(1.0, -2.0 * PI * f * m as f64)
        })
        .sum())
}

/// Ambiguity sampled at `f = k/m`.
pub fn daf(x: &ComplexSequence, l: isize, k: isize, m: usize) -> Result<C64> {
    if m == 0 {
        return Err(Error::Domain("Doppler divisor must be positive".into()));
    }
    dtaf(x, l, k as f64 / m as f64)
}

/// Trimmed lag polynomial: coefficients `x_{m+l} conj(x_m)`, `m = 0..N-1-l`,
/// whose value at `f` is `A(l, f)`.
pub fn lag_poly(x: &ComplexSequence, l: usize) -> Result<CausalTrigPoly> {
    check_lag(x.len(), l as isize)?;
    let xs = x.as_slice();
    CausalTrigPoly::new((0..x.len() - l).map(|m| xs[m + l] * xs[m].conj()).collect())
}

fn to_db(v: f64) -> f64 {
    20.0 * v.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakLocation {
    pub lag: usize,
    #[serde(rename = "f_D")]
    pub f_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSidelobe {
    pub db: f64,
    /// `max |A| / N`
    pub ratio: f64,
    pub argmax: PeakLocation,
}

/// Peak sidelobe over the continuous band (positive lags; negative lags mirror).
pub fn ntpsl(x: &ComplexSequence, region: &SidelobeRegion) -> Result<PeakSidelobe> {
    let n = x.len();
    region.check(n)?;
    let per_lag: Vec<(usize, f64, f64)> = (1..=region.max_lag.min(n - 1))
        .into_par_iter()
        .map(|l| {
            let (f, v) = sup_modulus_on_band(&lag_poly(x, l).expect("lag in range"), region.f_r);
            (l, f, v)
        })
        .collect();
    let (lag, f_d, v) =
        per_lag
            .into_iter()
            .fold((1, 0.0, 0.0), |best, c| if c.2 > best.2 { c } else { best });
    let ratio = v / n as f64;
    Ok(PeakSidelobe {
        db: to_db(ratio),
        ratio,
        argmax: PeakLocation { lag, f_d },
    })
}

fn grid_values(x: &ComplexSequence, region: &SidelobeRegion) -> Result<Vec<(usize, f64)>> {
    let n = x.len();
    region.check(n)?;
    let g = region.grid()?;
    let mut out = Vec::new();
    for l in 1..=region.max_lag.min(n - 1) {
        let poly = lag_poly(x, l)?;
        let k = g.k as isize;
        out.extend((-k..=k).map(|kk| (l, poly.modulus(kk as f64 / g.m as f64))));
    }
    Ok(out)
}

/// Peak sidelobe over the Doppler grid.
pub fn ngpsl(x: &ComplexSequence, region: &SidelobeRegion) -> Result<f64> {
    let peak = grid_values(x, region)?
        .iter()
        .map(|v| v.1)
        .fold(0.0, f64::max);
    Ok(to_db(peak / x.len() as f64))
}

/// Weighted mean of `|A| / N` over the grid region; magnitude, not energy.
/// All-zero weights give negative infinity.
pub fn nwisl(x: &ComplexSequence, region: &SidelobeRegion, weights: &[f64]) -> Result<f64> {
    let g = region.grid()?;
    if weights.len() != region.max_lag {
        return Err(Error::Config(format!(
            "{} lag weights for {} lags",
            weights.len(),
            region.max_lag
        )));
    }
    let n = x.len() as f64;
    let sum: f64 = grid_values(x, region)?
        .iter()
        .map(|&(l, v)| weights[l - 1] * v / n)
        .sum();
    Ok(to_db(sum / (region.max_lag * (2 * g.k + 1)) as f64))
}

/// JSON metrics report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub ntpsl_db: f64,
    pub ngpsl_db: Option<f64>,
    pub nwisl_db: Option<f64>,
    pub argmax: PeakLocation,
}

/// All metrics the region supports; grid metrics are `None` without a grid.
/// Missing weights default to one per lag.
pub fn metrics_report(
    x: &ComplexSequence,
    region: &SidelobeRegion,
    weights: Option<&[f64]>,
) -> Result<MetricsReport> {
    let peak = ntpsl(x, region)?;
    let (ngpsl_db, nwisl_db) = if region.grid.is_some() {
        let ones = vec![1.0; region.max_lag];
        (
            Some(ngpsl(x, region)?),
            Some(nwisl(x, region, weights.unwrap_or(&ones))?),
        )
    } else {
        (None, None)
    };
    Ok(MetricsReport {
        ntpsl_db: peak.db,
        ngpsl_db,
        nwisl_db,
        argmax: peak.argmax,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfSample {
    pub lag: isize,
    pub f_d: f64,
    pub value: C64,
}

/// Ambiguity on `lags x {-1/2 .. 1/2}` with `points` equispaced Doppler samples
/// (both ends included).
pub fn af_surface(
    x: &ComplexSequence,
    lags: std::ops::RangeInclusive<isize>,
    points: usize,
) -> Result<Vec<AfSample>> {
    if points < 2 {
        return Err(Error::Config(
            "a surface needs at least two Doppler points".into(),
        ));
    }
    let mut out = Vec::new();
    for l in lags {
        check_lag(x.len(), l)?;
        for i in 0..points {
            let f_d = -0.5 + i as f64 / (points - 1) as f64;
            out.push(AfSample {
                lag: l,
                f_d,
                value: dtaf(x, l, f_d)?,
            });
        }
    }
    Ok(out)
}

/// CSV `lag,f_D,re,im,mag_db` with `mag_db = 20 log10(|A| / n)`.
pub fn write_surface_csv<W: Write>(samples: &[AfSample], n: usize, mut w: W) -> Result<()> {
    writeln!(w, "lag,f_D,re,im,mag_db")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.lag,
            s.f_d,
            s.value.re,
            s.value.im,
            to_db(s.value.norm() / n as f64)
        )?;
    }
    Ok(())
}
