//! Python bindings: waveforms, ambiguity metrics, bound certificates, SROCR
//! design and the detection scenario.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dtaf_core::detect::{self, RadarScene};
use dtaf_core::linalg::{ComplexSequence, HermitianMatrix};
use dtaf_core::metrics::{self, SidelobeRegion};
use dtaf_core::srocr::{self, ConstraintStyle, DesignSpec, LiftMode};
use dtaf_core::trigpoly::{self, BoundVerdict, CausalTrigPoly, SegmentBoundCertificate};
use dtaf_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Design(_) | Error::SolverStall(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rows(m: &HermitianMatrix) -> Vec<Vec<Complex64>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect())
        .collect()
}

/// A finite complex sequence.
#[pyclass(name = "Waveform", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWaveform(ComplexSequence);

#[pymethods]
impl PyWaveform {
    #[new]
    fn new(samples: Vec<Complex64>) -> PyResult<Self> {
        ComplexSequence::new(samples).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn from_phases(phases: Vec<f64>) -> PyResult<Self> {
        ComplexSequence::from_phases(&phases)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn samples(&self) -> Vec<Complex64> {
        self.0.as_slice().to_vec()
    }

    fn is_unimodular(&self, tol: f64) -> bool {
        self.0.is_unimodular(tol)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Waveform(n={})", self.0.len())
    }
}

/// Lags `1..=max_lag` over `|f| <= f_r`, optionally with the bins `k/m`.
#[pyclass(name = "SidelobeRegion", frozen)]
struct PyRegion(SidelobeRegion);

#[pymethods]
impl PyRegion {
    #[new]
    #[pyo3(signature = (max_lag, f_r, m=None, k=None))]
    fn new(max_lag: usize, f_r: f64, m: Option<usize>, k: Option<usize>) -> PyResult<Self> {
        let region = match (m, k) {
            (Some(m), Some(k)) => {
                SidelobeRegion::continuous(max_lag, f_r).and_then(|r| r.with_grid(m, k))
            }
            (None, None) => SidelobeRegion::continuous(max_lag, f_r),
            _ => Err(Error::Config("m and k go together".into())),
        };
        region.map(Self).map_err(py_err)
    }

    /// Band `|f| <= k/m` together with its bins.
    #[staticmethod]
    fn gridded(max_lag: usize, m: usize, k: usize) -> PyResult<Self> {
        SidelobeRegion::gridded(max_lag, m, k)
            .map(Self)
            .map_err(py_err)
    }
}

#[pyfunction]
fn dtaf(x: &PyWaveform, l: isize, f: f64) -> PyResult<Complex64> {
    metrics::dtaf(&x.0, l, f).map_err(py_err)
}

/// NTPSL, NGPSL and NWISL in dB plus the location of the true peak.
#[pyfunction]
#[pyo3(signature = (x, region, weights=None))]
fn metrics_report<'py>(
    py: Python<'py>,
    x: &PyWaveform,
    region: &PyRegion,
    weights: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = metrics::metrics_report(&x.0, &region.0, weights.as_deref()).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("ntpsl_db", r.ntpsl_db)?;
    d.set_item("ngpsl_db", r.ngpsl_db)?;
    d.set_item("nwisl_db", r.nwisl_db)?;
    d.set_item("argmax_lag", r.argmax.lag)?;
    d.set_item("argmax_f", r.argmax.f_d)?;
    Ok(d)
}

/// `(f, |H(f)|)` at the maximizer of `|sum h_m e^{-j 2 pi f m}|` over the band.
#[pyfunction]
fn sup_modulus(coeffs: Vec<Complex64>, f_r: f64) -> PyResult<(f64, f64)> {
    let h = CausalTrigPoly::new(coeffs).map_err(py_err)?;
    Ok(trigpoly::sup_modulus_on_band(&h, f_r))
}

/// Gram pair witnessing `|H(f)| <= gamma` on the band.
#[pyclass(name = "Certificate", frozen)]
struct PyCertificate(SegmentBoundCertificate);

#[pymethods]
impl PyCertificate {
    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }

    #[getter]
    fn q(&self) -> Vec<Vec<Complex64>> {
        rows(&self.0.q)
    }

    #[getter]
    fn p(&self) -> Vec<Vec<Complex64>> {
        rows(&self.0.p)
    }

    #[getter]
    fn h(&self) -> Vec<Complex64> {
        self.0.h.clone()
    }

    fn equality_residual(&self, f_r: f64) -> PyResult<f64> {
        let w = trigpoly::segment_weights(f_r).map_err(py_err)?;
        Ok(self.0.equality_residual(w))
    }
}

/// A certificate when the bound holds, `None` when it is refuted.
#[pyfunction]
fn certify_bound(coeffs: Vec<Complex64>, gamma: f64, f_r: f64) -> PyResult<Option<PyCertificate>> {
    let h = CausalTrigPoly::new(coeffs).map_err(py_err)?;
    Ok(
        match trigpoly::certify_bound(&h, gamma, f_r).map_err(py_err)? {
            BoundVerdict::Feasible(c) => Some(PyCertificate(c)),
            BoundVerdict::Infeasible => None,
        },
    )
}

#[pyclass(name = "DesignSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDesignSpec(DesignSpec);

#[pymethods]
impl PyDesignSpec {
    /// `grid=(m, k)` constrains only the bins `k'/m`, `|k'| <= k`.
    #[new]
    #[pyo3(signature = (n, max_lag, f_r, zeta=10.0, kappa=0.99, epsilon=1e-3, mode="trimmed",
                        grid=None, seed=0, max_solves=2000, warm_start=true))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n: usize,
        max_lag: usize,
        f_r: f64,
        zeta: f64,
        kappa: f64,
        epsilon: f64,
        mode: &str,
        grid: Option<(usize, usize)>,
        seed: u64,
        max_solves: usize,
        warm_start: bool,
    ) -> PyResult<Self> {
        let mut s = DesignSpec::new(n, max_lag, f_r, zeta, kappa, epsilon);
        s.mode = match mode {
            "trimmed" => LiftMode::Trimmed,
            "paperfull" => LiftMode::PaperFull,
            _ => return Err(PyValueError::new_err(format!("unknown mode {mode:?}"))),
        };
        if let Some((m, k)) = grid {
            s.style = ConstraintStyle::Grid { m, k };
        }
        s.seed = seed;
        s.max_solves = max_solves;
        s.warm_start = warm_start;
        s.validate().map_err(py_err)?;
        Ok(Self(s))
    }

    fn region(&self) -> PyResult<PyRegion> {
        self.0.region().map(PyRegion).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

#[pyclass(name = "DesignResult", frozen)]
struct PyDesignResult(srocr::DesignResult);

#[pymethods]
impl PyDesignResult {
    #[getter]
    fn waveform(&self) -> PyWaveform {
        PyWaveform(self.0.x_opt.clone())
    }

    #[getter]
    fn ntpsl_db(&self) -> f64 {
        self.0.report.ntpsl_db
    }

    #[getter]
    fn ngpsl_db(&self) -> Option<f64> {
        self.0.report.ngpsl_db
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations()
    }

    #[getter]
    fn solves(&self) -> usize {
        self.0.solves
    }

    #[getter]
    fn capped(&self) -> bool {
        self.0.capped
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.0.t_final
    }

    #[getter]
    fn pre_projection_deviation(&self) -> f64 {
        self.0.pre_projection_deviation
    }

    #[getter]
    fn certificates(&self) -> Vec<PyCertificate> {
        self.0
            .certificates
            .iter()
            .cloned()
            .map(PyCertificate)
            .collect()
    }

    /// One dict per solve: iter, feasible, stalled, w, delta, t, lambda_max_ratio.
    #[getter]
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.0
            .trace
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("iter", r.iter)?;
                d.set_item("feasible", r.feasible)?;
                d.set_item("stalled", r.stalled)?;
                d.set_item("w", r.w)?;
                d.set_item("delta", r.delta)?;
                d.set_item("t", r.t)?;
                d.set_item("lambda_max_ratio", r.lambda_max_ratio)?;
                Ok(d)
            })
            .collect()
    }
}

/// Runs SROCR to its stop rule; releases the GIL while solving.
#[pyfunction]
fn design(py: Python<'_>, spec: &PyDesignSpec) -> PyResult<PyDesignResult> {
    let s = spec.0.clone();
    py.detach(move || srocr::srocr_run(&s))
        .map(PyDesignResult)
        .map_err(py_err)
}

/// Range-velocity map of a JSON scene; returns the false-alarm report as a
/// dict. `region=(max_lag, f_r)` counts false alarms inside that region.
#[pyfunction]
#[pyo3(signature = (x, scene_json, oversample=1, threshold_db=None, region=None))]
fn simulate<'py>(
    py: Python<'py>,
    x: &PyWaveform,
    scene_json: &str,
    oversample: usize,
    threshold_db: Option<f64>,
    region: Option<(usize, f64)>,
) -> PyResult<Bound<'py, PyAny>> {
    let scene = RadarScene::from_json(scene_json).map_err(py_err)?;
    let threshold = threshold_db.map(|db| 10f64.powf(db / 10.0));
    let (_, report) =
        detect::simulate(&x.0, &scene, oversample, threshold, region).map_err(py_err)?;
    let text =
        serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pymodule(name = "dtaf")]
fn dtaf_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWaveform>()?;
    m.add_class::<PyRegion>()?;
    m.add_class::<PyCertificate>()?;
    m.add_class::<PyDesignSpec>()?;
    m.add_class::<PyDesignResult>()?;
    m.add_function(wrap_pyfunction!(dtaf, m)?)?;
    m.add_function(wrap_pyfunction!(metrics_report, m)?)?;
    m.add_function(wrap_pyfunction!(sup_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(certify_bound, m)?)?;
    m.add_function(wrap_pyfunction!(design, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
