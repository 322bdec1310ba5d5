//! Python bindings: the estimators, bandwidth selectors, kernels and
//! benchmark models, exposed on plain lists of floats.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use npsobol::bandwidth::{self, BandwidthSearchSpec};
use npsobol::bootstrap::{BootstrapConfig, SigmaMode};
use npsobol::data::Dataset;
use npsobol::kernels::{kernel_eval as kernel_eval_rs, kernel_moments as kernel_moments_rs};
use npsobol::kernels::{KernelOrder, KernelSpec};
use npsobol::models;
use npsobol::models::{DykeConfig, DykeOutput, GSobolSpec, Model};
use npsobol::rng::RandomStream;
use npsobol::smoother::{regression_nw, RegressionSample};
use npsobol::sobol;
use npsobol::NpError;

fn np_err(e: NpError) -> PyErr {
    match e {
        NpError::Io { .. } | NpError::Csv { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn kernel(order: u8) -> PyResult<KernelSpec> {
    Ok(KernelSpec::epanechnikov(
        KernelOrder::from_flag(order).map_err(np_err)?,
    ))
}

fn sigma(mode: &str) -> PyResult<SigmaMode> {
    match mode {
        "smoothed" => Ok(SigmaMode::Smoothed),
        "global" => Ok(SigmaMode::Global),
        other => Err(PyValueError::new_err(format!(
            "sigma_mode must be 'smoothed' or 'global', got {other:?}"
        ))),
    }
}

fn sample(x: Vec<f64>, y: Vec<f64>) -> PyResult<RegressionSample> {
    RegressionSample::new(x, y).map_err(np_err)
}

fn search_for(sample: &RegressionSample) -> PyResult<BandwidthSearchSpec> {
    BandwidthSearchSpec::for_sample(sample).map_err(np_err)
}

/// Outcome of a bandwidth search.
#[pyclass(name = "BandwidthResult", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBandwidthResult {
    #[pyo3(get)]
    h: f64,
    #[pyo3(get)]
    objective: f64,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    flat_curve: bool,
    #[pyo3(get)]
    evaluations: usize,
}

impl From<bandwidth::BandwidthResult> for PyBandwidthResult {
    fn from(r: bandwidth::BandwidthResult) -> Self {
        PyBandwidthResult {
            h: r.h,
            objective: r.objective,
            converged: r.converged,
            flat_curve: r.flat_curve,
            evaluations: r.evaluations,
        }
    }
}

#[pymethods]
impl PyBandwidthResult {
    fn __repr__(&self) -> String {
        format!(
            "BandwidthResult(h={}, objective={}, converged={}, flat_curve={})",
            self.h, self.objective, self.converged, self.flat_curve
        )
    }
}

/// A first-order Sobol index estimate for one input.
#[pyclass(name = "SobolEstimate", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySobolEstimate {
    #[pyo3(get)]
    variable: usize,
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    method: String,
    #[pyo3(get)]
    h: Option<f64>,
    #[pyo3(get)]
    flat_curve: bool,
    #[pyo3(get)]
    degenerate_points: usize,
}

impl From<sobol::SobolEstimate> for PySobolEstimate {
    fn from(e: sobol::SobolEstimate) -> Self {
        PySobolEstimate {
            variable: e.variable,
            value: e.value,
            method: e.method.to_string(),
            h: e.h,
            flat_curve: e.flat_curve,
            degenerate_points: e.degenerate_points,
        }
    }
}

#[pymethods]
impl PySobolEstimate {
    fn __repr__(&self) -> String {
        format!(
            "SobolEstimate(variable={}, value={}, method='{}', h={:?})",
            self.variable, self.value, self.method, self.h
        )
    }
}

/// Evaluate the Epanechnikov kernel of the given order at `u`.
#[pyfunction]
#[pyo3(signature = (u, order = 2))]
fn kernel_eval(u: f64, order: u8) -> PyResult<f64> {
    kernel_eval_rs(u, kernel(order)?).map_err(np_err)
}

/// Numerical kernel moments (m0, m1, m2) over [-1, 1].
#[pyfunction]
#[pyo3(signature = (order = 2, quadrature_points = 1024))]
fn kernel_moments(order: u8, quadrature_points: usize) -> PyResult<(f64, f64, f64)> {
    kernel_moments_rs(kernel(order)?, quadrature_points).map_err(np_err)
}

/// Nadaraya-Watson regression of y on x, evaluated at each query point.
#[pyfunction]
#[pyo3(signature = (x, y, queries, h, order = 2))]
fn nw_regression(
    x: Vec<f64>,
    y: Vec<f64>,
    queries: Vec<f64>,
    h: f64,
    order: u8,
) -> PyResult<Vec<f64>> {
    let s = sample(x, y)?;
    let k = kernel(order)?;
    queries
        .into_iter()
        .map(|x0| regression_nw(x0, &s, h, k).map(|f| f.value()).map_err(np_err))
        .collect()
}

/// Leave-one-out cross-validation bandwidth.
#[pyfunction]
#[pyo3(signature = (x, y, order = 2))]
fn select_bandwidth_cv(x: Vec<f64>, y: Vec<f64>, order: u8) -> PyResult<PyBandwidthResult> {
    let s = sample(x, y)?;
    let spec = search_for(&s)?;
    bandwidth::select_cv(&s, kernel(order)?, &spec)
        .map(Into::into)
        .map_err(np_err)
}

/// Bootstrap least-squares bandwidth.
#[pyfunction]
#[pyo3(signature = (x, y, order = 2, b = 100, seed = 0, sigma_mode = "smoothed"))]
fn select_bandwidth_boot(
    x: Vec<f64>,
    y: Vec<f64>,
    order: u8,
    b: usize,
    seed: u64,
    sigma_mode: &str,
) -> PyResult<PyBandwidthResult> {
    let s = sample(x, y)?;
    let spec = search_for(&s)?;
    let cfg = BootstrapConfig::for_response(b, sigma(sigma_mode)?, s.y()).map_err(np_err)?;
    bandwidth::select_boot(&s, kernel(order)?, &spec, &cfg, RandomStream::from_seed(seed))
        .map(Into::into)
        .map_err(np_err)
}

/// Plug-in index of one input at a fixed bandwidth.
#[pyfunction]
#[pyo3(signature = (x, y, h, order = 2))]
fn sobol_plugin(x: Vec<f64>, y: Vec<f64>, h: f64, order: u8) -> PyResult<PySobolEstimate> {
    let s = sample(x, y)?;
    sobol::sobol_plugin(&s, h, kernel(order)?)
        .map(Into::into)
        .map_err(np_err)
}

/// Index of one input at the cross-validated bandwidth.
#[pyfunction]
#[pyo3(signature = (x, y, order = 2))]
fn sobol_cv(x: Vec<f64>, y: Vec<f64>, order: u8) -> PyResult<PySobolEstimate> {
    let s = sample(x, y)?;
    let spec = search_for(&s)?;
    sobol::sobol_cv(&s, kernel(order)?, &spec)
        .map(Into::into)
        .map_err(np_err)
}

/// Bootstrap-corrected index of one input.
#[pyfunction]
#[pyo3(signature = (x, y, order = 2, b = 100, seed = 0, sigma_mode = "smoothed"))]
fn sobol_boot(
    x: Vec<f64>,
    y: Vec<f64>,
    order: u8,
    b: usize,
    seed: u64,
    sigma_mode: &str,
) -> PyResult<PySobolEstimate> {
    let s = sample(x, y)?;
    let spec = search_for(&s)?;
    let cfg = BootstrapConfig::for_response(b, sigma(sigma_mode)?, s.y()).map_err(np_err)?;
    sobol::sobol_boot(&s, kernel(order)?, &spec, &cfg, RandomStream::from_seed(seed))
        .map(Into::into)
        .map_err(np_err)
}

/// Estimate all columns against the response. Returns one
/// (name, estimate_or_None, error_or_None) triple per column.
#[pyfunction]
#[pyo3(signature = (columns, y, names = None, method = "cv", order = 2, b = 100, seed = 0, sigma_mode = "smoothed"))]
#[allow(clippy::too_many_arguments)]
fn estimate_all(
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    names: Option<Vec<String>>,
    method: &str,
    order: u8,
    b: usize,
    seed: u64,
    sigma_mode: &str,
) -> PyResult<Vec<(String, Option<PySobolEstimate>, Option<String>)>> {
    let names = names
        .unwrap_or_else(|| (1..=columns.len()).map(|i| format!("x{i}")).collect());
    let data = Dataset::new(names, columns, "y".into(), y).map_err(np_err)?;
    let config = sobol::EstimateConfig {
        kernel: kernel(order)?,
        method: match method {
            "cv" => sobol::SelectionMethod::Cv,
            "boot" => sobol::SelectionMethod::Boot,
            other => {
                return Err(PyValueError::new_err(format!(
                    "method must be 'cv' or 'boot', got {other:?}"
                )))
            }
        },
        search: Default::default(),
        boot_b: b,
        sigma_mode: sigma(sigma_mode)?,
        seed,
    };
    Ok(sobol::estimate_all(&data, &config)
        .into_iter()
        .map(|c| match c.outcome {
            Ok(est) => (c.name, Some(est.into()), None),
            Err(e) => (c.name, None, Some(e.to_string())),
        })
        .collect())
}

/// Closed-form first-order indices of the g-Sobol function.
#[pyfunction]
fn gsobol_exact_indices(a: Vec<f64>) -> PyResult<Vec<f64>> {
    let spec = GSobolSpec::new(a).map_err(np_err)?;
    Ok(models::gsobol_exact_indices(&spec))
}

/// Evaluate the g-Sobol function at one point of the unit cube.
#[pyfunction]
fn gsobol_eval(x: Vec<f64>, a: Vec<f64>) -> PyResult<f64> {
    let spec = GSobolSpec::new(a).map_err(np_err)?;
    models::gsobol_eval(&x, &spec).map_err(np_err)
}

fn build_model(name: &str, gsobol_a: Option<Vec<f64>>, dyke_h_exponent: f64) -> PyResult<Model> {
    Ok(match name {
        "gsobol" => Model::GSobol(
            match gsobol_a {
                Some(a) => GSobolSpec::new(a).map_err(np_err)?,
                None => GSobolSpec::benchmark(),
            },
        ),
        "dyke-s" => Model::Dyke(
            DykeConfig::with_h_exponent(dyke_h_exponent).map_err(np_err)?,
            DykeOutput::S,
        ),
        "dyke-cp" => Model::Dyke(
            DykeConfig::with_h_exponent(dyke_h_exponent).map_err(np_err)?,
            DykeOutput::Cp,
        ),
        other => {
            return Err(PyValueError::new_err(format!(
                "model must be 'gsobol', 'dyke-s' or 'dyke-cp', got {other:?}"
            )))
        }
    })
}

/// Sample a benchmark dataset: (input_names, columns, response).
#[pyfunction]
#[pyo3(signature = (model = "gsobol", n = 300, seed = 0, gsobol_a = None, dyke_h_exponent = 0.6))]
fn generate_dataset(
    model: &str,
    n: usize,
    seed: u64,
    gsobol_a: Option<Vec<f64>>,
    dyke_h_exponent: f64,
) -> PyResult<(Vec<String>, Vec<Vec<f64>>, Vec<f64>)> {
    let model = build_model(model, gsobol_a, dyke_h_exponent)?;
    let data = models::generate_dataset(&model, n, RandomStream::from_seed(seed)).map_err(np_err)?;
    Ok((data.names, data.columns, data.response))
}

/// Pick-freeze Monte Carlo estimate of one input's first-order index.
#[pyfunction]
#[pyo3(signature = (variable, model = "gsobol", n = 10_000, seed = 0, gsobol_a = None, dyke_h_exponent = 0.6))]
fn pickfreeze(
    variable: usize,
    model: &str,
    n: usize,
    seed: u64,
    gsobol_a: Option<Vec<f64>>,
    dyke_h_exponent: f64,
) -> PyResult<f64> {
    let model = build_model(model, gsobol_a, dyke_h_exponent)?;
    models::pickfreeze_oracle(&model, variable, n, RandomStream::from_seed(seed)).map_err(np_err)
}

#[pymodule]
fn npsobol_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBandwidthResult>()?;
    m.add_class::<PySobolEstimate>()?;
    m.add_function(wrap_pyfunction!(kernel_eval, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_moments, m)?)?;
    m.add_function(wrap_pyfunction!(nw_regression, m)?)?;
    m.add_function(wrap_pyfunction!(select_bandwidth_cv, m)?)?;
    m.add_function(wrap_pyfunction!(select_bandwidth_boot, m)?)?;
    m.add_function(wrap_pyfunction!(sobol_plugin, m)?)?;
    m.add_function(wrap_pyfunction!(sobol_cv, m)?)?;
    m.add_function(wrap_pyfunction!(sobol_boot, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_all, m)?)?;
    m.add_function(wrap_pyfunction!(gsobol_exact_indices, m)?)?;
    m.add_function(wrap_pyfunction!(gsobol_eval, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(pickfreeze, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
