//! Plug-in first-order Sobol index estimators.
//!
//! The index of one input is the variance of the fitted regression curve
//! relative to the response variance. The plug-in form evaluates the curve
//! at a given bandwidth; the CV and bootstrap variants select the bandwidth
//! first and differ only in the criterion they minimize.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{
    select_cv, select_boot_full, BandwidthSearchSpec, SearchOverrides,
};
use crate::bootstrap::{BootstrapConfig, SigmaMode};
use crate::data::Dataset;
use crate::error::{NpError, Result};
use crate::kernels::KernelSpec;
use crate::rng::RandomStream;
use crate::smoother::RegressionSample;
use crate::util::StableSum;

/// How an estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateMethod {
    PlugIn,
    Cv,
    Boot,
    Exact,
    PickFreeze,
}

impl std::fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimateMethod::PlugIn => "plugin",
            EstimateMethod::Cv => "cv",
            EstimateMethod::Boot => "boot",
            EstimateMethod::Exact => "exact",
            EstimateMethod::PickFreeze => "pickfreeze",
        })
    }
}

/// A first-order index estimate for one input variable.
///
/// Values are reported raw: finite-sample estimates may be negative or
/// exceed one. `h` is present exactly for the smoothing-based methods.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SobolEstimate {
    pub variable: usize,
    pub value: f64,
    pub method: EstimateMethod,
    pub h: Option<f64>,
    pub flat_curve: bool,
    pub degenerate_points: usize,
}

impl SobolEstimate {
    pub fn exact(variable: usize, value: f64) -> Self {
        SobolEstimate {
            variable,
            value,
            method: EstimateMethod::Exact,
            h: None,
            flat_curve: false,
            degenerate_points: 0,
        }
    }

    pub fn pick_freeze(variable: usize, value: f64) -> Self {
        SobolEstimate {
            variable,
            value,
            method: EstimateMethod::PickFreeze,
            h: None,
            flat_curve: false,
            degenerate_points: 0,
        }
    }
}

/// Empirical response moments: mean and variance with the n-1 divisor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseMoments {
    pub mean: f64,
    pub var: f64,
}

/// Two-pass mean and (n-1)-divisor variance of the response.
pub fn response_moments(y: &[f64]) -> Result<ResponseMoments> {
    let n = y.len();
    if n < 2 {
        return Err(NpError::InvalidSample(
            "response moments need at least 2 observations".into(),
        ));
    }
    let mut acc = StableSum::default();
    for &v in y {
        acc.add(v);
    }
    let mean = acc.value() / n as f64;
    let mut ss = StableSum::default();
    for &v in y {
        ss.add((v - mean) * (v - mean));
    }
    Ok(ResponseMoments {
        mean,
        var: ss.value() / (n - 1) as f64,
    })
}

/// Mean squared fitted value over the design points:
/// V_hat(h) = (1/n) sum_k m_hat_h(x_k)^2.
pub fn v_hat(sample: &RegressionSample, h: f64, kernel: KernelSpec) -> Result<f64> {
    v_hat_detailed(sample, h, kernel).map(|(v, _)| v)
}

pub(crate) fn v_hat_detailed(
    sample: &RegressionSample,
    h: f64,
    kernel: KernelSpec,
) -> Result<(f64, usize)> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(NpError::InvalidBandwidth(h));
    }
    let mut acc = StableSum::default();
    let mut degenerate = 0usize;
    for (_, x0) in sample.canonical() {
        let fit = sample.nw_with_response(x0, h, kernel, sample.y(), sample.mean_y());
        if fit.is_degenerate() {
            degenerate += 1;
        }
        let v = fit.value();
        acc.add(v * v);
    }
    Ok((acc.value() / sample.len() as f64, degenerate))
}

/// Plug-in index at a fixed bandwidth: (V_hat(h) - mean^2) / var.
pub fn sobol_plugin(sample: &RegressionSample, h: f64, kernel: KernelSpec) -> Result<SobolEstimate> {
    let moments = response_moments(sample.y())?;
    if moments.var <= 0.0 {
        return Err(NpError::DegenerateResponse);
    }
    let (vh, degenerate) = v_hat_detailed(sample, h, kernel)?;
    Ok(SobolEstimate {
        variable: 0,
        value: (vh - moments.mean * moments.mean) / moments.var,
        method: EstimateMethod::PlugIn,
        h: Some(h),
        flat_curve: false,
        degenerate_points: degenerate,
    })
}

/// Plug-in index at the cross-validated bandwidth.
pub fn sobol_cv(
    sample: &RegressionSample,
    kernel: KernelSpec,
    search: &BandwidthSearchSpec,
) -> Result<SobolEstimate> {
    let selection = select_cv(sample, kernel, search)?;
    let mut estimate = sobol_plugin(sample, selection.h, kernel)?;
    estimate.method = EstimateMethod::Cv;
    estimate.flat_curve = selection.flat_curve;
    Ok(estimate)
}

fn variance_n_minus_1(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mut acc = StableSum::default();
    for &x in v {
        acc.add(x);
    }
    let mean = acc.value() / n;
    let mut ss = StableSum::default();
    for &x in v {
        ss.add((x - mean) * (x - mean));
    }
    ss.value() / (n - 1.0)
}

/// Bootstrap-corrected index: the variance of the mean bootstrap curve at
/// the bootstrap-selected bandwidth, over the response variance.
pub fn sobol_boot(
    sample: &RegressionSample,
    kernel: KernelSpec,
    search: &BandwidthSearchSpec,
    boot: &BootstrapConfig,
    rng: RandomStream,
) -> Result<SobolEstimate> {
    let moments = response_moments(sample.y())?;
    if moments.var <= 0.0 {
        return Err(NpError::DegenerateResponse);
    }
    let selection = select_boot_full(sample, kernel, search, boot, rng)?;
    Ok(SobolEstimate {
        variable: 0,
        value: variance_n_minus_1(&selection.ensemble.mean_curve) / moments.var,
        method: EstimateMethod::Boot,
        h: Some(selection.result.h),
        flat_curve: selection.result.flat_curve,
        degenerate_points: selection.ensemble.degenerate_points,
    })
}

/// Bandwidth selection strategy for whole-dataset estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Cv,
    Boot,
}

/// Configuration for estimating every column of a dataset.
#[derive(Debug, Clone, Copy)]
pub struct EstimateConfig {
    pub kernel: KernelSpec,
    pub method: SelectionMethod,
    pub search: SearchOverrides,
    pub boot_b: usize,
    pub sigma_mode: SigmaMode,
    pub seed: u64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            kernel: KernelSpec::default(),
            method: SelectionMethod::Cv,
            search: SearchOverrides::default(),
            boot_b: BootstrapConfig::DEFAULT_B,
            sigma_mode: SigmaMode::default(),
            seed: 0,
        }
    }
}

/// Per-column estimation outcome; failures stay local to their column.
#[derive(Debug)]
pub struct ColumnEstimate {
    pub variable: usize,
    pub name: String,
    pub outcome: Result<SobolEstimate>,
}

fn fnv1a64(s: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in s.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x1_0000_0000_01b3);
    }
    hash
}

/// Estimate the first-order index of every input column against the
/// response. Columns are independent; each derives its random stream from
/// its name, so neither column order nor scheduling changes any result.
pub fn estimate_all(data: &Dataset, config: &EstimateConfig) -> Vec<ColumnEstimate> {
    let root = RandomStream::from_seed(config.seed);
    data.columns
        .par_iter()
        .enumerate()
        .map(|(i, column)| {
            let name = data.names[i].clone();
            let outcome = estimate_column(column, &data.response, config, root, &name);
            let outcome = outcome.map(|mut est| {
                est.variable = i;
                est
            });
            ColumnEstimate {
                variable: i,
                name,
                outcome,
            }
        })
        .collect()
}

fn estimate_column(
    column: &[f64],
    response: &[f64],
    config: &EstimateConfig,
    root: RandomStream,
    name: &str,
) -> Result<SobolEstimate> {
    let sample = RegressionSample::new(column.to_vec(), response.to_vec())?;
    let search = config.search.resolve(&sample)?;
    match config.method {
        SelectionMethod::Cv => sobol_cv(&sample, config.kernel, &search),
        SelectionMethod::Boot => {
            let boot = BootstrapConfig::for_response(config.boot_b, config.sigma_mode, response)?;
            let stream = root.child(fnv1a64(name));
            sobol_boot(&sample, config.kernel, &search, &boot, stream)
        }
    }
}
