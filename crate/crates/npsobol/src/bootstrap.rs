//! Residual bootstrap on a fixed design.
//!
//! The pipeline follows the estimation order: residuals against the pilot
//! fit, a conditional standard deviation at every design point, normalized
//! noise, resampled noise spread back over the design, reconstructed
//! responses, and finally an ensemble of regression curves with its mean.
//! Designs are never resampled; only the normalized noise is.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandwidth::BandwidthResult;
use crate::error::{NpError, Result};
use crate::kernels::KernelSpec;
use crate::rng::RandomStream;
use crate::smoother::{fit_at_design, RegressionSample};
use crate::util::StableSum;

/// How the conditional standard deviation of the residuals is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SigmaMode {
    /// Nadaraya-Watson smoothing of the squared centered residuals at the
    /// pilot bandwidth.
    #[default]
    Smoothed,
    /// One global standard deviation for every design point.
    Global,
}

/// Bootstrap ensemble configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates.
    pub b: usize,
    /// Lower bound for the conditional standard deviation.
    pub sigma_floor: f64,
    pub sigma_mode: SigmaMode,
}

impl BootstrapConfig {
    pub const DEFAULT_B: usize = 100;

    pub fn new(b: usize, sigma_floor: f64, sigma_mode: SigmaMode) -> Result<Self> {
        if b < 1 {
            return Err(NpError::InvalidBootstrapConfig(
                "need at least one bootstrap replicate".into(),
            ));
        }
        if !(sigma_floor > 0.0) || !sigma_floor.is_finite() {
            return Err(NpError::InvalidBootstrapConfig(format!(
                "sigma_floor must be positive, got {sigma_floor}"
            )));
        }
        Ok(BootstrapConfig {
            b,
            sigma_floor,
            sigma_mode,
        })
    }

    /// Default floor scaled to the response: 1e-8 * (1 + stdev(y)).
    pub fn for_response(b: usize, sigma_mode: SigmaMode, y: &[f64]) -> Result<Self> {
        let n = y.len().max(1) as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        Self::new(b, 1e-8 * (1.0 + var.sqrt()), sigma_mode)
    }
}

/// Residuals against the pilot fit and their normalization.
#[derive(Debug, Clone)]
pub struct ResidualSet {
    /// Raw residuals y_k - m_hat_{h0}(x_k).
    pub epsilon: Vec<f64>,
    /// Arithmetic mean of the residuals.
    pub epsilon_bar: f64,
    /// Conditional standard deviation at each design point, floored.
    pub sigma: Vec<f64>,
    /// Centered normalized noise (epsilon - epsilon_bar) / sigma.
    pub nu: Vec<f64>,
    /// Pilot bandwidth the residuals were taken at.
    pub h0: f64,
    /// Fitted pilot values m_hat_{h0}(x_k); kept so responses can be
    /// reconstructed without re-smoothing.
    pub(crate) fitted: Vec<f64>,
}

/// Reconstructed responses and their fitted curves at the design points.
#[derive(Debug, Clone)]
pub struct BootstrapEnsemble {
    /// B reconstructed response vectors.
    pub responses: Vec<Vec<f64>>,
    /// B regression curves evaluated at the design points.
    pub curves: Vec<Vec<f64>>,
    /// Pointwise mean of the curves.
    pub mean_curve: Vec<f64>,
    /// Bandwidth the curves were fitted at.
    pub h: f64,
    /// Design points where at least one replicate fit fell back to the mean.
    pub degenerate_points: usize,
}

/// Bootstrap bandwidth selection with all intermediates.
#[derive(Debug, Clone)]
#[allow(dead_code)]
pub(crate) struct BootSelection {
    pub result: BandwidthResult,
    pub pilot: BandwidthResult,
    pub residual_set: ResidualSet,
    pub ensemble: BootstrapEnsemble,
    pub pseudo: PseudoResponses,
}

/// Raw residuals, conditional standard deviation and centered normalized
/// noise at pilot bandwidth `h0`.
pub fn residuals(
    sample: &RegressionSample,
    h0: f64,
    kernel: KernelSpec,
    cfg: &BootstrapConfig,
) -> Result<ResidualSet> {
    let (fitted, degenerate) = fit_at_design(sample, h0, kernel)?;
    if degenerate == sample.len() {
        return Err(NpError::Conditioning { h: h0 });
    }
    let y = sample.y();
    let epsilon: Vec<f64> = y.iter().zip(&fitted).map(|(&yk, &mk)| yk - mk).collect();
    let epsilon_bar = epsilon.iter().sum::<f64>() / epsilon.len() as f64;
    let sigma = conditional_sd(sample, &epsilon, h0, kernel, cfg)?;
    let mut nu: Vec<f64> = epsilon
        .iter()
        .zip(&sigma)
        .map(|(&e, &s)| (e - epsilon_bar) / s)
        .collect();
    let mut acc = StableSum::default();
    for &v in &nu {
        acc.add(v);
    }
    let nu_bar = acc.value() / nu.len() as f64;
    for v in &mut nu {
        *v -= nu_bar;
    }
    Ok(ResidualSet {
        epsilon,
        epsilon_bar,
        sigma,
        nu,
        h0,
        fitted,
    })
}

/// Conditional standard deviation of the residuals at every design point,
/// floored at `cfg.sigma_floor`.
///
/// Smoothed mode smooths the squared centered residuals at the pilot
/// bandwidth; Global mode uses one standard deviation (1/n divisor, so the
/// normalized noise has exactly unit population variance) everywhere.
///
/// Variance smoothing always uses the second-order kernel: a signed kernel
/// would let the squared residuals be amplified without bound, while
/// nonnegative weights keep every estimate inside the data range.
pub fn conditional_sd(
    sample: &RegressionSample,
    epsilon: &[f64],
    h0: f64,
    kernel: KernelSpec,
    cfg: &BootstrapConfig,
) -> Result<Vec<f64>> {
    let n = sample.len();
    if epsilon.len() != n {
        return Err(NpError::LengthMismatch {
            expected: n,
            got: epsilon.len(),
        });
    }
    let mean = epsilon.iter().sum::<f64>() / n as f64;
    match cfg.sigma_mode {
        SigmaMode::Global => {
            let var = epsilon.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
            let sd = var.sqrt().max(cfg.sigma_floor);
            Ok(vec![sd; n])
        }
        SigmaMode::Smoothed => {
            let variance_kernel = KernelSpec {
                order: crate::kernels::KernelOrder::Second,
                ..kernel
            };
            let sq: Vec<f64> = epsilon.iter().map(|&e| (e - mean) * (e - mean)).collect();
            let sq_mean = sq.iter().sum::<f64>() / n as f64;
            let mut out = vec![0.0; n];
            for (orig, x0) in sample.canonical() {
                let v = sample
                    .nw_with_response(x0, h0, variance_kernel, &sq, sq_mean)
                    .value();
                out[orig] = v.max(0.0).sqrt().max(cfg.sigma_floor);
            }
            Ok(out)
        }
    }
}

fn draw_noise_vector(rs: &ResidualSet, rng: &mut impl Rng) -> Vec<f64> {
    let n = rs.nu.len();
    (0..n).map(|_| rs.nu[rng.random_range(0..n)]).collect()
}

/// One reconstructed response vector: pilot fit plus resampled scaled noise.
/// The design points are not resampled.
pub fn reconstruct_response(
    sample: &RegressionSample,
    rs: &ResidualSet,
    rng: RandomStream,
) -> Result<Vec<f64>> {
    if rs.fitted.len() != sample.len() {
        return Err(NpError::LengthMismatch {
            expected: sample.len(),
            got: rs.fitted.len(),
        });
    }
    let noise = draw_noise_vector(rs, &mut rng.rng());
    Ok(rs
        .fitted
        .iter()
        .zip(&rs.sigma)
        .zip(&noise)
        .map(|((&m, &s), &v)| m + s * v)
        .collect())
}

/// B resampled noise vectors, one child stream per replicate.
pub(crate) fn draw_noise(rs: &ResidualSet, b: usize, rng: RandomStream) -> Vec<Vec<f64>> {
    (0..b)
        .map(|i| draw_noise_vector(rs, &mut rng.child(i as u64).rng()))
        .collect()
}

/// Reconstructed responses for a fixed noise matrix.
#[derive(Debug, Clone)]
pub(crate) struct PseudoResponses {
    pub y: Vec<Vec<f64>>,
    pub means: Vec<f64>,
}

pub(crate) fn pseudo_responses(
    sample: &RegressionSample,
    rs: &ResidualSet,
    noise: &[Vec<f64>],
) -> PseudoResponses {
    let n = sample.len() as f64;
    let y: Vec<Vec<f64>> = noise
        .iter()
        .map(|nv| {
            rs.fitted
                .iter()
                .zip(&rs.sigma)
                .zip(nv)
                .map(|((&m, &s), &v)| m + s * v)
                .collect::<Vec<f64>>()
        })
        .collect();
    let means = y.iter().map(|yv| yv.iter().sum::<f64>() / n).collect();
    PseudoResponses { y, means }
}

/// Mean bootstrap regression curve at the design points, without storing the
/// individual curves. This is the hot path of the bootstrap criterion.
pub(crate) fn mean_curve_for(
    sample: &RegressionSample,
    pseudo: &PseudoResponses,
    h: f64,
    kernel: KernelSpec,
) -> Vec<f64> {
    let n = sample.len();
    let b = pseudo.y.len() as f64;
    let mut acc = vec![StableSum::default(); n];
    for (yv, &mean) in pseudo.y.iter().zip(&pseudo.means) {
        for (orig, x0) in sample.canonical() {
            acc[orig].add(sample.nw_with_response(x0, h, kernel, yv, mean).value());
        }
    }
    acc.into_iter().map(|s| s.value() / b).collect()
}

/// Evaluate every replicate curve on an arbitrary grid of query points.
pub(crate) fn curves_on_grid(
    sample: &RegressionSample,
    pseudo: &PseudoResponses,
    h: f64,
    kernel: KernelSpec,
    grid: &[f64],
) -> Vec<Vec<f64>> {
    pseudo
        .y
        .iter()
        .zip(&pseudo.means)
        .map(|(yv, &mean)| {
            grid.iter()
                .map(|&x0| sample.nw_with_response(x0, h, kernel, yv, mean).value())
                .collect()
        })
        .collect()
}

pub(crate) fn ensemble_from_pseudo(
    sample: &RegressionSample,
    pseudo: &PseudoResponses,
    h: f64,
    kernel: KernelSpec,
) -> BootstrapEnsemble {
    let n = sample.len();
    let b = pseudo.y.len();
    let mut curves = Vec::with_capacity(b);
    let mut degenerate_at = vec![false; n];
    for (yv, &mean) in pseudo.y.iter().zip(&pseudo.means) {
        let mut curve = vec![0.0; n];
        for (orig, x0) in sample.canonical() {
            let fit = sample.nw_with_response(x0, h, kernel, yv, mean);
            if fit.is_degenerate() {
                degenerate_at[orig] = true;
            }
            curve[orig] = fit.value();
        }
        curves.push(curve);
    }
    let mean_curve: Vec<f64> = (0..n)
        .map(|k| {
            let mut acc = StableSum::default();
            for curve in &curves {
                acc.add(curve[k]);
            }
            acc.value() / b as f64
        })
        .collect();
    BootstrapEnsemble {
        responses: pseudo.y.clone(),
        curves,
        mean_curve,
        h,
        degenerate_points: degenerate_at.iter().filter(|&&d| d).count(),
    }
}

/// The full bootstrap ensemble: B reconstructed responses, their fitted
/// curves at the design points at bandwidth `h`, and the mean curve.
/// Replicate `i` draws from `rng.child(i)`, so the result does not depend on
/// evaluation order.
pub fn bootstrap_curves(
    sample: &RegressionSample,
    rs: &ResidualSet,
    h: f64,
    kernel: KernelSpec,
    cfg: &BootstrapConfig,
    rng: RandomStream,
) -> Result<BootstrapEnsemble> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(NpError::InvalidBandwidth(h));
    }
    let noise = draw_noise(rs, cfg.b, rng);
    let pseudo = pseudo_responses(sample, rs, &noise);
    Ok(ensemble_from_pseudo(sample, &pseudo, h, kernel))
}
