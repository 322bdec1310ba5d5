//! Input distributions and their inverse-CDF samplers.
//!
//! Truncated families draw a uniform on [CDF(lo), CDF(hi)] and apply the
//! quantile function, so truncation is exact and needs no rejection loop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NpError, Result};
use crate::rng::RandomStream;

/// A univariate input distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DistributionSpec {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Triangular {
        lo: f64,
        mode: f64,
        hi: f64,
    },
    /// Gumbel with location `mu` and scale `beta`, restricted to [lo, hi].
    GumbelTruncated {
        mu: f64,
        beta: f64,
        lo: f64,
        hi: f64,
    },
    /// Normal restricted to [lo, hi]; `hi` may be infinite.
    NormalTruncated {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
    },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(NpError::InvalidDistribution(msg));
        match *self {
            DistributionSpec::Uniform { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return err(format!("uniform needs finite lo < hi, got [{lo}, {hi}]"));
                }
            }
            DistributionSpec::Triangular { lo, mode, hi } => {
                if !(lo < hi) || !(lo <= mode && mode <= hi) || !lo.is_finite() || !hi.is_finite()
                {
                    return err(format!(
                        "triangular needs lo <= mode <= hi and lo < hi, got ({lo}, {mode}, {hi})"
                    ));
                }
            }
            DistributionSpec::GumbelTruncated { mu, beta, lo, hi } => {
                if !(beta > 0.0) || !mu.is_finite() || !beta.is_finite() {
                    return err(format!("gumbel needs finite mu and beta > 0, got ({mu}, {beta})"));
                }
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return err(format!("gumbel truncation needs finite lo < hi, got [{lo}, {hi}]"));
                }
            }
            DistributionSpec::NormalTruncated { mean, sd, lo, hi } => {
                if !(sd > 0.0) || !mean.is_finite() || !sd.is_finite() {
                    return err(format!("normal needs finite mean and sd > 0, got ({mean}, {sd})"));
                }
                if !(lo < hi) || !lo.is_finite() {
                    return err(format!("normal truncation needs finite lo < hi, got [{lo}, {hi}]"));
                }
            }
        }
        Ok(())
    }

    /// Support of the (truncated) distribution.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DistributionSpec::Uniform { lo, hi } => (lo, hi),
            DistributionSpec::Triangular { lo, hi, .. } => (lo, hi),
            DistributionSpec::GumbelTruncated { lo, hi, .. } => (lo, hi),
            DistributionSpec::NormalTruncated { lo, hi, .. } => (lo, hi),
        }
    }

    /// Quantile of the untruncated family at probability `p` in (0, 1).
    fn quantile(&self, p: f64) -> f64 {
        match *self {
            DistributionSpec::Uniform { lo, hi } => lo + p * (hi - lo),
            DistributionSpec::Triangular { lo, mode, hi } => {
                let split = (mode - lo) / (hi - lo);
                if p <= split {
                    lo + (p * (hi - lo) * (mode - lo)).sqrt()
                } else {
                    hi - ((1.0 - p) * (hi - lo) * (hi - mode)).sqrt()
                }
            }
            DistributionSpec::GumbelTruncated { mu, beta, .. } => mu - beta * (-p.ln()).ln(),
            DistributionSpec::NormalTruncated { mean, sd, .. } => mean + sd * normal_quantile(p),
        }
    }

    /// CDF of the untruncated family.
    fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            DistributionSpec::Triangular { lo, mode, hi } => {
                if x <= lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else if x <= mode {
                    (x - lo) * (x - lo) / ((hi - lo) * (mode - lo))
                } else {
                    1.0 - (hi - x) * (hi - x) / ((hi - lo) * (hi - mode))
                }
            }
            DistributionSpec::GumbelTruncated { mu, beta, .. } => (-(-(x - mu) / beta).exp()).exp(),
            DistributionSpec::NormalTruncated { mean, sd, .. } => normal_cdf((x - mean) / sd),
        }
    }
}

/// Standard normal CDF via the complementary error function.
pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile: Acklam's rational approximation polished with
/// one Halley step, good to full double precision over (0, 1).
pub(crate) fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -((((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0))
    };

    // Halley refinement against the exact CDF.
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Draw `n` values from the distribution, truncation bounds enforced exactly.
pub fn sample_distribution(
    spec: &DistributionSpec,
    n: usize,
    rng: RandomStream,
) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(NpError::InvalidDistribution("need n >= 1 draws".into()));
    }
    spec.validate()?;
    let (lo, hi) = spec.bounds();
    let (c_lo, c_hi) = (spec.cdf(lo), spec.cdf(hi));
    let mut gen = rng.rng();
    Ok((0..n)
        .map(|_| {
            let u: f64 = gen.random();
            let p = c_lo + u * (c_hi - c_lo);
            spec.quantile(p).clamp(lo, hi)
        })
        .collect())
}
