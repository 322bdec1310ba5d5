//! Simplified Saint-Venant flood model: eight distributional inputs produce
//! the maximal annual overflow S (meters) and the associated cost Cp
//! (millions of euros).

use serde::{Deserialize, Serialize};

use crate::error::{NpError, Result};
use crate::models::distributions::DistributionSpec;

/// Which of the two outputs is the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DykeOutput {
    S,
    Cp,
}

/// Input order: Q, K_s, Z_v, Z_m, H_d, C_b, L, B.
pub const DYKE_INPUT_NAMES: [&str; 8] = ["Q", "Ks", "Zv", "Zm", "Hd", "Cb", "L", "B"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DykeConfig {
    pub distributions: [DistributionSpec; 8],
    /// Exponent applied to the water-depth ratio; 1.0 reproduces the flood
    /// relation with no exponent, 0.6 is the conventional closure.
    pub h_exponent: f64,
}

impl Default for DykeConfig {
    fn default() -> Self {
        DykeConfig {
            distributions: [
                DistributionSpec::GumbelTruncated {
                    mu: 1013.0,
                    beta: 558.0,
                    lo: 500.0,
                    hi: 3000.0,
                },
                DistributionSpec::NormalTruncated {
                    mean: 30.0,
                    sd: 8.0,
                    lo: 15.0,
                    hi: f64::INFINITY,
                },
                DistributionSpec::Triangular { lo: 49.0, mode: 50.0, hi: 51.0 },
                DistributionSpec::Triangular { lo: 54.0, mode: 55.0, hi: 56.0 },
                DistributionSpec::Uniform { lo: 7.0, hi: 9.0 },
                DistributionSpec::Triangular { lo: 55.0, mode: 55.5, hi: 56.0 },
                DistributionSpec::Triangular { lo: 4990.0, mode: 5000.0, hi: 5010.0 },
                DistributionSpec::Triangular { lo: 295.0, mode: 300.0, hi: 305.0 },
            ],
            h_exponent: 0.6,
        }
    }
}

impl DykeConfig {
    pub fn with_h_exponent(h_exponent: f64) -> Result<Self> {
        if !(h_exponent > 0.0) || !h_exponent.is_finite() {
            return Err(NpError::InvalidConfig(format!(
                "dyke h exponent must be positive, got {h_exponent}"
            )));
        }
        Ok(DykeConfig {
            h_exponent,
            ..DykeConfig::default()
        })
    }
}

/// Evaluate the flood model. `inputs` follows [`DYKE_INPUT_NAMES`] order;
/// returns (S, Cp).
pub fn dyke_eval(inputs: &[f64; 8], cfg: &DykeConfig) -> Result<(f64, f64)> {
    let [q, ks, zv, zm, hd, cb, l, b] = *inputs;
    if zm <= zv {
        return Err(NpError::Domain(format!(
            "upstream level must exceed downstream level, got Zm = {zm}, Zv = {zv}"
        )));
    }
    if q <= 0.0 || ks <= 0.0 || l <= 0.0 || b <= 0.0 {
        return Err(NpError::Domain(
            "flowrate, Strickler coefficient, length and width must be positive".into(),
        ));
    }
    let h = (q / (b * ks * ((zm - zv) / l).sqrt())).powf(cfg.h_exponent);
    let s = zv + h - hd - cb;
    // At s = 0 the maintenance term's exponential is exp(-inf) = 0.
    let flooding = if s > 0.0 { 1.0 } else { 0.0 };
    let maintenance = if s <= 0.0 {
        0.2 + 0.8 * (1.0 - (-1000.0 / (s * s * s * s)).exp())
    } else {
        0.0
    };
    let construction = if hd > 8.0 { hd / 20.0 } else { 8.0 / 20.0 };
    Ok((s, flooding + maintenance + construction))
}
