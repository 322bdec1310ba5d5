//! The g-Sobol benchmark function: a product of rescaled tent maps with
//! closed-form first-order indices. Small `a_i` means an influential input.

use serde::{Deserialize, Serialize};

use crate::error::{NpError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GSobolSpec {
    pub a: Vec<f64>,
}

impl GSobolSpec {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(NpError::InvalidSample(
                "g-Sobol needs at least one parameter".into(),
            ));
        }
        if a.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(NpError::InvalidSample(
                "g-Sobol parameters must be finite and nonnegative".into(),
            ));
        }
        Ok(GSobolSpec { a })
    }

    /// The configuration used throughout the benchmark studies:
    /// a = (0, 1, 4.5, 9, 99, 99, 99, 99).
    pub fn benchmark() -> Self {
        GSobolSpec {
            a: vec![0.0, 1.0, 4.5, 9.0, 99.0, 99.0, 99.0, 99.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

/// Evaluate prod_i (|4 x_i - 2| + a_i) / (1 + a_i) on the unit cube.
pub fn gsobol_eval(x: &[f64], spec: &GSobolSpec) -> Result<f64> {
    if x.len() != spec.a.len() {
        return Err(NpError::LengthMismatch {
            expected: spec.a.len(),
            got: x.len(),
        });
    }
    let mut product = 1.0;
    for (&xi, &ai) in x.iter().zip(&spec.a) {
        if !(0.0..=1.0).contains(&xi) {
            return Err(NpError::Domain(format!(
                "g-Sobol input {xi} outside the unit interval"
            )));
        }
        product *= ((4.0 * xi - 2.0).abs() + ai) / (1.0 + ai);
    }
    Ok(product)
}

/// Closed-form first-order indices:
/// S_i = v_i / (prod_k (1 + v_k) - 1) with v_i = 1 / (3 (1 + a_i)^2).
pub fn gsobol_exact_indices(spec: &GSobolSpec) -> Vec<f64> {
    let p = spec.a.len();
    if p == 1 {
        return vec![1.0];
    }
    let v: Vec<f64> = spec
        .a
        .iter()
        .map(|&ai| 1.0 / (3.0 * (1.0 + ai) * (1.0 + ai)))
        .collect();
    let denom: f64 = v.iter().map(|&vi| 1.0 + vi).product::<f64>() - 1.0;
    v.iter().map(|&vi| vi / denom).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn construction() {
        assert!(GSobolSpec::new(vec![]).is_err());
        assert!(GSobolSpec::new(vec![-1.0]).is_err());
        assert!(GSobolSpec::new(vec![0.0, 2.0]).is_ok());
        assert_eq!(GSobolSpec::benchmark().dim(), 8);
    }

    #[test]
    fn eval_zero_factor() {
        let spec = GSobolSpec::benchmark();
        let x = vec![0.5; 8];
        // First factor is (|0| + 0)/1 = 0.
        assert_eq!(gsobol_eval(&x, &spec).unwrap(), 0.0);
    }

    #[test]
    fn eval_at_origin_matches_product_oracle() {
        let spec = GSobolSpec::benchmark();
        let x = vec![0.0; 8];
        let want: f64 = spec.a.iter().map(|&a| (2.0 + a) / (1.0 + a)).product();
        assert_abs_diff_eq!(gsobol_eval(&x, &spec).unwrap(), want, epsilon = 1e-14);
    }

    #[test]
    fn eval_one_dimensional() {
        let spec = GSobolSpec::new(vec![0.0]).unwrap();
        assert_eq!(gsobol_eval(&[0.25], &spec).unwrap(), 1.0);
    }

    #[test]
    fn eval_rejects_out_of_range() {
        let spec = GSobolSpec::new(vec![0.0, 1.0]).unwrap();
        assert!(gsobol_eval(&[0.5, 1.5], &spec).is_err());
        assert!(gsobol_eval(&[-0.1, 0.5], &spec).is_err());
        assert!(gsobol_eval(&[0.5], &spec).is_err());
    }

    #[test]
    fn exact_indices_match_published_values() {
        let s = gsobol_exact_indices(&GSobolSpec::benchmark());
        assert_abs_diff_eq!(s[0], 0.7162, epsilon = 5e-5);
        assert_abs_diff_eq!(s[1], 0.1790, epsilon = 5e-5);
        assert_abs_diff_eq!(s[2], 0.0237, epsilon = 5e-5);
        assert_abs_diff_eq!(s[3], 0.0072, epsilon = 5e-5);
        for i in 4..8 {
            assert_abs_diff_eq!(s[i], 0.0001, epsilon = 5e-5);
        }
    }

    #[test]
    fn exact_indices_single_input_is_one() {
        assert_eq!(gsobol_exact_indices(&GSobolSpec::new(vec![7.0]).unwrap()), vec![1.0]);
    }

    // Formula oracle for p = 2, a = (0, 0): v = 1/3 each, so
    // S = (1/3) / ((4/3)^2 - 1) = 3/7 for both inputs.
    #[test]
    fn exact_indices_two_symmetric_inputs() {
        let s = gsobol_exact_indices(&GSobolSpec::new(vec![0.0, 0.0]).unwrap());
        assert_abs_diff_eq!(s[0], 3.0 / 7.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s[1], 3.0 / 7.0, epsilon = 1e-14);
    }

    #[test]
    fn exact_indices_are_positive_decreasing_and_subunit() {
        let spec = GSobolSpec::new(vec![0.0, 0.5, 2.0, 10.0, 50.0]).unwrap();
        let s = gsobol_exact_indices(&spec);
        assert!(s.windows(2).all(|w| w[0] > w[1]));
        assert!(s.iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(s.iter().sum::<f64>() <= 1.0);
    }

    #[test]
    fn eval_tends_to_one_for_huge_parameters() {
        let spec = GSobolSpec::new(vec![1e6; 4]).unwrap();
        let mut rng = crate::rng::RandomStream::from_seed(10).rng();
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let v = gsobol_eval(&x, &spec).unwrap();
            assert!((v - 1.0).abs() < 1e-5, "value {v}");
            assert!(v >= 0.0);
        }
    }
}
