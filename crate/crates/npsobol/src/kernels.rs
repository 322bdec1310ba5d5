//! Epanechnikov smoothing kernels of second and fourth order.

use serde::{Deserialize, Serialize};

use crate::error::{NpError, Result};

/// Kernel family. Only Epanechnikov variants are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KernelFamily {
    #[default]
    Epanechnikov,
}

/// Kernel order. The fourth-order variant has vanishing second moment and
/// takes negative values on part of its support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KernelOrder {
    #[default]
    Second,
    Fourth,
}

impl KernelOrder {
    pub fn from_flag(order: u8) -> Result<Self> {
        match order {
            2 => Ok(KernelOrder::Second),
            4 => Ok(KernelOrder::Fourth),
            other => Err(NpError::InvalidSample(format!(
                "kernel order must be 2 or 4, got {other}"
            ))),
        }
    }

    pub fn as_flag(&self) -> u8 {
        match self {
            KernelOrder::Second => 2,
            KernelOrder::Fourth => 4,
        }
    }
}

/// A fully specified smoothing kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub order: KernelOrder,
}

impl KernelSpec {
    pub fn epanechnikov(order: KernelOrder) -> Self {
        KernelSpec {
            family: KernelFamily::Epanechnikov,
            order,
        }
    }

    /// K(u) without the finiteness check; `u` must be finite.
    /// K2(u) = (3/4)(1 - u^2), K4(u) = (45/32)(1 - (7/3)u^2)(1 - u^2),
    /// both zero outside |u| <= 1.
    #[inline]
    pub fn eval_raw(&self, u: f64) -> f64 {
        if u.abs() > 1.0 {
            return 0.0;
        }
        let u2 = u * u;
        match self.order {
            KernelOrder::Second => 0.75 * (1.0 - u2),
            KernelOrder::Fourth => (45.0 / 32.0) * (1.0 - (7.0 / 3.0) * u2) * (1.0 - u2),
        }
    }
}

/// Evaluate the kernel at `u`, rejecting non-finite arguments.
pub fn kernel_eval(u: f64, spec: KernelSpec) -> Result<f64> {
    if !u.is_finite() {
        return Err(NpError::NonFinite("kernel argument"));
    }
    Ok(spec.eval_raw(u))
}

/// Numerical moments (m0, m1, m2) of the kernel over [-1, 1], computed by
/// composite Simpson quadrature with at least 64 subintervals.
pub fn kernel_moments(spec: KernelSpec, quadrature_points: usize) -> Result<(f64, f64, f64)> {
    if quadrature_points < 64 {
        return Err(NpError::InvalidSample(format!(
            "kernel_moments needs at least 64 quadrature points, got {quadrature_points}"
        )));
    }
    // Simpson needs an even subinterval count.
    let n = quadrature_points + (quadrature_points % 2);
    let h = 2.0 / n as f64;
    let mut m = [0.0f64; 3];
    let mut comp = [0.0f64; 3];
    for j in 0..=n {
        let u = -1.0 + h * j as f64;
        let w = if j == 0 || j == n {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let k = spec.eval_raw(u);
        let terms = [w * k, w * u * k, w * u * u * k];
        for (i, t) in terms.into_iter().enumerate() {
            // Neumaier compensated accumulation.
            let s = m[i] + t;
            comp[i] += if m[i].abs() >= t.abs() {
                (m[i] - s) + t
            } else {
                (t - s) + m[i]
            };
            m[i] = s;
        }
    }
    let scale = h / 3.0;
    Ok((
        (m[0] + comp[0]) * scale,
        (m[1] + comp[1]) * scale,
        (m[2] + comp[2]) * scale,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn second() -> KernelSpec {
        KernelSpec::epanechnikov(KernelOrder::Second)
    }

    fn fourth() -> KernelSpec {
        KernelSpec::epanechnikov(KernelOrder::Fourth)
    }

    #[test]
    fn pointwise_values() {
        assert_eq!(kernel_eval(0.0, second()).unwrap(), 0.75);
        assert_eq!(kernel_eval(1.5, fourth()).unwrap(), 0.0);
        assert_abs_diff_eq!(
            kernel_eval((3.0f64 / 7.0).sqrt(), fourth()).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(kernel_eval(0.0, fourth()).unwrap(), 45.0 / 32.0);
    }

    #[test]
    fn non_finite_argument_is_rejected() {
        assert!(kernel_eval(f64::NAN, second()).is_err());
        assert!(kernel_eval(f64::INFINITY, fourth()).is_err());
    }

    #[test]
    fn boundary_and_support() {
        for spec in [second(), fourth()] {
            assert_eq!(spec.eval_raw(1.0), 0.0);
            assert_eq!(spec.eval_raw(-1.0), 0.0);
            assert_eq!(spec.eval_raw(1.0000001), 0.0);
            assert_eq!(spec.eval_raw(-3.0), 0.0);
        }
    }

    #[test]
    fn symmetry_is_exact() {
        for spec in [second(), fourth()] {
            for i in 0..=200 {
                let u = -1.2 + 2.4 * i as f64 / 200.0;
                assert_eq!(spec.eval_raw(u), spec.eval_raw(-u));
            }
        }
    }

    #[test]
    fn sign_structure() {
        let root = (3.0f64 / 7.0).sqrt();
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            assert!(second().eval_raw(u) >= 0.0);
            if u > root + 1e-9 && u < 1.0 {
                assert!(fourth().eval_raw(u) < 0.0, "K4({u}) should be negative");
            }
        }
    }

    // Closed-form oracle: integrate the kernel polynomials term by term.
    // K2: m0 = (3/4)(2 - 2/3) = 1, m2 = (3/4)(2/3 - 2/5) = 1/5.
    // K4: m0 = (45/32)(2 - 2/3 - 14/9 + 14/15) = 1, m2 = 0.
    #[test]
    fn moments_against_closed_form() {
        let (m0, m1, m2) = kernel_moments(second(), 1024).unwrap();
        assert_abs_diff_eq!(m0, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m1, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m2, 0.2, epsilon = 1e-6);

        let (m0, m1, m2) = kernel_moments(fourth(), 1024).unwrap();
        assert_abs_diff_eq!(m0, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m1, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m2, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn moments_coarse_grid() {
        let (m0, _, _) = kernel_moments(second(), 64).unwrap();
        assert_abs_diff_eq!(m0, 1.0, epsilon = 1e-4);
        assert!(kernel_moments(second(), 63).is_err());
    }
}
