//! Nadaraya-Watson regression and its leave-one-out variant.
//!
//! All estimators share one evaluation scheme: the sample is kept in a
//! canonical order (sorted by `(x, y)`), each query scans only the window of
//! design points within one bandwidth of the query, and sums are exact direct
//! summations over that window. The canonical order makes aggregate
//! quantities such as the cross-validation score independent of the row
//! order of the input.

use crate::error::{NpError, Result};
use crate::kernels::KernelSpec;

/// Relative scale of the denominator floor: a query is degenerate when
/// |f_hat(x0)| < `DENOMINATOR_FLOOR / h`.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Cancellation guard for signed (fourth-order) kernels: a query is also
/// degenerate when |sum K| < CANCELLATION_FLOOR * sum |K|, which caps the
/// amplification of the weighted average. Inert for nonnegative kernels.
pub const CANCELLATION_FLOOR: f64 = 1e-3;

/// One input column paired with the response.
#[derive(Debug, Clone)]
pub struct RegressionSample {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Original index of each entry in canonical (x, y) order.
    order: Vec<usize>,
    /// x in canonical order.
    xs: Vec<f64>,
    /// y in canonical order.
    ys: Vec<f64>,
    mean_y: f64,
}

/// Outcome of a pointwise Nadaraya-Watson fit. When no mass falls near the
/// query the ratio is replaced by the global response mean and the query is
/// flagged so callers can decide whether to abort or accept the fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fit {
    Ok(f64),
    Degenerate { x0: f64, fallback: f64 },
}

impl Fit {
    #[inline]
    pub fn value(&self) -> f64 {
        match *self {
            Fit::Ok(v) => v,
            Fit::Degenerate { fallback, .. } => fallback,
        }
    }

    #[inline]
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Fit::Degenerate { .. })
    }
}

impl RegressionSample {
    /// Pair an input column with the response. Lengths must match, entries
    /// must be finite and the sample must be nonempty. Operations that need
    /// more than one observation enforce that themselves.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(NpError::LengthMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(NpError::InvalidSample("sample is empty".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(NpError::InvalidSample(
                "sample contains non-finite entries".into(),
            ));
        }
        let n = x.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            (x[a], y[a])
                .partial_cmp(&(x[b], y[b]))
                .expect("finite entries are totally ordered")
        });
        let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let mean_y = y.iter().sum::<f64>() / n as f64;
        Ok(RegressionSample {
            x,
            y,
            order,
            xs,
            ys,
            mean_y,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn mean_y(&self) -> f64 {
        self.mean_y
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    /// Design positions in canonical order: (original index, x).
    pub(crate) fn canonical(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.order.iter().zip(self.xs.iter()).map(|(&i, &x)| (i, x))
    }

    /// Half-open window of canonical positions with |x - x0| <= h.
    #[inline]
    fn window(&self, x0: f64, h: f64) -> (usize, usize) {
        let lo = self.xs.partition_point(|&v| v < x0 - h);
        let hi = self.xs.partition_point(|&v| v <= x0 + h);
        (lo, hi)
    }

    /// Kernel sums over the window: (sum K, sum y*K, sum |K|), skipping
    /// `skip` if set (an original index). `y` may substitute an alternate
    /// response vector indexed like the original sample.
    #[inline]
    fn kernel_sums(
        &self,
        x0: f64,
        h: f64,
        kernel: KernelSpec,
        skip: Option<usize>,
        y_alt: Option<&[f64]>,
    ) -> (f64, f64, f64) {
        let (lo, hi) = self.window(x0, h);
        let mut sk = 0.0;
        let mut syk = 0.0;
        let mut sk_abs = 0.0;
        for pos in lo..hi {
            let orig = self.order[pos];
            if skip == Some(orig) {
                continue;
            }
            let k = kernel.eval_raw((x0 - self.xs[pos]) / h);
            sk += k;
            sk_abs += k.abs();
            syk += k * match y_alt {
                Some(alt) => alt[orig],
                None => self.ys[pos],
            };
        }
        (sk, syk, sk_abs)
    }

    #[inline]
    fn is_degenerate_denominator(sk: f64, sk_abs: f64, n_norm: f64, h: f64) -> bool {
        let fhat = sk / (n_norm * h);
        fhat.abs() < DENOMINATOR_FLOOR / h || sk.abs() < CANCELLATION_FLOOR * sk_abs
    }

    /// Nadaraya-Watson ratio with an arbitrary response vector and fallback.
    pub(crate) fn nw_with_response(
        &self,
        x0: f64,
        h: f64,
        kernel: KernelSpec,
        y_alt: &[f64],
        fallback: f64,
    ) -> Fit {
        let n = self.len() as f64;
        let (sk, syk, sk_abs) = self.kernel_sums(x0, h, kernel, None, Some(y_alt));
        if Self::is_degenerate_denominator(sk, sk_abs, n, h) {
            Fit::Degenerate { x0, fallback }
        } else {
            Fit::Ok(syk / sk)
        }
    }

    /// Leave-one-out fit at the design point with original index `orig`,
    /// assuming `x0 == x[orig]` and `n >= 2`.
    pub(crate) fn loo_fit(&self, orig: usize, x0: f64, h: f64, kernel: KernelSpec) -> Fit {
        let (sk, syk, sk_abs) = self.kernel_sums(x0, h, kernel, Some(orig), None);
        if Self::is_degenerate_denominator(sk, sk_abs, (self.len() - 1) as f64, h) {
            Fit::Degenerate {
                x0,
                fallback: self.mean_y,
            }
        } else {
            Fit::Ok(syk / sk)
        }
    }
}

fn check_query(x0: f64, h: f64) -> Result<()> {
    if !x0.is_finite() {
        return Err(NpError::NonFinite("query point"));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(NpError::InvalidBandwidth(h));
    }
    Ok(())
}

/// Kernel density estimate f_hat(x0) = (1/nh) sum_l K((x0 - x_l)/h).
pub fn density_nw(x0: f64, sample: &RegressionSample, h: f64, kernel: KernelSpec) -> Result<f64> {
    check_query(x0, h)?;
    let (sk, _, _) = sample.kernel_sums(x0, h, kernel, None, None);
    Ok(sk / (sample.len() as f64 * h))
}

/// Smoothed response g_hat(x0) = (1/nh) sum_l y_l K((x0 - x_l)/h).
pub fn numerator_nw(x0: f64, sample: &RegressionSample, h: f64, kernel: KernelSpec) -> Result<f64> {
    check_query(x0, h)?;
    let (_, syk, _) = sample.kernel_sums(x0, h, kernel, None, None);
    Ok(syk / (sample.len() as f64 * h))
}

/// Nadaraya-Watson regression m_hat(x0) = g_hat(x0)/f_hat(x0). Falls back to
/// the global mean of y, with a degeneracy flag, when |f_hat| drops below the
/// floor.
pub fn regression_nw(x0: f64, sample: &RegressionSample, h: f64, kernel: KernelSpec) -> Result<Fit> {
    check_query(x0, h)?;
    Ok(sample.nw_with_response(x0, h, kernel, &sample.y, sample.mean_y))
}

/// Leave-one-out Nadaraya-Watson prediction at design point `k` (0-based):
/// the fit at x_k computed from all observations except k.
pub fn loo_regression_nw(
    k: usize,
    sample: &RegressionSample,
    h: f64,
    kernel: KernelSpec,
) -> Result<Fit> {
    let n = sample.len();
    if k >= n {
        return Err(NpError::IndexOutOfRange { index: k, n });
    }
    if n < 2 {
        return Err(NpError::InvalidSample(
            "leave-one-out needs at least 2 observations".into(),
        ));
    }
    let x0 = sample.x[k];
    check_query(x0, h)?;
    Ok(sample.loo_fit(k, x0, h, kernel))
}

/// Fits at every design point in original index order, plus the count of
/// degenerate queries.
pub fn fit_at_design(
    sample: &RegressionSample,
    h: f64,
    kernel: KernelSpec,
) -> Result<(Vec<f64>, usize)> {
    check_query(sample.x[0], h)?;
    let mut values = vec![0.0; sample.len()];
    let mut degenerate = 0usize;
    for (orig, x0) in sample.canonical() {
        let fit = sample.nw_with_response(x0, h, kernel, &sample.y, sample.mean_y);
        if fit.is_degenerate() {
            degenerate += 1;
        }
        values[orig] = fit.value();
    }
    Ok((values, degenerate))
}
