//! Sample statistics: lag covariances, precision matrix, quadratic forms and
//! the multivariate kurtosis statistic.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Relative determinant cutoff below which a covariance is treated as
/// singular (degenerate data is an error, never silently regularized).
pub const SINGULARITY_CUTOFF: f64 = 1e-12;

/// Sequence of p x p lag covariance matrices S(0), S(1), ..., S(L).
///
/// `omega` holds the per-pair accumulations sum_tau S_ab(tau)^2, a
/// diagnostic for the mixing assumption.
#[derive(Debug, Clone)]
pub struct LagCovarianceSeq {
    lags: Vec<DMatrix<f64>>,
    omega: DMatrix<f64>,
}

impl LagCovarianceSeq {
    /// Wrap precomputed matrices. S(0) must be square and symmetric; all
    /// matrices must share its dimension.
    pub fn from_matrices(lags: Vec<DMatrix<f64>>) -> Result<Self> {
        if lags.is_empty() {
            return Err(Error::InvalidConfig("need at least S(0)".into()));
        }
        let p = lags[0].nrows();
        if lags[0].ncols() != p {
            return Err(Error::InvalidConfig("S(0) must be square".into()));
        }
        for (tau, m) in lags.iter().enumerate() {
            if m.nrows() != p || m.ncols() != p {
                return Err(Error::InvalidConfig(format!("S({tau}) has wrong shape")));
            }
        }
        let s0 = &lags[0];
        for a in 0..p {
            for b in (a + 1)..p {
                if (s0[(a, b)] - s0[(b, a)]).abs() > 1e-10 * s0[(a, a)].abs().max(1.0) {
                    return Err(Error::InvalidConfig("S(0) must be symmetric".into()));
                }
            }
        }
        let mut omega = DMatrix::zeros(p, p);
        for m in &lags {
            for a in 0..p {
                for b in 0..p {
                    omega[(a, b)] += m[(a, b)] * m[(a, b)];
                }
            }
        }
        Ok(LagCovarianceSeq { lags, omega })
    }

    pub fn p(&self) -> usize {
        self.lags[0].nrows()
    }

    pub fn max_lag(&self) -> usize {
        self.lags.len() - 1
    }

    pub fn s0(&self) -> &DMatrix<f64> {
        &self.lags[0]
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.lags
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    /// Entry S_ab(tau) for any integer lag. Negative lags use the transpose
    /// symmetry S_ab(-tau) = S_ba(tau); lags beyond the stored window are
    /// treated as exactly zero.
    #[inline]
    pub fn entry(&self, a: usize, b: usize, tau: i64) -> f64 {
        let (a, b, t) = if tau >= 0 {
            (a, b, tau as usize)
        } else {
            (b, a, (-tau) as usize)
        };
        if t < self.lags.len() {
            self.lags[t][(a, b)]
        } else {
            0.0
        }
    }
}

/// Shared accumulation: S(tau)_ab = (1/N) * sum_{n=tau..N-1} x_a(n) x_b(n-tau).
///
/// `sample_covariance` and `lag_covariance` both go through here so that
/// S(0) is bit-for-bit identical between the two.
fn lag_accum(x: &TimeSeries, tau: usize) -> DMatrix<f64> {
    let p = x.p();
    let n = x.n_samples();
    let inv_n = 1.0 / n as f64;
    let mut m = DMatrix::zeros(p, p);
    for a in 0..p {
        let xa = x.component(a);
        for b in 0..p {
            let xb = x.component(b);
            let mut acc = 0.0;
            for t in tau..n {
                acc += xa[t] * xb[t - tau];
            }
            m[(a, b)] = acc * inv_n;
        }
    }
    m
}

/// Zero-lag sample covariance with 1/N normalization.
///
/// With `assume_zero_mean` the data is used as given; otherwise the series
/// is centered by its sample mean first (which requires N >= 2).
pub fn sample_covariance(x: &TimeSeries, assume_zero_mean: bool) -> Result<DMatrix<f64>> {
    if assume_zero_mean {
        Ok(lag_accum(x, 0))
    } else {
        if x.n_samples() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: x.n_samples(),
            });
        }
        Ok(lag_accum(&x.centered(), 0))
    }
}

/// Lag covariance matrices S(0..max_lag), all with 1/N normalization.
pub fn lag_covariance(x: &TimeSeries, max_lag: usize) -> Result<LagCovarianceSeq> {
    let n = x.n_samples();
    if max_lag >= n {
        return Err(Error::LagOutOfRange { lag: max_lag, n });
    }
    let lags: Vec<DMatrix<f64>> = (0..=max_lag).map(|tau| lag_accum(x, tau)).collect();
    LagCovarianceSeq::from_matrices(lags)
}

/// Inverse of a zero-lag covariance matrix, with its determinant.
#[derive(Debug, Clone)]
pub struct PrecisionMatrix {
    g: DMatrix<f64>,
    source_det: f64,
}

impl PrecisionMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn source_det(&self) -> f64 {
        self.source_det
    }

    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.g[(r, c)]
    }

    pub fn p(&self) -> usize {
        self.g.nrows()
    }
}

/// Invert a symmetric covariance matrix.
///
/// Closed-form cofactors for p <= 2, LU factorization beyond that. Fails
/// with `SingularCovariance` when |det| < 1e-12 * scale^p where scale is the
/// largest absolute entry.
pub fn precision(s0: &DMatrix<f64>) -> Result<PrecisionMatrix> {
    let p = s0.nrows();
    if s0.ncols() != p || p == 0 {
        return Err(Error::InvalidConfig("precision needs a square matrix".into()));
    }
    let scale = s0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = SINGULARITY_CUTOFF * scale.powi(p as i32);

    let (det, g) = match p {
        1 => {
            let d = s0[(0, 0)];
            if d.abs() <= threshold {
                return Err(Error::SingularCovariance { det: d, threshold });
            }
            (d, DMatrix::from_element(1, 1, 1.0 / d))
        }
        2 => {
            let (a, b, c, d) = (s0[(0, 0)], s0[(0, 1)], s0[(1, 0)], s0[(1, 1)]);
            let det = a * d - b * c;
            if det.abs() <= threshold {
                return Err(Error::SingularCovariance { det, threshold });
            }
            let inv = DMatrix::from_row_slice(
                2,
                2,
                &[d / det, -b / det, -c / det, a / det],
            );
            (det, inv)
        }
        _ => {
            let lu = s0.clone().lu();
            let det = lu.determinant();
            if det.abs() <= threshold {
                return Err(Error::SingularCovariance { det, threshold });
            }
            let inv = lu
                .try_inverse()
                .ok_or(Error::SingularCovariance { det, threshold })?;
            (det, inv)
        }
    };
    Ok(PrecisionMatrix { g, source_det: det })
}

/// Quadratic form A_ij = x(i)^T G x(j), zero-based time indices.
pub fn quadratic_form(
    x: &TimeSeries,
    g: &PrecisionMatrix,
    i: usize,
    j: usize,
) -> Result<f64> {
    let n = x.n_samples();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    Ok(quadratic_form_unchecked(x, g, i, j))
}

#[inline]
pub(crate) fn quadratic_form_unchecked(
    x: &TimeSeries,
    g: &PrecisionMatrix,
    i: usize,
    j: usize,
) -> f64 {
    let p = x.p();
    let mut acc = 0.0;
    for r in 0..p {
        let xr = x.value(r, i);
        for c in 0..p {
            acc += xr * g.entry(r, c) * x.value(c, j);
        }
    }
    acc
}

/// Multivariate kurtosis of the sample: the mean of squared Mahalanobis
/// norms using the 1/N sample covariance of the series as given (no
/// centering is applied here).
pub fn mardia_statistic(x: &TimeSeries) -> Result<f64> {
    let p = x.p();
    let n = x.n_samples();
    if n < p + 1 {
        return Err(Error::InsufficientSamples { needed: p + 1, got: n });
    }
    let s = lag_accum(x, 0);
    let g = precision(&s)?;
    let mut acc = 0.0;
    for t in 0..n {
        let q = quadratic_form_unchecked(x, &g, t, t);
        acc += q * q;
    }
    Ok(acc / n as f64)
}

/// Condition number of a symmetric matrix (ratio of extreme singular
/// values), used for diagnostics only.
pub fn condition_number(s: &DMatrix<f64>) -> f64 {
    if s.nrows() == 1 {
        return 1.0;
    }
    let svd = s.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}
