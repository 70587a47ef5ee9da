//! Closed-form null mean and variance of the kurtosis statistic: i.i.d.
//! baseline, scalar colored, bivariate colored and bivariate-embedding
//! cases.
//!
//! Covariance sequences shorter than n-1 are treated as zero beyond their
//! last stored lag, which matches the mixing assumption and keeps the tau
//! sums O(L).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::stats::{lag_covariance, LagCovarianceSeq};

/// Which null model produced a set of moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullModel {
    Iid,
    ScalarColored,
    BivariateColored,
    EmbeddedBivariate,
}

impl std::fmt::Display for NullModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NullModel::Iid => "iid",
            NullModel::ScalarColored => "scalar-colored",
            NullModel::BivariateColored => "bivariate-colored",
            NullModel::EmbeddedBivariate => "embedded-bivariate",
        };
        f.write_str(s)
    }
}

/// Null mean and variance of the kurtosis statistic for a sample of size n.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NullMoments {
    pub mean: f64,
    pub variance: f64,
    pub model: NullModel,
    pub n: usize,
}

impl NullMoments {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Scalar covariance sequence: S = S(0) > 0 and S(1..=L).
#[derive(Debug, Clone)]
pub struct ScalarCovSeq {
    s0: f64,
    s: Vec<f64>,
}

impl ScalarCovSeq {
    pub fn new(s0: f64, s: Vec<f64>) -> Result<Self> {
        if !(s0 > 0.0) || !s0.is_finite() {
            return Err(Error::NonPositiveS0(s0));
        }
        if let Some(v) = s.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("scalar covariance sequence entry {v}"),
            });
        }
        Ok(ScalarCovSeq { s0, s })
    }

    /// White sequence: S(tau) = 0 for all tau >= 1.
    pub fn white(s0: f64) -> Result<Self> {
        Self::new(s0, Vec::new())
    }

    pub fn from_lag_seq(seq: &LagCovarianceSeq) -> Result<Self> {
        if seq.p() != 1 {
            return Err(Error::ModeDimensionMismatch {
                mode: "scalar-colored".into(),
                expected: "1".into(),
                got: seq.p(),
            });
        }
        let s0 = seq.s0()[(0, 0)];
        let s = (1..=seq.max_lag()).map(|t| seq.entry(0, 0, t as i64)).collect();
        Self::new(s0, s)
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn max_lag(&self) -> usize {
        self.s.len()
    }

    /// S(tau) with zero padding beyond the stored window (tau >= 1).
    #[inline]
    pub fn at(&self, tau: usize) -> f64 {
        if tau == 0 {
            self.s0
        } else {
            self.s.get(tau - 1).copied().unwrap_or(0.0)
        }
    }

    /// Cauchy-Schwarz sanity: |S(tau)| <= S(0). Violations point at a bad
    /// plug-in estimate; callers may warn but computation proceeds.
    pub fn is_cauchy_schwarz_consistent(&self) -> bool {
        self.s.iter().all(|v| v.abs() <= self.s0)
    }
}

/// Correlation function of the underlying scalar series of a
/// delta-stride embedding: C(0..=L) with C(0) > 0.
#[derive(Debug, Clone)]
pub struct EmbeddingCorrelation {
    c: Vec<f64>,
    delta: usize,
}

impl EmbeddingCorrelation {
    pub fn new(c: Vec<f64>, delta: usize) -> Result<Self> {
        if delta == 0 {
            return Err(Error::InvalidConfig("embedding stride must be >= 1".into()));
        }
        if c.is_empty() || !(c[0] > 0.0) {
            return Err(Error::NonPositiveS0(c.first().copied().unwrap_or(0.0)));
        }
        if let Some(v) = c.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("correlation sequence entry {v}"),
            });
        }
        Ok(EmbeddingCorrelation { c, delta })
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn max_index(&self) -> usize {
        self.c.len() - 1
    }

    /// C(j) for any integer j, using the even extension C(-j) = C(j) and
    /// zero padding beyond the stored window.
    #[inline]
    pub fn at(&self, j: i64) -> f64 {
        self.c.get(j.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// gamma_i(tau) = C(tau * delta + i).
    #[inline]
    pub fn gamma(&self, i: i64, tau: usize) -> f64 {
        self.at(tau as i64 * self.delta as i64 + i)
    }

    pub fn is_cauchy_schwarz_consistent(&self) -> bool {
        self.c.iter().skip(1).all(|v| v.abs() <= self.c[0])
    }

    /// The lag covariance of the embedded bivariate process implied by C:
    /// S_ab(tau) = C(tau * delta + a - b), for tau = 0..=max_lag.
    pub fn to_bivariate_lags(&self, max_lag: usize) -> Result<LagCovarianceSeq> {
        let mut lags = Vec::with_capacity(max_lag + 1);
        for tau in 0..=max_lag {
            let mut m = nalgebra::DMatrix::zeros(2, 2);
            for a in 0..2i64 {
                for b in 0..2i64 {
                    m[(a as usize, b as usize)] =
                        self.at(tau as i64 * self.delta as i64 + a - b);
                }
            }
            lags.push(m);
        }
        LagCovarianceSeq::from_matrices(lags)
    }
}

/// Mean p(p+2)(n-1)/(n+1) and variance 8p(p+2)/n of the statistic for
/// i.i.d. normal samples.
pub fn iid_moments(p: usize, n: usize) -> Result<NullMoments> {
    if p < 1 {
        return Err(Error::InvalidConfig("dimension must be >= 1".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let (pf, nf) = (p as f64, n as f64);
    let beta = pf * (pf + 2.0);
    Ok(NullMoments {
        mean: beta * (nf - 1.0) / (nf + 1.0),
        variance: 8.0 * beta / nf,
        model: NullModel::Iid,
        n,
    })
}

/// Scalar colored null moments:
///
/// mean = 3 - 6/n - (12/n^2) sum_{tau=1}^{n-1} (n-tau) S(tau)^2 / S^2
/// var  = (24/n) [ 1 + (2/n) sum_{tau=1}^{n-1} (n-tau) S(tau)^4 / S^4 ]
pub fn scalar_colored_moments(cov: &ScalarCovSeq, n: usize) -> Result<NullMoments> {
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let s0 = cov.s0();
    let upper = cov.max_lag().min(n - 1);
    let mut sum_sq = 0.0;
    let mut sum_q4 = 0.0;
    for tau in 1..=upper {
        let r = cov.at(tau) / s0;
        let r2 = r * r;
        let w = nf - tau as f64;
        sum_sq += w * r2;
        sum_q4 += w * r2 * r2;
    }
    Ok(NullMoments {
        mean: 3.0 - 6.0 / nf - 12.0 / (nf * nf) * sum_sq,
        variance: 24.0 / nf * (1.0 + 2.0 / nf * sum_q4),
        model: NullModel::ScalarColored,
        n,
    })
}

/// First lag polynomial of the bivariate colored mean.
///
/// Arguments: zero-lag entries (s11, s22, s12) and lagged entries
/// a = S11(tau), d = S22(tau), b = S12(tau), c = S21(tau).
fn q1_bivariate(s11: f64, s22: f64, s12: f64, a: f64, d: f64, b: f64, c: f64) -> f64 {
    let bc = b + c;
    s11 * s22 * (bc * bc - 4.0 * a * d)
        + s12 * s12 * (2.0 * bc * bc + 4.0 * d * a)
        - 6.0 * s22 * s12 * (a * bc)
        - 6.0 * s11 * s12 * (d * bc)
        + 6.0 * s11 * s11 * d * d
        + 6.0 * s22 * s22 * a * a
}

/// Second lag polynomial of the bivariate colored variance. Same argument
/// convention as `q1_bivariate`.
fn q2_bivariate(s11: f64, s22: f64, s12: f64, a: f64, d: f64, b: f64, c: f64) -> f64 {
    let bc = b + c;
    let bc2 = bc * bc;
    let ad = a * d;
    let cb = c * b;
    let b2c2 = b * b + c * c;

    let block0 = 2.0 * a * a * d * d - 16.0 * ad * cb
        + 3.0 * b2c2 * b2c2
        + 12.0 * ad * bc2
        - 4.0 * cb * cb;
    let block1 = 8.0 * a * a * d * d + 3.0 * (5.0 * ad + cb) * bc2
        - 4.0 * cb * (d * d + cb);
    let block2 = 8.0 * a * a * d * d + 3.0 * (5.0 * ad + cb) * bc2
        - 4.0 * cb * (a * a + cb);
    let block3 = a * a * d * d + 4.0 * ad * cb + cb * cb;
    let cross = (2.0 * ad + b2c2) * s11 * s22 + 2.0 * (ad + b * c) * s12 * s12;

    s11 * s11 * s22 * s22 * block0
        + 2.0 * s11 * s11 * s12 * s12 * block1
        + 2.0 * s22 * s22 * s12 * s12 * block2
        + 3.0 * s11.powi(4) * d.powi(4)
        + 3.0 * s22.powi(4) * a.powi(4)
        + 8.0 * s12.powi(4) * block3
        - 12.0 * s11 * s12 * d * bc * cross
        - 12.0 * s22 * s12 * a * bc * cross
}

/// Bivariate colored null moments from a p = 2 lag covariance sequence.
pub fn bivariate_colored_moments(cov: &LagCovarianceSeq, n: usize) -> Result<NullMoments> {
    if cov.p() != 2 {
        return Err(Error::ModeDimensionMismatch {
            mode: "bivariate-colored".into(),
            expected: "2".into(),
            got: cov.p(),
        });
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let s0 = cov.s0();
    let (s11, s22, s12) = (s0[(0, 0)], s0[(1, 1)], s0[(0, 1)]);
    let det = s11 * s22 - s12 * s12;
    if !(det > 0.0) {
        return Err(Error::DegenerateCovariance { det });
    }
    let nf = n as f64;
    let det2 = det * det;
    let det4 = det2 * det2;
    let upper = cov.max_lag().min(n - 1);
    let mut sum_q1 = 0.0;
    let mut sum_q2 = 0.0;
    for tau in 1..=upper {
        let t = tau as i64;
        let a = cov.entry(0, 0, t);
        let d = cov.entry(1, 1, t);
        let b = cov.entry(0, 1, t);
        let c = cov.entry(1, 0, t);
        let w = nf - tau as f64;
        sum_q1 += w * q1_bivariate(s11, s22, s12, a, d, b, c);
        sum_q2 += w * q2_bivariate(s11, s22, s12, a, d, b, c);
    }
    Ok(NullMoments {
        mean: 8.0 - 16.0 / nf - 4.0 / (nf * nf) * sum_q1 / det2,
        variance: 64.0 / nf + 16.0 / (nf * nf) * sum_q2 / det4,
        model: NullModel::BivariateColored,
        n,
    })
}

/// Mean polynomial of the embedded bivariate case, written in terms of
/// gamma_i = C(tau * delta + i), c0 = C(0) and c1 = C(1).
fn q1_embedded(c0: f64, c1: f64, g0: f64, g1: f64, gm1: f64) -> f64 {
    let s = g1 + gm1;
    (s * s + 8.0 * g0 * g0) * c0 * c0 - 12.0 * c0 * c1 * g0 * s
        + (2.0 * s * s + 4.0 * g0 * g0) * c1 * c1
}

/// Variance polynomial of the embedded bivariate case.
fn q2_embedded(c0: f64, c1: f64, g0: f64, g1: f64, gm1: f64) -> f64 {
    let s = g1 + gm1;
    let s2 = s * s;
    let g0sq = g0 * g0;
    let g1m = g1 * gm1;
    let t0 = 8.0 * (g0sq - g1m) * (g0sq - g1m)
        + 3.0 * (g1 * g1 - gm1 * gm1) * (g1 * g1 - gm1 * gm1)
        + 12.0 * g0sq * s2;
    let t1 = 8.0 * g0sq * g0sq + 3.0 * (5.0 * g0sq + g1m) * s2
        - 4.0 * g1m * (g0sq + g1m);
    let t2 = g0sq * g0sq + 4.0 * g0sq * g1m + g1m * g1m;
    let t3 = (2.0 * g0sq + g1 * g1 + gm1 * gm1) * c0 * c0
        + 2.0 * (g0sq + g1m) * c1 * c1;
    t0 * c0.powi(4) + 4.0 * t1 * c0 * c0 * c1 * c1 + 8.0 * t2 * c1.powi(4)
        - 24.0 * c0 * c1 * g0 * s * t3
}

/// Null moments for the delta-stride bivariate embedding of a scalar
/// series with correlation function C.
pub fn embedded_bivariate_moments(
    corr: &EmbeddingCorrelation,
    n: usize,
) -> Result<NullMoments> {
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let c0 = corr.at(0);
    let c1 = corr.at(1);
    let det = c0 * c0 - c1 * c1;
    if !(det > 0.0) {
        return Err(Error::DegenerateCovariance { det });
    }
    let nf = n as f64;
    let det2 = det * det;
    let det4 = det2 * det2;
    // gamma_i(tau) vanishes once tau*delta - 1 passes the stored window.
    let upper = ((corr.max_index() + 1) / corr.delta()).min(n - 1);
    let mut sum_q1 = 0.0;
    let mut sum_q2 = 0.0;
    for tau in 1..=upper {
        let g0 = corr.gamma(0, tau);
        let g1 = corr.gamma(1, tau);
        let gm1 = corr.gamma(-1, tau);
        let w = nf - tau as f64;
        sum_q1 += w * q1_embedded(c0, c1, g0, g1, gm1);
        sum_q2 += w * q2_embedded(c0, c1, g0, g1, gm1);
    }
    Ok(NullMoments {
        mean: 8.0 - 16.0 / nf - 4.0 / (nf * nf) * sum_q1 / det2,
        variance: 64.0 / nf + 16.0 / (nf * nf) * sum_q2 / det4,
        model: NullModel::EmbeddedBivariate,
        n,
    })
}

/// Default estimation window for plug-in covariances:
/// L = min(n - 1, ceil(10 sqrt(n))).
pub fn auto_truncation(n: usize) -> usize {
    let l = (10.0 * (n as f64).sqrt()).ceil() as usize;
    l.min(n.saturating_sub(1))
}

/// Sample lag covariances for feeding the colored-moment formulas when the
/// true covariance sequence is unknown.
pub fn plug_in_cov(x: &TimeSeries, truncation: Option<usize>) -> Result<LagCovarianceSeq> {
    let l = truncation.unwrap_or_else(|| auto_truncation(x.n_samples()));
    lag_covariance(x, l)
}
