//! Seeded process generators: colored Gaussian marginals, copula-coupled
//! bivariate processes, scalar embeddings and the additive non-Gaussian
//! detection mixture.
//!
//! Every generator is a pure function of (spec, seed, stream): replications
//! draw from independent ChaCha streams so results do not depend on thread
//! scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{std_normal_cdf, std_normal_quantile};
use crate::series::TimeSeries;

/// Samples discarded at the start of every recursion to wash out the
/// initial conditions.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Carrier variance E[x^2] of the detection scenario: stationary variance
/// of the unscaled AR(1) with coefficient 0.8 and unit innovations.
pub const DETECTION_CARRIER_VARIANCE: f64 = 1.0 / 0.36;

/// Corruption variance E[b^2]: stationary variance of the AR(2) with
/// coefficients (0.8, -0.5) driven by unit-scale Laplace noise
/// (innovation variance 2), from the Yule-Walker equations.
pub const DETECTION_CORRUPTION_VARIANCE: f64 = 600.0 / 161.0;

/// RNG for replication `stream` of a run seeded with `seed`. Identical
/// (seed, stream) pairs produce bit-identical output regardless of worker
/// count.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Archimedean copula families used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchimedeanFamily {
    Clayton,
    Gumbel,
}

impl std::fmt::Display for ArchimedeanFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArchimedeanFamily::Clayton => f.write_str("clayton"),
            ArchimedeanFamily::Gumbel => f.write_str("gumbel"),
        }
    }
}

/// Amplitude of the detection corruption, either directly or via a target
/// signal-to-noise ratio in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DetectionAmplitude {
    Gain { k: f64 },
    SnrDb { snr_db: f64 },
}

impl DetectionAmplitude {
    /// Resolve to the gain k using the stationary variances.
    pub fn gain(&self) -> f64 {
        match *self {
            DetectionAmplitude::Gain { k } => k,
            DetectionAmplitude::SnrDb { snr_db } => snr_db_to_gain(snr_db),
        }
    }
}

/// k such that k^2 E[b^2] / E[x^2] equals the requested SNR in dB.
pub fn snr_db_to_gain(snr_db: f64) -> f64 {
    (10f64.powf(snr_db / 10.0) * DETECTION_CARRIER_VARIANCE / DETECTION_CORRUPTION_VARIANCE)
        .sqrt()
}

/// Achieved SNR (linear) for gain k.
pub fn gain_to_snr(k: f64) -> f64 {
    k * k * DETECTION_CORRUPTION_VARIANCE / DETECTION_CARRIER_VARIANCE
}

/// Declarative description of a generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProcessSpec {
    /// p independent i.i.d. standard normal components.
    IidGaussian { p: usize },
    /// Unit-variance AR(1) scalar process, E[y(n) y(n-k)] = a^|k|.
    Ar1Gaussian { a: f64 },
    /// Two AR(1) marginals coupled by the Gaussian copula (jointly
    /// Gaussian output with cross-correlation r12).
    GaussianCopula { a: f64, r12: f64 },
    /// Two AR(1) Gaussian marginals coupled by the Clayton copula.
    ClaytonCopula { a: f64, theta: f64 },
    /// Two AR(1) Gaussian marginals coupled by the Gumbel copula.
    GumbelCopula { a: f64, theta: f64 },
    /// y = x + k b: Gaussian AR(1) carrier plus Laplace-driven AR(2).
    DetectionMixture {
        #[serde(flatten)]
        amplitude: DetectionAmplitude,
    },
    /// delta-stride bivariate embedding of a scalar inner process.
    Embedded { delta: usize, inner: Box<ProcessSpec> },
}

impl ProcessSpec {
    /// Dimension of the generated series.
    pub fn dimension(&self) -> usize {
        match self {
            ProcessSpec::IidGaussian { p } => *p,
            ProcessSpec::Ar1Gaussian { .. } | ProcessSpec::DetectionMixture { .. } => 1,
            ProcessSpec::GaussianCopula { .. }
            | ProcessSpec::ClaytonCopula { .. }
            | ProcessSpec::GumbelCopula { .. }
            | ProcessSpec::Embedded { .. } => 2,
        }
    }

    /// Whether the generated process is exactly Gaussian (so the closed
    /// forms apply and Monte Carlo can serve as a null oracle).
    pub fn is_gaussian(&self) -> bool {
        match self {
            ProcessSpec::IidGaussian { .. }
            | ProcessSpec::Ar1Gaussian { .. }
            | ProcessSpec::GaussianCopula { .. } => true,
            ProcessSpec::Embedded { inner, .. } => inner.is_gaussian(),
            _ => false,
        }
    }

    /// Check parameter domains.
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::IidGaussian { p } => {
                if *p < 1 {
                    return Err(Error::InvalidConfig("dimension must be >= 1".into()));
                }
            }
            ProcessSpec::Ar1Gaussian { a } => validate_ar(*a)?,
            ProcessSpec::GaussianCopula { a, r12 } => {
                validate_ar(*a)?;
                if !(r12.abs() < 1.0) {
                    return Err(Error::ParameterOutOfDomain {
                        family: "gaussian".into(),
                        detail: format!("|r12| must be < 1, got {r12}"),
                    });
                }
            }
            ProcessSpec::ClaytonCopula { a, theta } => {
                validate_ar(*a)?;
                if !(*theta >= -1.0) || *theta == 0.0 || !theta.is_finite() {
                    return Err(Error::ParameterOutOfDomain {
                        family: "clayton".into(),
                        detail: format!("theta must lie in [-1, inf) \\ {{0}}, got {theta}"),
                    });
                }
            }
            ProcessSpec::GumbelCopula { a, theta } => {
                validate_ar(*a)?;
                if !(*theta >= 1.0) || !theta.is_finite() {
                    return Err(Error::ParameterOutOfDomain {
                        family: "gumbel".into(),
                        detail: format!("theta must lie in [1, inf), got {theta}"),
                    });
                }
            }
            ProcessSpec::DetectionMixture { amplitude } => {
                let k = amplitude.gain();
                if !k.is_finite() || k < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "detection gain must be finite and >= 0, got {k}"
                    )));
                }
            }
            ProcessSpec::Embedded { delta, inner } => {
                if *delta < 1 {
                    return Err(Error::InvalidConfig("embedding stride must be >= 1".into()));
                }
                if inner.dimension() != 1 {
                    return Err(Error::InvalidConfig(
                        "embedding requires a scalar inner process".into(),
                    ));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    /// Generate n samples of the process.
    pub fn generate(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<TimeSeries> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidConfig("need n >= 1 samples".into()));
        }
        match self {
            ProcessSpec::IidGaussian { p } => {
                let components = (0..*p)
                    .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
                    .collect();
                TimeSeries::from_components(components)
            }
            ProcessSpec::Ar1Gaussian { a } => {
                TimeSeries::scalar(ar1(*a, n, DEFAULT_BURN_IN, rng))
            }
            ProcessSpec::GaussianCopula { a, r12 } => {
                colored_copula_process(CopulaCoupling::Gaussian { r12: *r12 }, *a, n, rng)
            }
            ProcessSpec::ClaytonCopula { a, theta } => colored_copula_process(
                CopulaCoupling::Archimedean {
                    family: ArchimedeanFamily::Clayton,
                    theta: *theta,
                },
                *a,
                n,
                rng,
            ),
            ProcessSpec::GumbelCopula { a, theta } => colored_copula_process(
                CopulaCoupling::Archimedean {
                    family: ArchimedeanFamily::Gumbel,
                    theta: *theta,
                },
                *a,
                n,
                rng,
            ),
            ProcessSpec::DetectionMixture { amplitude } => {
                let (y, _snr) = detection_mixture(amplitude.gain(), n, rng);
                TimeSeries::scalar(y)
            }
            ProcessSpec::Embedded { delta, inner } => {
                let needed = n * *delta + 2;
                let y = inner.generate(needed, rng)?;
                embed(y.component(0), *delta, 2)
            }
        }
    }
}

fn validate_ar(a: f64) -> Result<()> {
    if !(a.abs() < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "AR coefficient must satisfy |a| < 1, got {a}"
        )));
    }
    Ok(())
}

/// Unit-variance AR(1) sample: y(t) = a y(t-1) + eta(t) with standard
/// normal innovations, rescaled by sqrt(1 - a^2) so that the stationary
/// variance is 1 and E[y(n) y(n-k)] = a^|k|. The first `burn_in` samples
/// are discarded.
pub fn ar1<R: Rng>(a: f64, n: usize, burn_in: usize, rng: &mut R) -> Vec<f64> {
    let scale = (1.0 - a * a).sqrt();
    let mut y = 0.0;
    let mut first = true;
    let mut out = Vec::with_capacity(n);
    for t in 0..(burn_in + n) {
        let eta: f64 = rng.sample(StandardNormal);
        y = if first {
            first = false;
            eta
        } else {
            a * y + eta
        };
        if t >= burn_in {
            out.push(scale * y);
        }
    }
    out
}

/// Unit-scale Laplace draw via inverse CDF (variance 2).
fn laplace_unit<R: Rng>(rng: &mut R) -> f64 {
    let c: f64 = rng.random::<f64>() - 0.5;
    -c.signum() * (1.0 - 2.0 * c.abs()).max(f64::MIN_POSITIVE).ln()
}

/// Detection scenario record y = x + k b and its achieved SNR
/// k^2 E[b^2] / E[x^2] (stationary variances). A burn-in of 1000 samples
/// is discarded from both recursions.
pub fn detection_mixture<R: Rng>(k: f64, n: usize, rng: &mut R) -> (Vec<f64>, f64) {
    let total = DEFAULT_BURN_IN + n;
    let mut x = 0.0;
    let mut b1 = 0.0; // b(t-1)
    let mut b2 = 0.0; // b(t-2)
    let mut out = Vec::with_capacity(n);
    for t in 0..total {
        let eta: f64 = rng.sample(StandardNormal);
        let eps = laplace_unit(rng);
        let (xt, bt) = if t == 0 {
            (eta, eps)
        } else {
            (0.8 * x + eta, 0.8 * b1 - 0.5 * b2 + eps)
        };
        x = xt;
        b2 = b1;
        b1 = bt;
        if t >= DEFAULT_BURN_IN {
            out.push(x + k * b1);
        }
    }
    (out, gain_to_snr(k))
}

/// Embedding x_a(n) = y(n delta + a), a = 1..=p (one-based indices as in
/// the defining identity).
pub fn embed(y: &[f64], delta: usize, p: usize) -> Result<TimeSeries> {
    if delta < 1 || p < 1 {
        return Err(Error::InvalidConfig("embed needs delta >= 1 and p >= 1".into()));
    }
    if y.len() < delta + p {
        return Err(Error::InsufficientLength {
            needed: delta + p,
            got: y.len(),
        });
    }
    let n_emb = (y.len() - p) / delta;
    let mut components = vec![Vec::with_capacity(n_emb); p];
    for t in 1..=n_emb {
        for (a, row) in components.iter_mut().enumerate() {
            row.push(y[t * delta + a]);
        }
    }
    TimeSeries::from_components(components)
}

/// Interleave a delta = 2, p = 2 embedding back into the scalar record it
/// came from (the embedding is lossless in that case).
pub fn deinterleave(x: &TimeSeries) -> Result<Vec<f64>> {
    if x.p() != 2 {
        return Err(Error::ModeDimensionMismatch {
            mode: "deinterleave".into(),
            expected: "2".into(),
            got: x.p(),
        });
    }
    let n = x.n_samples();
    let mut y = Vec::with_capacity(2 * n);
    for t in 0..n {
        y.push(x.value(0, t));
        y.push(x.value(1, t));
    }
    Ok(y)
}

/// One-sided positive alpha-stable draw with Laplace transform
/// exp(-t^alpha), via Kanter's representation. Requires 0 < alpha < 1.
fn positive_stable<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    let theta = std::f64::consts::PI * rng.random::<f64>().clamp(1e-16, 1.0 - 1e-16);
    let e: f64 = -(rng.random::<f64>().max(f64::MIN_POSITIVE)).ln();
    let log_a = ((1.0 - alpha) * theta).sin().ln()
        + alpha / (1.0 - alpha) * (alpha * theta).sin().ln()
        - 1.0 / (1.0 - alpha) * theta.sin().ln();
    ((1.0 - alpha) / alpha * (log_a - e.ln())).exp()
}

const UNIT_OPEN_LO: f64 = 1e-16;
const UNIT_OPEN_HI: f64 = 1.0 - f64::EPSILON / 2.0;

fn clamp_open_unit(u: f64) -> f64 {
    u.clamp(UNIT_OPEN_LO, UNIT_OPEN_HI)
}

/// Draw a pair with the prescribed Archimedean copula and uniform
/// marginals via the Marshall-Olkin frailty construction. The supplied
/// uniform `u` drives the first coordinate; the frailty and the second
/// driver come from `rng`.
pub fn archimedean_pair<R: Rng>(
    family: ArchimedeanFamily,
    theta: f64,
    u: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::DomainError(format!(
            "driving uniform must lie in (0,1), got {u}"
        )));
    }
    match family {
        ArchimedeanFamily::Clayton => {
            if !(theta > 0.0) || !theta.is_finite() {
                return Err(Error::ParameterOutOfDomain {
                    family: "clayton".into(),
                    detail: format!("frailty sampling requires theta > 0, got {theta}"),
                });
            }
            // Frailty V ~ Gamma(1/theta, 1); psi(t) = (1 + t)^(-1/theta).
            let v = Gamma::new(1.0 / theta, 1.0)
                .map_err(|e| Error::InvalidConfig(format!("gamma frailty: {e}")))?
                .sample(rng)
                .max(f64::MIN_POSITIVE);
            let u2: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            let up = (1.0 + (-u.ln()) / v).powf(-1.0 / theta);
            let vp = (1.0 + (-u2.ln()) / v).powf(-1.0 / theta);
            Ok((clamp_open_unit(up), clamp_open_unit(vp)))
        }
        ArchimedeanFamily::Gumbel => {
            if !(theta >= 1.0) || !theta.is_finite() {
                return Err(Error::ParameterOutOfDomain {
                    family: "gumbel".into(),
                    detail: format!("theta must lie in [1, inf), got {theta}"),
                });
            }
            if theta == 1.0 {
                // Independence copula.
                let u2: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                return Ok((u, u2));
            }
            // Frailty V ~ positive stable(1/theta); psi(t) = exp(-t^(1/theta)).
            let alpha = 1.0 / theta;
            let v = positive_stable(alpha, rng).max(f64::MIN_POSITIVE);
            let u2: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            let up = (-((-u.ln()) / v).powf(alpha)).exp();
            let vp = (-((-u2.ln()) / v).powf(alpha)).exp();
            Ok((clamp_open_unit(up), clamp_open_unit(vp)))
        }
    }
}

/// Conditional quantile of the Clayton copula: solve C_{v|u}(v | u) = w in
/// closed form (theta > 0).
pub fn clayton_conditional_inverse(w: f64, u: f64, theta: f64) -> f64 {
    let t = w.powf(-theta / (1.0 + theta)) - 1.0;
    clamp_open_unit((u.powf(-theta) * t + 1.0).powf(-1.0 / theta))
}

/// Conditional CDF of the Gumbel copula, C_{v|u}(v | u).
fn gumbel_conditional_cdf(v: f64, u: f64, theta: f64) -> f64 {
    let lu = -u.ln();
    let lv = -v.ln();
    let s = lu.powf(theta) + lv.powf(theta);
    (-s.powf(1.0 / theta)).exp() * s.powf(1.0 / theta - 1.0) * lu.powf(theta - 1.0) / u
}

/// Conditional quantile of the Gumbel copula by bisection; the conditional
/// CDF is monotone in v and maps (0,1) onto (0,1).
pub fn gumbel_conditional_inverse(w: f64, u: f64, theta: f64) -> f64 {
    let mut lo = 1e-300;
    let mut hi = UNIT_OPEN_HI;
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if gumbel_conditional_cdf(mid, u, theta) < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clamp_open_unit(0.5 * (lo + hi))
}

/// How the two colored uniform series are coupled cross-sectionally.
#[derive(Debug, Clone, Copy)]
pub enum CopulaCoupling {
    Gaussian { r12: f64 },
    Archimedean { family: ArchimedeanFamily, theta: f64 },
}

/// Bivariate process with colored standard Gaussian marginals whose
/// cross-sectional dependence follows the chosen copula.
///
/// Both driving series are unit-variance AR(1) with coefficient `a`. The
/// first output component is the first driver unchanged; the second is
/// obtained by the conditional-distribution method, conditioning the
/// second (independent) colored uniform on the first. For the Gaussian
/// coupling this reduces to the exact linear blend, so the output is
/// jointly Gaussian.
pub fn colored_copula_process(
    coupling: CopulaCoupling,
    a: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TimeSeries> {
    let z1 = ar1(a, n, DEFAULT_BURN_IN, rng);
    let z2 = ar1(a, n, DEFAULT_BURN_IN, rng);
    let x2 = match coupling {
        CopulaCoupling::Gaussian { r12 } => {
            let c = (1.0 - r12 * r12).sqrt();
            z1.iter()
                .zip(&z2)
                .map(|(&a1, &a2)| r12 * a1 + c * a2)
                .collect::<Vec<_>>()
        }
        CopulaCoupling::Archimedean { family, theta } => {
            if !(theta > 0.0) {
                return Err(Error::ParameterOutOfDomain {
                    family: family.to_string(),
                    detail: format!("conditional coupling requires theta > 0, got {theta}"),
                });
            }
            let mut out = Vec::with_capacity(n);
            for (&a1, &a2) in z1.iter().zip(&z2) {
                let u = clamp_open_unit(std_normal_cdf(a1));
                let w = clamp_open_unit(std_normal_cdf(a2));
                let vp = match family {
                    ArchimedeanFamily::Clayton => clayton_conditional_inverse(w, u, theta),
                    ArchimedeanFamily::Gumbel => {
                        if theta == 1.0 {
                            w
                        } else {
                            gumbel_conditional_inverse(w, u, theta)
                        }
                    }
                };
                out.push(std_normal_quantile(vp)?);
            }
            out
        }
    };
    TimeSeries::from_components(vec![z1, x2])
}
