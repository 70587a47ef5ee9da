//! Multivariate normality testing for serially dependent samples.
//!
//! The crate centers on Mardia's multivariate kurtosis and its null
//! distribution when the observed process is colored (identically
//! distributed but not independent in time):
//!
//! - [`series`]: the p x N sample container and CSV ingestion;
//! - [`stats`]: lag covariances, precision matrices and the kurtosis
//!   statistic itself;
//! - [`moments`]: closed-form null mean/variance for the i.i.d., scalar
//!   colored, bivariate colored and bivariate-embedding cases;
//! - [`normal`]: standard normal CDF/quantile kernels;
//! - [`engine`]: standardization, p-values and test reports;
//! - [`oracle`]: brute-force Gaussian moment machinery (Wick pairings)
//!   and Monte Carlo estimates used to validate the closed forms;
//! - [`gen`]: seeded process generators (AR(1), copula couplings,
//!   embeddings, detection mixtures);
//! - [`harness`]: reproducible rejection-rate and detection experiments.

pub mod engine;
pub mod error;
pub mod gen;
pub mod harness;
pub mod moments;
pub mod normal;
pub mod oracle;
pub mod series;
pub mod stats;

// pub use engine::{run_test, TestMode, TestOptions, TestReport};
pub use error::{Error, Result};
pub use moments::{
    bivariate_colored_moments, embedded_bivariate_moments, iid_moments,
    scalar_colored_moments, EmbeddingCorrelation, NullModel, NullMoments, ScalarCovSeq,
};
pub use series::TimeSeries;
pub use stats::{
    lag_covariance, mardia_statistic, precision, quadratic_form, sample_covariance,
    LagCovarianceSeq, PrecisionMatrix,
};
