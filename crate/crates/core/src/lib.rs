//! Estimation of the number of common factors in large, possibly
//! non-stationary panels.
//!
//! Three counts are estimated separately: factors with a linear trend,
//! zero-mean I(1) factors and stationary factors. Each count comes from a
//! sequence of randomized tests on the eigenvalues of suitably scaled
//! second-moment matrices of the panel.
//!
//! ```
//! use factordim::{dgp, estimate_all, TestConfig};
//!
//! let sim = dgp::simulate(&dgp::DgpConfig {
//!     n: 50,
//!     t: 100,
//!     r1: 1,
//!     r2: 1,
//!     seed: 3,
//!     ..Default::default()
//! })
//! .unwrap();
//! let report = estimate_all(&sim.panel, &TestConfig::default()).unwrap();
//! assert_eq!(report.r1_hat, 1);
//! ```

pub mod dgp;
pub mod empirical;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod randtest;
pub mod rng;
pub mod spectra;
pub mod transforms;
pub mod types;

pub use error::{Error, Result};
pub use estimators::{
    estimate_all, estimate_all_schemes, estimate_nonstationary_count, estimate_total_count,
    estimate_trend_count,
};
pub use spectra::{PanelSpectra, Spectrum, SpectrumVariant};
pub use transforms::{PhiFamily, ScalingScheme};
pub use types::{
    AlphaRule, FactorCounts, FactorDimensionReport, Panel, StatisticFamily, StepRecord,
    TestConfig, WeightedPoint,
};
