//! Shared domain vocabulary: panels, factor counts, test configuration and
//! the report produced by the estimators.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::ScalingScheme;

/// An `N x T` panel of observations, stored series-major: row `i` is series
/// `i`, column `t` is the cross-section `X_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    values: DMatrix<f64>,
    series_labels: Option<Vec<String>>,
    time_labels: Option<Vec<String>>,
}

impl Panel {
    /// Validates a raw `N x T` matrix. Values are moved in unchanged.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Empty);
        }
        if values.ncols() < 2 {
            return Err(Error::TooShort { t: values.ncols() });
        }
        // column-major storage: index k -> (k % N, k / N)
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k % values.nrows(),
                col: k / values.nrows(),
            });
        }
        Ok(Self {
            values,
            series_labels: None,
            time_labels: None,
        })
    }

    /// Builds a panel from one `Vec` per series.
    pub fn from_series(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        let t = rows[0].len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != t) {
            return Err(Error::Shape {
                row: i,
                expected: t,
                found: r.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, t, |i, j| rows[i][j]))
    }

    pub fn with_series_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::Config(format!(
                "{} series labels for {} series",
                labels.len(),
                self.n()
            )));
        }
        self.series_labels = Some(labels);
        Ok(self)
    }

    pub fn with_time_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.t() {
            return Err(Error::Config(format!(
                "{} time labels for {} periods",
                labels.len(),
                self.t()
            )));
        }
        self.time_labels = Some(labels);
        Ok(self)
    }

    /// Number of series.
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of time periods.
    pub fn t(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn series_labels(&self) -> Option<&[String]> {
        self.series_labels.as_deref()
    }

    pub fn time_labels(&self) -> Option<&[String]> {
        self.time_labels.as_deref()
    }

    /// First differences `ΔX_t = X_t - X_{t-1}`, an `N x (T-1)` matrix.
    pub fn differences(&self) -> DMatrix<f64> {
        let (n, t) = self.values.shape();
        DMatrix::from_fn(n, t - 1, |i, j| {
            self.values[(i, j + 1)] - self.values[(i, j)]
        })
    }

    /// A copy of the panel with every entry multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mut out = Self::new(&self.values * s)?;
        out.series_labels = self.series_labels.clone();
        out.time_labels = self.time_labels.clone();
        Ok(out)
    }
}

/// Ground-truth factor counts: `r1` linear-trend factors (0 or 1), `r2`
/// zero-mean I(1) factors and `r3` stationary factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorCounts {
    pub r1: usize,
    pub r2: usize,
    pub r3: usize,
}

impl FactorCounts {
    pub fn new(r1: usize, r2: usize, r3: usize) -> Result<Self> {
        if r1 > 1 {
            return Err(Error::Config(format!(
                "at most one linear-trend factor is identified, got r1 = {r1}"
            )));
        }
        Ok(Self { r1, r2, r3 })
    }

    /// Number of non-stationary factors.
    pub fn r_star(&self) -> usize {
        self.r1 + self.r2
    }

    pub fn r_total(&self) -> usize {
        self.r1 + self.r2 + self.r3
    }
}

/// One evaluation point of the weighting distribution over `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub u: f64,
    pub weight: f64,
}

/// Two-point `{±u}` distribution with equal weights.
pub fn symmetric_points(u: f64) -> Vec<WeightedPoint> {
    vec![
        WeightedPoint { u: -u, weight: 0.5 },
        WeightedPoint { u, weight: 0.5 },
    ]
}

/// Significance level of every individual test, as a function of the panel
/// dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum AlphaRule {
    /// The same level regardless of `(N, T)`.
    Fixed { alpha: f64 },
    /// `level / min(N, T)`, a vanishing level.
    ScaledByMinDim { level: f64 },
}

impl AlphaRule {
    pub fn alpha(&self, n: usize, t: usize) -> f64 {
        match *self {
            AlphaRule::Fixed { alpha } => alpha,
            AlphaRule::ScaledByMinDim { level } => level / n.min(t) as f64,
        }
    }
}

impl Default for AlphaRule {
    fn default() -> Self {
        AlphaRule::ScaledByMinDim { level: 0.05 }
    }
}

fn default_u_points() -> Vec<WeightedPoint> {
    symmetric_points(std::f64::consts::SQRT_2)
}

fn default_delta_star() -> f64 {
    1e-5
}

fn default_count_max() -> usize {
    8
}

/// Configuration of the randomized tests.
///
/// The randomization sizes default to `R1 = N`, `R2 = N` at the first step
/// and `floor(N / 3)` afterwards; `None` selects the default for the panel at
/// hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestConfig {
    pub r1: Option<usize>,
    pub r2_first: Option<usize>,
    pub r2_later: Option<usize>,
    pub u_points: Vec<WeightedPoint>,
    pub delta_star: f64,
    pub scheme: ScalingScheme,
    pub alpha: AlphaRule,
    pub r_star_max: usize,
    pub r_max: usize,
    pub master_seed: u64,
    /// Replication index mixed into every randomization stream key.
    pub replication: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            r1: None,
            r2_first: None,
            r2_later: None,
            u_points: default_u_points(),
            delta_star: default_delta_star(),
            scheme: ScalingScheme::Bt1,
            alpha: AlphaRule::default(),
            r_star_max: default_count_max(),
            r_max: default_count_max(),
            master_seed: 0,
            replication: 0,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_star > 0.0 && self.delta_star.is_finite()) {
            return Err(Error::Config(format!(
                "delta_star must be positive, got {}",
                self.delta_star
            )));
        }
        if self.u_points.is_empty() {
            return Err(Error::Config("u_points must not be empty".into()));
        }
        if self
            .u_points
            .iter()
            .any(|p| !(p.weight > 0.0) || !p.u.is_finite())
        {
            return Err(Error::Config(
                "every u point needs a finite location and a positive weight".into(),
            ));
        }
        let total: f64 = self.u_points.iter().map(|p| p.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "u-point weights sum to {total}, expected 1"
            )));
        }
        for (name, r) in [
            ("r1", self.r1),
            ("r2_first", self.r2_first),
            ("r2_later", self.r2_later),
        ] {
            if r == Some(0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.r_star_max == 0 || self.r_max == 0 {
            return Err(Error::Config(
                "r_star_max and r_max must be positive".into(),
            ));
        }
        let alpha = match self.alpha {
            AlphaRule::Fixed { alpha } => alpha,
            AlphaRule::ScaledByMinDim { level } => level,
        };
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "significance must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(())
    }

    /// Randomization size of the trend test.
    pub fn trend_replicates(&self, n: usize) -> usize {
        self.r1.unwrap_or(n).max(1)
    }

    /// Randomization size of step `p` (1-based) of a sequential test.
    pub fn sequential_replicates(&self, n: usize, p: usize) -> usize {
        if p <= 1 {
            self.r2_first.unwrap_or(n).max(1)
        } else {
            self.r2_later.unwrap_or(n / 3).max(1)
        }
    }
}

/// Which statistic a test step computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticFamily {
    /// `φ1` on the `T^-3` second-moment matrix.
    Trend,
    /// `φ2` on the `T^-2` second-moment matrix.
    Stochastic,
    /// `φ3` on the first-difference second-moment matrix.
    Difference,
}

impl StatisticFamily {
    pub(crate) fn stream_tag(self) -> u64 {
        match self {
            StatisticFamily::Trend => 1,
            StatisticFamily::Stochastic => 2,
            StatisticFamily::Difference => 3,
        }
    }
}

/// Everything computed at one step of one test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub statistic: StatisticFamily,
    pub p: usize,
    pub nu: f64,
    pub nu_bar: f64,
    /// Exponent of `φ` before clamping.
    pub log_phi: f64,
    pub saturated: bool,
    pub replicates: usize,
    pub theta: f64,
    pub alpha: f64,
    pub critical: f64,
    pub rejected: bool,
}

/// Estimated factor-space dimensions for one scaling scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDimensionReport {
    pub scheme: ScalingScheme,
    pub r1_hat: usize,
    pub r_star_hat: usize,
    pub r_total_hat: usize,
    pub r2_hat: usize,
    pub r3_hat: usize,
    /// Set when `r_star_hat < r1_hat` or `r_total_hat < r_star_hat` and a
    /// derived count had to be clamped at zero.
    pub inconsistency_flag: bool,
    /// Set when a sequential test exhausted its maximum without rejecting.
    pub max_reached: bool,
    pub steps: Vec<StepRecord>,
}

impl FactorDimensionReport {
    pub fn assemble(
        scheme: ScalingScheme,
        r1_hat: usize,
        r_star_hat: usize,
        r_total_hat: usize,
        max_reached: bool,
        steps: Vec<StepRecord>,
    ) -> Self {
        let r2_hat = r_star_hat.saturating_sub(r1_hat);
        let r3_hat = r_total_hat.saturating_sub(r_star_hat);
        Self {
            scheme,
            r1_hat,
            r_star_hat,
            r_total_hat,
            r2_hat,
            r3_hat,
            inconsistency_flag: r_star_hat < r1_hat || r_total_hat < r_star_hat,
            max_reached,
            steps,
        }
    }
}
