use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample autocorrelations with the `±1.96/√T` white-noise band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acf {
    /// Lags `1..=max_lag`.
    pub values: Vec<f64>,
    pub band: f64,
}

/// Mean-removed autocorrelations normalized by the lag-0 sum of squares.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Acf> {
    let t = series.len();
    if max_lag < 1 || max_lag >= t {
        return Err(Error::Config(format!(
            "max_lag must lie in 1..{t}, got {max_lag}"
        )));
    }
    let mean = series.iter().sum::<f64>() / t as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if c0 == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let values = (1..=max_lag)
        .map(|k| {
            centered[k..]
                .iter()
                .zip(&centered)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / c0
        })
        .collect();
    Ok(Acf {
        values,
        band: 1.96 / (t as f64).sqrt(),
    })
}
