//! Scale-free test inputs: the `δ` discount exponent, the tail-average
//! rescaler built from the first-difference spectrum and the exponential
//! `φ` transforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{Spectrum, SpectrumVariant};

/// Largest exponent passed to `exp`; beyond it `φ` is reported as saturated.
pub const PHI_EXPONENT_CAP: f64 = 700.0;

/// Where the tail average of the first-difference spectrum starts when
/// rescaling the `p`-th eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScalingScheme {
    /// `k = 1`: average of the whole spectrum.
    #[serde(rename = "BT1", alias = "bt1")]
    Bt1,
    /// `k = p`.
    #[serde(rename = "BT2", alias = "bt2")]
    Bt2,
    /// `k = p + 1`.
    #[serde(rename = "BT3", alias = "bt3")]
    Bt3,
}

impl ScalingScheme {
    pub const ALL: [ScalingScheme; 3] = [ScalingScheme::Bt1, ScalingScheme::Bt2, ScalingScheme::Bt3];

    pub fn tail_start(self, p: usize) -> usize {
        match self {
            ScalingScheme::Bt1 => 1,
            ScalingScheme::Bt2 => p,
            ScalingScheme::Bt3 => p + 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalingScheme::Bt1 => "BT1",
            ScalingScheme::Bt2 => "BT2",
            ScalingScheme::Bt3 => "BT3",
        }
    }
}

impl std::fmt::Display for ScalingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScalingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BT1" => Ok(ScalingScheme::Bt1),
            "BT2" => Ok(ScalingScheme::Bt2),
            "BT3" => Ok(ScalingScheme::Bt3),
            _ => Err(Error::Config(format!("unknown scaling scheme {s:?}"))),
        }
    }
}

/// Discount exponent: with `β = ln N / ln T`, `δ*` when `β < 1/2`, else
/// `1 - 1/(2β) + δ*`.
pub fn delta_exponent(n: usize, t: usize, delta_star: f64) -> f64 {
    assert!(n >= 1 && t >= 2, "delta exponent needs N >= 1, T >= 2");
    assert!(delta_star > 0.0);
    let beta = (n as f64).ln() / (t as f64).ln();
    if beta < 0.5 {
        delta_star
    } else {
        1.0 - 1.0 / (2.0 * beta) + delta_star
    }
}

/// `(4 (N - k + 1))^-1 Σ_{h=k}^{N} ν3^(h)` with `k` chosen by `scheme`.
pub fn nu_bar(spectrum: &Spectrum, p: usize, scheme: ScalingScheme, n: usize) -> Result<f64> {
    debug_assert_eq!(spectrum.variant, SpectrumVariant::Difference);
    let k = scheme.tail_start(p);
    if k == 0 || k > n {
        return Err(Error::EmptyTail { k, n });
    }
    Ok(spectrum.tail_sum(k) / (4.0 * (n - k + 1) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhiFamily {
    /// Linear-trend test: `exp{N^-δ ν/ν̄}`.
    Phi1,
    /// Non-stationarity test: `exp{N^-δ ln ln T ν/ν̄}`.
    Phi2,
    /// Total-count test on the difference spectrum; same form as `Phi1`.
    Phi3,
}

/// A `φ` value together with its exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi {
    pub log_phi: f64,
    pub saturated: bool,
}

impl Phi {
    /// `exp` of the clamped exponent.
    pub fn value(&self) -> f64 {
        self.log_phi.min(PHI_EXPONENT_CAP).exp()
    }

    pub fn saturated() -> Self {
        Phi {
            log_phi: f64::INFINITY,
            saturated: true,
        }
    }

    pub fn from_value(phi: f64) -> Self {
        let log_phi = phi.ln();
        Phi {
            log_phi,
            saturated: log_phi > PHI_EXPONENT_CAP,
        }
    }
}

pub fn phi_statistic(
    nu: f64,
    nu_bar: f64,
    n: usize,
    t: usize,
    delta: f64,
    family: PhiFamily,
) -> Result<Phi> {
    if !(nu_bar > 0.0) {
        return Err(Error::NonPositiveRescaler { value: nu_bar });
    }
    let mut exponent = (n as f64).powf(-delta) * nu / nu_bar;
    if family == PhiFamily::Phi2 {
        if t < 16 {
            return Err(Error::SampleTooShortForLogLog { t });
        }
        exponent *= (t as f64).ln().ln();
    }
    Ok(Phi {
        log_phi: exponent,
        saturated: exponent > PHI_EXPONENT_CAP,
    })
}
