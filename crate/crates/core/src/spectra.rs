//! Scaled second-moment matrices of a panel and their spectra.
//!
//! * `Trend`: `T^-3 Σ X_t X_t'`
//! * `Stochastic`: `T^-2 Σ X_t X_t'`
//! * `Difference`: `(T-1)^-1 Σ ΔX_t ΔX_t'`
//!
//! The eigenvalues are always computed on the smaller Gram side, so a
//! spectrum holds `min(N, columns)` values; the remaining ones are zero.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::symmetric_eigenvalues;
use crate::types::Panel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumVariant {
    Trend,
    Stochastic,
    Difference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub variant: SpectrumVariant,
    /// Descending, non-negative.
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
    pub n: usize,
    pub t: usize,
}

impl Spectrum {
    /// The `p`-th largest eigenvalue (1-based); zero past the stored rank.
    pub fn nu(&self, p: usize) -> f64 {
        assert!(p >= 1, "eigenvalue index is 1-based");
        self.eigenvalues.get(p - 1).copied().unwrap_or(0.0)
    }

    /// `Σ_{h >= k} ν^(h)` over all `N` eigenvalues, via trace subtraction.
    pub fn tail_sum(&self, k: usize) -> f64 {
        let head: f64 = self.eigenvalues.iter().take(k.saturating_sub(1)).sum();
        (self.trace - head).max(0.0)
    }

    fn from_raw(variant: SpectrumVariant, mut values: Vec<f64>, trace: f64, n: usize, t: usize) -> Self {
        let tol = 1e-10 * trace;
        for v in values.iter_mut() {
            if *v < tol {
                *v = 0.0;
            }
        }
        Spectrum {
            variant,
            eigenvalues: values,
            trace,
            n,
            t,
        }
    }
}

/// Eigenvalues of `Y Y'` computed on whichever Gram side is smaller, along
/// with `tr(Y Y')`.
fn gram_spectrum(y: &DMatrix<f64>) -> Result<(Vec<f64>, f64)> {
    let gram = if y.nrows() <= y.ncols() {
        y * y.transpose()
    } else {
        y.transpose() * y
    };
    let trace = y.iter().map(|v| v * v).sum();
    Ok((symmetric_eigenvalues(&gram)?, trace))
}

pub fn compute_spectrum(panel: &Panel, variant: SpectrumVariant) -> Result<Spectrum> {
    let (n, t) = (panel.n(), panel.t());
    match variant {
        SpectrumVariant::Trend | SpectrumVariant::Stochastic => {
            let (vals, trace) = gram_spectrum(panel.values())?;
            Ok(scale_levels(variant, vals, trace, n, t))
        }
        SpectrumVariant::Difference => {
            let (vals, trace) = gram_spectrum(&panel.differences())?;
            Ok(scale_differences(vals, trace, n, t))
        }
    }
}

fn scale_levels(variant: SpectrumVariant, vals: Vec<f64>, trace: f64, n: usize, t: usize) -> Spectrum {
    let power = match variant {
        SpectrumVariant::Trend => 3,
        _ => 2,
    };
    let s = (t as f64).powi(power);
    Spectrum::from_raw(
        variant,
        vals.into_iter().map(|v| v / s).collect(),
        trace / s,
        n,
        t,
    )
}

fn scale_differences(vals: Vec<f64>, trace: f64, n: usize, t: usize) -> Spectrum {
    let s = (t - 1) as f64;
    Spectrum::from_raw(
        SpectrumVariant::Difference,
        vals.into_iter().map(|v| v / s).collect(),
        trace / s,
        n,
        t,
    )
}

/// All three spectra of a panel. The level Gram matrix is decomposed once
/// and shared by the trend and stochastic variants.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSpectra {
    pub trend: Spectrum,
    pub stochastic: Spectrum,
    pub difference: Spectrum,
}

impl PanelSpectra {
    pub fn compute(panel: &Panel) -> Result<Self> {
        let (n, t) = (panel.n(), panel.t());
        let (vals, trace) = gram_spectrum(panel.values())?;
        let trend = scale_levels(SpectrumVariant::Trend, vals.clone(), trace, n, t);
        let stochastic = scale_levels(SpectrumVariant::Stochastic, vals, trace, n, t);
        let (dvals, dtrace) = gram_spectrum(&panel.differences())?;
        let difference = scale_differences(dvals, dtrace, n, t);
        Ok(Self {
            trend,
            stochastic,
            difference,
        })
    }

    pub fn get(&self, variant: SpectrumVariant) -> &Spectrum {
        match variant {
            SpectrumVariant::Trend => &self.trend,
            SpectrumVariant::Stochastic => &self.stochastic,
            SpectrumVariant::Difference => &self.difference,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_panel_has_zero_spectrum() {
        let p = Panel::new(DMatrix::zeros(3, 10)).unwrap();
        for v in [SpectrumVariant::Trend, SpectrumVariant::Stochastic, SpectrumVariant::Difference] {
            let s = compute_spectrum(&p, v).unwrap();
            assert!(s.eigenvalues.iter().all(|&x| x == 0.0));
            assert_eq!(s.trace, 0.0);
            assert_eq!(s.eigenvalues.len(), 3);
        }
    }

    #[test]
    fn constant_series_stochastic_eigenvalue() {
        let p = Panel::new(DMatrix::from_element(1, 100, 1.0)).unwrap();
        let s = compute_spectrum(&p, SpectrumVariant::Stochastic).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert!((s.eigenvalues[0] - 0.01).abs() < 1e-15);
        let d = compute_spectrum(&p, SpectrumVariant::Difference).unwrap();
        assert_eq!(d.eigenvalues, vec![0.0]);
    }

    #[test]
    fn wide_and_tall_panels_store_min_dimension() {
        let tall = Panel::new(DMatrix::from_fn(9, 4, |i, j| (i * 7 + j * 3) as f64 % 5.0)).unwrap();
        let s = compute_spectrum(&tall, SpectrumVariant::Trend).unwrap();
        assert_eq!(s.eigenvalues.len(), 4);
        let d = compute_spectrum(&tall, SpectrumVariant::Difference).unwrap();
        assert_eq!(d.eigenvalues.len(), 3);
        let sum: f64 = d.eigenvalues.iter().sum();
        assert!((sum - d.trace).abs() <= 1e-8 * d.trace);
    }

    #[test]
    fn shared_computation_matches_individual_calls() {
        let p = Panel::new(DMatrix::from_fn(5, 12, |i, j| ((i + 1) * (j + 2)) as f64 % 7.0 - 3.0)).unwrap();
        let all = PanelSpectra::compute(&p).unwrap();
        for v in [SpectrumVariant::Trend, SpectrumVariant::Stochastic, SpectrumVariant::Difference] {
            assert_eq!(all.get(v), &compute_spectrum(&p, v).unwrap());
        }
    }

    #[test]
    fn tail_sum_uses_trace_subtraction() {
        let s = Spectrum {
            variant: SpectrumVariant::Difference,
            eigenvalues: vec![8.0, 4.0, 2.0, 2.0],
            trace: 16.0,
            n: 4,
            t: 10,
        };
        assert_eq!(s.tail_sum(1), 16.0);
        assert_eq!(s.tail_sum(2), 8.0);
        assert_eq!(s.tail_sum(4), 2.0);
        assert_eq!(s.nu(7), 0.0);
    }
}
