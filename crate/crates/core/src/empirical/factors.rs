//! Principal-component factor extraction and the yield-curve diagnostics
//! (level/slope/curvature proxies and Nelson-Siegel loading curves).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::types::Panel;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedFactors {
    /// `r x T`.
    pub factors: DMatrix<f64>,
    /// `N x r`, with `Λ'Λ = N I_r`.
    pub loadings: DMatrix<f64>,
    /// Eigenvalues of `T^-2 Σ X_t X_t'` belonging to the extracted factors.
    pub eigenvalues: Vec<f64>,
}

impl ExtractedFactors {
    /// `X - Λ F`, where `Λ F = Λ Λ' X / N` is the projection on the loadings.
    pub fn residuals(&self, panel: &Panel) -> DMatrix<f64> {
        panel.values() - &self.loadings * &self.factors
    }
}

/// `√N` times the leading `r` eigenvectors of `T^-2 Σ X_t X_t'`, and factors
/// `F = N^-1 Λ' X`. Each loading column is signed so that its
/// largest-magnitude entry is positive.
pub fn extract_factors(panel: &Panel, r: usize) -> Result<ExtractedFactors> {
    let (n, t) = (panel.n(), panel.t());
    if r == 0 || r > n.min(t) {
        return Err(Error::Config(format!(
            "number of factors must lie in 1..={}, got {r}",
            n.min(t)
        )));
    }
    let x = panel.values();
    let second_moment = (x * x.transpose()) / (t as f64).powi(2);
    let eig = symmetric_eigen(&second_moment, true)?;
    let vectors = eig.vectors.expect("vectors requested");
    let mut loadings = vectors.columns(0, r).clone_owned() * (n as f64).sqrt();
    for mut col in loadings.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    let factors = loadings.transpose() * x / n as f64;
    Ok(ExtractedFactors {
        factors,
        loadings,
        eigenvalues: eig.values[..r].to_vec(),
    })
}

/// Cross-sectional proxies for the yield-curve factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveProxies {
    /// `N^-1 Σ_i X_{i,t}`.
    pub level: Vec<f64>,
    /// `N^-1 (ln X_{N,t} - ln X_{1,t})`.
    pub slope: Vec<f64>,
    /// `(N-2)^-1 Σ_{i=2}^{N-1} (X_{i+1,t} - 2 X_{i,t} + X_{i-1,t})`.
    pub curvature: Vec<f64>,
}

/// Rows are assumed ordered by maturity, shortest first.
pub fn proxies(panel: &Panel) -> Result<CurveProxies> {
    let (n, t) = (panel.n(), panel.t());
    if n < 3 {
        return Err(Error::Config(format!(
            "curvature proxy needs at least 3 series, got {n}"
        )));
    }
    let x = panel.values();
    for (row, col) in [0, n - 1].into_iter().flat_map(|i| (0..t).map(move |s| (i, s))) {
        if x[(row, col)] <= 0.0 {
            return Err(Error::NonPositive {
                row,
                col,
                value: x[(row, col)],
            });
        }
    }
    let level = (0..t).map(|s| x.column(s).mean()).collect();
    let slope = (0..t)
        .map(|s| (x[(n - 1, s)].ln() - x[(0, s)].ln()) / n as f64)
        .collect();
    let curvature = (0..t)
        .map(|s| {
            (1..n - 1)
                .map(|i| x[(i + 1, s)] - 2.0 * x[(i, s)] + x[(i - 1, s)])
                .sum::<f64>()
                / (n - 2) as f64
        })
        .collect();
    Ok(CurveProxies {
        level,
        slope,
        curvature,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelsonSiegelCurves {
    pub c: f64,
    pub maturities: Vec<f64>,
    pub level: Vec<f64>,
    pub slope: Vec<f64>,
    pub curvature: Vec<f64>,
}

/// Level, slope and curvature loadings `1`, `(1 - e^{-ci})/(ci)` and
/// `(1 - e^{-ci})/(ci) - e^{-ci}` on a grid of positive maturities.
pub fn nelson_siegel_loadings(c: f64, maturities: &[f64]) -> Result<NelsonSiegelCurves> {
    if !(c > 0.0) {
        return Err(Error::Config(format!("decay c must be positive, got {c}")));
    }
    let mut slope = Vec::with_capacity(maturities.len());
    let mut curvature = Vec::with_capacity(maturities.len());
    for &i in maturities {
        if !(i >= 0.0) {
            return Err(Error::Config(format!("maturity must be positive, got {i}")));
        }
        let x = c * i;
        let (s, k) = if x < 1e-8 {
            // Series expansion around 0: s = 1 - x/2, s - e^{-x} = x/2.
            (1.0 - 0.5 * x, 0.5 * x)
        } else {
            let decay = (-x).exp();
            let s = -(-x).exp_m1() / x;
            (s, s - decay)
        };
        slope.push(s);
        curvature.push(k);
    }
    Ok(NelsonSiegelCurves {
        c,
        maturities: maturities.to_vec(),
        level: vec![1.0; maturities.len()],
        slope,
        curvature,
    })
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Config(format!(
            "correlation needs two equal-length series, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rank_one_recovery() {
        let n = 6;
        let lambda: Vec<f64> = vec![1.0, -0.5, 2.0, 0.3, -1.2, 0.8];
        let norm = lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lambda: Vec<f64> = lambda.iter().map(|v| v / norm * (n as f64).sqrt()).collect();
        let f: Vec<f64> = (0..20).map(|s| (s as f64 * 0.7).sin() + 0.1 * s as f64).collect();
        let x = DMatrix::from_fn(n, 20, |i, s| lambda[i] * f[s]);
        let ex = extract_factors(&Panel::new(x).unwrap(), 1).unwrap();
        // largest |λ_i| is positive, so the sign rule keeps λ as is
        for i in 0..n {
            assert!((ex.loadings[(i, 0)] - lambda[i]).abs() < 1e-8);
        }
        for s in 0..20 {
            assert!((ex.factors[(0, s)] - f[s]).abs() < 1e-8);
        }
    }

    #[test]
    fn full_rank_reconstruction() {
        let x = DMatrix::from_fn(5, 5, |i, j| ((i * 3 + j * 7) % 11) as f64 + if i == j { 4.0 } else { 0.0 });
        let panel = Panel::new(x.clone()).unwrap();
        let ex = extract_factors(&panel, 5).unwrap();
        let gram = ex.loadings.transpose() * &ex.loadings;
        assert!((gram - DMatrix::<f64>::identity(5, 5) * 5.0).abs().max() < 1e-8);
        assert!(ex.residuals(&panel).abs().max() < 1e-8);
    }

    #[test]
    fn flat_and_linear_curves() {
        let flat = Panel::new(DMatrix::from_element(5, 4, 2.5)).unwrap();
        let p = proxies(&flat).unwrap();
        assert!(p.level.iter().all(|&v| (v - 2.5).abs() < 1e-15));
        assert!(p.slope.iter().all(|&v| v == 0.0));
        assert!(p.curvature.iter().all(|&v| v == 0.0));

        let linear = Panel::new(DMatrix::from_fn(7, 3, |i, _| (i + 1) as f64)).unwrap();
        assert!(proxies(&linear).unwrap().curvature.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_positive_yields_fail_the_slope() {
        let mut x = DMatrix::from_element(4, 3, 1.0);
        x[(3, 2)] = 0.0;
        assert!(matches!(
            proxies(&Panel::new(x).unwrap()),
            Err(Error::NonPositive { row: 3, col: 2, .. })
        ));
    }

    #[test]
    fn nelson_siegel_values() {
        let ns = nelson_siegel_loadings(0.2, &[0.0, 5.0, 1e6]).unwrap();
        assert_eq!((ns.level[0], ns.slope[0], ns.curvature[0]), (1.0, 1.0, 0.0));
        let e1 = (-1.0f64).exp();
        assert_relative_eq!(ns.slope[1], 1.0 - e1, epsilon = 1e-15);
        assert_relative_eq!(ns.curvature[1], 1.0 - 2.0 * e1, epsilon = 1e-15);
        assert_relative_eq!(ns.slope[1], 0.632_120_558_828_557_7, epsilon = 1e-12);
        assert_relative_eq!(ns.curvature[1], 0.264_241_117_657_115_4, epsilon = 1e-12);
        assert!(ns.slope[2] < 1e-5 && ns.curvature[2] < 1e-5);
        assert!(nelson_siegel_loadings(0.0, &[1.0]).is_err());
    }

    #[test]
    fn tiny_maturities_use_the_series_limit() {
        let ns = nelson_siegel_loadings(0.2, &[1e-12, 1e-7]).unwrap();
        assert!((ns.slope[0] - 1.0).abs() < 1e-12 && ns.curvature[0].abs() < 1e-12);
        let x = 0.2e-7f64;
        assert_relative_eq!(ns.slope[1], -(-x).exp_m1() / x, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn correlation_properties(
            a in proptest::collection::vec(-10.0f64..10.0, 5..30),
            shift in -5.0f64..5.0,
            scale in 0.1f64..10.0,
        ) {
            let b: Vec<f64> = a.iter().enumerate().map(|(k, v)| v * v - k as f64).collect();
            if let (Ok(ab), Ok(ba)) = (correlation(&a, &b), correlation(&b, &a)) {
                prop_assert!((ab - ba).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&ab));
                let a2: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
                let a3: Vec<f64> = a.iter().map(|v| -scale * v + shift).collect();
                prop_assert!((correlation(&a2, &b).unwrap() - ab).abs() < 1e-9);
                prop_assert!((correlation(&a3, &b).unwrap() + ab).abs() < 1e-9);
            }
        }
    }
}
