//! Sequential testing procedures for the factor counts.
//!
//! * `r1`: a single randomized test on the largest eigenvalue of the `T^-3`
//!   matrix; rejection of divergence means no linear trend.
//! * `r*`: tests `p = 1, 2, ...` on the `T^-2` matrix, stopping at the first
//!   rejection.
//! * `r`: the same loop on the first-difference matrix.
//!
//! Each `(family, p)` pair draws from its own randomization stream.

use crate::error::Result;
use crate::randtest::{chi2_1_critical, draw_xi, theta_statistic, StreamId};
use crate::spectra::{PanelSpectra, Spectrum};
use crate::transforms::{delta_exponent, nu_bar, phi_statistic, PhiFamily, ScalingScheme};
use crate::types::{FactorDimensionReport, Panel, StatisticFamily, StepRecord, TestConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TrendEstimate {
    pub r1_hat: usize,
    pub step: StepRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialEstimate {
    pub count: usize,
    pub steps: Vec<StepRecord>,
    /// The loop reached its bound without a rejection.
    pub max_reached: bool,
}

fn run_step(
    spectra: &PanelSpectra,
    cfg: &TestConfig,
    family: StatisticFamily,
    p: usize,
    replicates: usize,
) -> Result<StepRecord> {
    let diff = &spectra.difference;
    let (n, t) = (diff.n, diff.t);
    let (spectrum, phi_family): (&Spectrum, PhiFamily) = match family {
        StatisticFamily::Trend => (&spectra.trend, PhiFamily::Phi1),
        StatisticFamily::Stochastic => (&spectra.stochastic, PhiFamily::Phi2),
        StatisticFamily::Difference => (diff, PhiFamily::Phi3),
    };
    let nu = spectrum.nu(p);
    let rescaler = nu_bar(diff, p, cfg.scheme, n)?;
    let delta = delta_exponent(n, t, cfg.delta_star);
    let phi = phi_statistic(nu, rescaler, n, t, delta, phi_family)?;
    let stream = StreamId {
        family,
        p,
        replication: cfg.replication,
    };
    let draw = draw_xi(replicates, stream, cfg.master_seed);
    let theta = theta_statistic(phi, &draw.xi, &cfg.u_points).theta;
    let alpha = cfg.alpha.alpha(n, t);
    let critical = chi2_1_critical(alpha);
    Ok(StepRecord {
        statistic: family,
        p,
        nu,
        nu_bar: rescaler,
        log_phi: phi.log_phi,
        saturated: phi.saturated,
        replicates,
        theta,
        alpha,
        critical,
        rejected: theta > critical,
    })
}

/// Linear-trend count from precomputed spectra.
pub fn trend_count(spectra: &PanelSpectra, cfg: &TestConfig) -> Result<TrendEstimate> {
    cfg.validate()?;
    let replicates = cfg.trend_replicates(spectra.difference.n);
    let step = run_step(spectra, cfg, StatisticFamily::Trend, 1, replicates)?;
    Ok(TrendEstimate {
        r1_hat: usize::from(!step.rejected),
        step,
    })
}

fn sequential_count(
    spectra: &PanelSpectra,
    cfg: &TestConfig,
    family: StatisticFamily,
    bound: usize,
) -> Result<SequentialEstimate> {
    cfg.validate()?;
    let n = spectra.difference.n;
    let mut steps = Vec::new();
    for p in 1..=bound {
        if cfg.scheme.tail_start(p) > n {
            // The rescaler for this step has an empty tail.
            return Ok(SequentialEstimate {
                count: p - 1,
                steps,
                max_reached: true,
            });
        }
        let step = run_step(spectra, cfg, family, p, cfg.sequential_replicates(n, p))?;
        let rejected = step.rejected;
        steps.push(step);
        if rejected {
            return Ok(SequentialEstimate {
                count: p - 1,
                steps,
                max_reached: false,
            });
        }
    }
    Ok(SequentialEstimate {
        count: bound,
        steps,
        max_reached: true,
    })
}

/// Number of non-stationary factors from precomputed spectra.
pub fn nonstationary_count(spectra: &PanelSpectra, cfg: &TestConfig) -> Result<SequentialEstimate> {
    sequential_count(spectra, cfg, StatisticFamily::Stochastic, cfg.r_star_max)
}

/// Total number of factors from precomputed spectra.
pub fn total_count(spectra: &PanelSpectra, cfg: &TestConfig) -> Result<SequentialEstimate> {
    sequential_count(spectra, cfg, StatisticFamily::Difference, cfg.r_max)
}

pub fn estimate_trend_count(panel: &Panel, cfg: &TestConfig) -> Result<TrendEstimate> {
    trend_count(&PanelSpectra::compute(panel)?, cfg)
}

pub fn estimate_nonstationary_count(panel: &Panel, cfg: &TestConfig) -> Result<SequentialEstimate> {
    nonstationary_count(&PanelSpectra::compute(panel)?, cfg)
}

pub fn estimate_total_count(panel: &Panel, cfg: &TestConfig) -> Result<SequentialEstimate> {
    total_count(&PanelSpectra::compute(panel)?, cfg)
}

/// Runs all three procedures with `cfg.scheme` on precomputed spectra.
pub fn report_from_spectra(spectra: &PanelSpectra, cfg: &TestConfig) -> Result<FactorDimensionReport> {
    let trend = trend_count(spectra, cfg)?;
    let star = nonstationary_count(spectra, cfg)?;
    let total = total_count(spectra, cfg)?;
    let mut steps = Vec::with_capacity(1 + star.steps.len() + total.steps.len());
    steps.push(trend.step);
    steps.extend(star.steps);
    steps.extend(total.steps);
    Ok(FactorDimensionReport::assemble(
        cfg.scheme,
        trend.r1_hat,
        star.count,
        total.count,
        star.max_reached || total.max_reached,
        steps,
    ))
}

pub fn estimate_all(panel: &Panel, cfg: &TestConfig) -> Result<FactorDimensionReport> {
    report_from_spectra(&PanelSpectra::compute(panel)?, cfg)
}

/// One report per scheme; the spectra are computed once.
pub fn estimate_all_schemes(
    panel: &Panel,
    cfg: &TestConfig,
    schemes: &[ScalingScheme],
) -> Result<Vec<FactorDimensionReport>> {
    let spectra = PanelSpectra::compute(panel)?;
    schemes
        .iter()
        .map(|&scheme| {
            let cfg = TestConfig {
                scheme,
                ..cfg.clone()
            };
            report_from_spectra(&spectra, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use nalgebra::DMatrix;

    fn trend_panel(n: usize, t: usize) -> Panel {
        // Series i is (1 + i/n) t plus a small deterministic wiggle so the
        // differences are not all identical.
        Panel::new(DMatrix::from_fn(n, t, |i, j| {
            let w = ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.5;
            (1.0 + i as f64 / n as f64) * (j + 1) as f64 + 0.1 * w
        }))
        .unwrap()
    }

    #[test]
    fn pure_common_trend_is_detected() {
        // X_{i,t} = t for every series: the difference spectrum is one
        // eigenvalue N (all ΔX = 1), so ν̄ = N / (4N) = 1/4, while the trend
        // eigenvalue is N Σ t² / T³ ≈ N / 3.
        let (n, t) = (50, 200);
        let panel = Panel::new(DMatrix::from_fn(n, t, |_, j| (j + 1) as f64)).unwrap();
        let spectra = PanelSpectra::compute(&panel).unwrap();
        let sum_sq: f64 = (1..=t).map(|s| (s * s) as f64).sum();
        let expected = n as f64 * sum_sq / (t as f64).powi(3);
        assert!((spectra.trend.nu(1) - expected).abs() < 1e-9 * expected);
        assert!((spectra.difference.nu(1) - n as f64).abs() < 1e-9);

        let est = trend_count(&spectra, &TestConfig::default()).unwrap();
        let delta = delta_exponent(n, t, 1e-5);
        let exponent = (n as f64).powf(-delta) * expected / 0.25;
        assert!((est.step.log_phi - exponent).abs() < 1e-9 * exponent);
        assert!(exponent > 10.0);
        assert_eq!(est.r1_hat, 1);
    }

    #[test]
    fn stopping_is_monotone() {
        let panel = trend_panel(30, 60);
        let cfg = TestConfig::default();
        let est = estimate_nonstationary_count(&panel, &cfg).unwrap();
        let rejected: Vec<bool> = est.steps.iter().map(|s| s.rejected).collect();
        assert!(rejected.iter().rev().skip(1).all(|r| !r));
        assert_eq!(est.steps.len(), est.count + usize::from(!est.max_reached));
        for (k, s) in est.steps.iter().enumerate() {
            assert_eq!(s.p, k + 1);
        }
    }

    #[test]
    fn reruns_are_bit_identical_and_seed_sensitive() {
        let panel = trend_panel(20, 40);
        let cfg = TestConfig {
            master_seed: 99,
            ..TestConfig::default()
        };
        let a = estimate_all(&panel, &cfg).unwrap();
        let b = estimate_all(&panel, &cfg).unwrap();
        assert_eq!(a, b);
        let c = estimate_all(
            &panel,
            &TestConfig {
                master_seed: 100,
                ..cfg.clone()
            },
        )
        .unwrap();
        let thetas = |r: &FactorDimensionReport| r.steps.iter().map(|s| s.theta).collect::<Vec<_>>();
        assert_ne!(thetas(&a), thetas(&c));
    }

    #[test]
    fn zero_panel_has_no_rescaler() {
        let panel = Panel::new(DMatrix::zeros(5, 30)).unwrap();
        assert!(matches!(
            estimate_all(&panel, &TestConfig::default()),
            Err(Error::NonPositiveRescaler { .. })
        ));
    }

    #[test]
    fn short_panels_cannot_run_the_loglog_test() {
        let panel = trend_panel(5, 12);
        assert!(estimate_trend_count(&panel, &TestConfig::default()).is_ok());
        assert!(matches!(
            estimate_nonstationary_count(&panel, &TestConfig::default()),
            Err(Error::SampleTooShortForLogLog { t: 12 })
        ));
    }

    #[test]
    fn bt3_bound_stops_before_an_empty_tail() {
        // A full-rank panel of pure structure never rejects within N steps.
        let panel = Panel::new(DMatrix::from_fn(3, 40, |i, j| {
            ((j + 1) as f64).powi(i as i32 + 1)
        }))
        .unwrap();
        let cfg = TestConfig {
            scheme: ScalingScheme::Bt3,
            ..TestConfig::default()
        };
        let spectra = PanelSpectra::compute(&panel).unwrap();
        let est = nonstationary_count(&spectra, &cfg).unwrap();
        assert!(est.count <= 2);
    }

    #[test]
    fn all_schemes_share_spectra() {
        let panel = trend_panel(25, 50);
        let cfg = TestConfig::default();
        let reports = estimate_all_schemes(&panel, &cfg, &ScalingScheme::ALL).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            let single = estimate_all(
                &panel,
                &TestConfig {
                    scheme: r.scheme,
                    ..cfg.clone()
                },
            )
            .unwrap();
            assert_eq!(&single, r);
        }
    }
}
