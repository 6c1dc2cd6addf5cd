//! The randomized divergence test.
//!
//! A deterministic statistic `φ` that either diverges or tends to one is
//! turned into a random one: artificial standard normals `ξ_j` are drawn,
//! the indicators `I[φ ξ_j <= u]` are standardized around `G(0) = 1/2`, and
//! their squared sums are averaged over the evaluation points `u`. When `φ`
//! diverges the indicators are fair coin flips and `Θ` is asymptotically
//! `χ²(1)`; otherwise `Θ` grows linearly in the number of draws.

use serde::{Deserialize, Serialize};

use crate::rng::{keyed_stream, normal_cdf, standard_normal};
use crate::transforms::Phi;
use crate::types::{StatisticFamily, WeightedPoint};

/// `G(0)` for standard normal `ξ`.
const G0: f64 = 0.5;

/// Key of one randomization stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub family: StatisticFamily,
    pub p: usize,
    pub replication: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationDraw {
    pub xi: Vec<f64>,
    pub stream: StreamId,
    pub seed_used: u64,
}

impl RandomizationDraw {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// `r` i.i.d. standard normals from the stream keyed by
/// `(master_seed, family, p, replication)`.
pub fn draw_xi(r: usize, stream: StreamId, master_seed: u64) -> RandomizationDraw {
    assert!(r >= 1, "at least one draw is required");
    let mut rng = keyed_stream(&[
        master_seed,
        stream.family.stream_tag(),
        stream.p as u64,
        stream.replication,
    ]);
    let xi = (0..r).map(|_| standard_normal(&mut rng)).collect();
    RandomizationDraw {
        xi,
        stream,
        seed_used: master_seed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaResult {
    pub theta: f64,
    pub r: usize,
    /// `(u, ϑ(u))` for every evaluation point.
    pub per_u: Vec<(f64, f64)>,
}

/// `Θ = Σ_u w(u) ϑ(u)²` with
/// `ϑ(u) = R^{-1/2} Σ_j (I[φ ξ_j <= u] - 1/2) / (1/2)`.
///
/// A saturated `φ` is treated as `+∞`, so the indicator reduces to the sign
/// of `ξ_j`.
pub fn theta_statistic(phi: Phi, xi: &[f64], u_points: &[WeightedPoint]) -> ThetaResult {
    assert!(!xi.is_empty());
    let r = xi.len();
    let sd = (G0 * (1.0 - G0)).sqrt();
    let phi_value = phi.value();
    let per_u: Vec<(f64, f64)> = u_points
        .iter()
        .map(|pt| {
            let hits = xi
                .iter()
                .filter(|&&x| {
                    if phi.saturated {
                        x < 0.0 || (x == 0.0 && pt.u >= 0.0)
                    } else {
                        phi_value * x <= pt.u
                    }
                })
                .count();
            let centered = hits as f64 - G0 * r as f64;
            (pt.u, centered / sd / (r as f64).sqrt())
        })
        .collect();
    let theta = u_points
        .iter()
        .zip(&per_u)
        .map(|(pt, &(_, v))| pt.weight * v * v)
        .sum();
    ThetaResult { theta, r, per_u }
}

/// Critical value `c` with `P(χ²(1) > c) = alpha`, as `z²` for the
/// two-sided normal quantile.
pub fn chi2_1_critical(alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha {alpha} outside (0, 1)");
    let z = crate::rng::inverse_normal_cdf(0.5 * alpha);
    z * z
}

/// True when `H0: the eigenvalue diverges` is rejected.
pub fn decide(theta: f64, alpha: f64) -> bool {
    theta > chi2_1_critical(alpha)
}

/// Limit of `Θ / R` when `φ` stays bounded at one:
/// `Σ_u w(u) (G(u) - G(0))² / (G(0)(1 - G(0)))`.
pub fn alternative_drift(u_points: &[WeightedPoint]) -> f64 {
    u_points
        .iter()
        .map(|pt| pt.weight * (normal_cdf(pt.u) - G0).powi(2) / (G0 * (1.0 - G0)))
        .sum()
}
