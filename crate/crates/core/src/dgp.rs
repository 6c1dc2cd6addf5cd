//! Simulated panels with known factor structure.
//!
//! `X_{i,t} = λ1_i f1_t + λ2_i' f2_t + λ3_i' f3_t + √θ u_{i,t}` where `f1` is
//! a random walk with unit drift, `f2` are driftless random walks with AR(1)
//! increments, `f3` are stationary AR(1) factors and `u` is serially and
//! cross-sectionally correlated noise. Loadings satisfy `Λ'Λ = N I_r`; the
//! factor blocks are rescaled so their first differences carry equal
//! average weight, and `θ` fixes the differenced noise-to-signal ratio.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::keyed_stream;
use crate::types::{FactorCounts, Panel};

/// Scales one loading column so its squared norm is `N^{1-κ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakLoading {
    /// Zero-based factor column (trend first, then I(1), then stationary).
    pub factor: usize,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpConfig {
    pub n: usize,
    pub t: usize,
    pub r1: usize,
    pub r2: usize,
    pub r3: usize,
    /// Upper bound of the AR coefficients `ρ_j ~ U[0, ρ̄]` of the I(1) increments.
    pub rho_bar: f64,
    /// Support of the stationary AR coefficients.
    pub alpha_range: [f64; 2],
    /// Idiosyncratic AR coefficient.
    pub a: f64,
    /// Cross-sectional MA coefficient.
    pub b: f64,
    pub noise_to_signal_target: f64,
    /// Periods discarded from the stationary recursions.
    pub burn_in: usize,
    pub seed: u64,
    /// Applied after `θ` is calibrated, so the noise level is that of the
    /// strong-factor design.
    pub weak: Option<WeakLoading>,
    /// Test hook: every innovation is zero, leaving only the drift.
    pub zero_innovations: bool,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            n: 100,
            t: 200,
            r1: 0,
            r2: 0,
            r3: 0,
            rho_bar: 0.4,
            alpha_range: [-0.5, 0.5],
            a: 0.5,
            b: 0.5,
            noise_to_signal_target: 0.5,
            burn_in: 50,
            seed: 0,
            weak: None,
            zero_innovations: false,
        }
    }
}

impl DgpConfig {
    pub fn counts(&self) -> Result<FactorCounts> {
        FactorCounts::new(self.r1, self.r2, self.r3)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = self.counts()?;
        if self.n < 1 || self.t < 2 {
            return Err(Error::Config(format!(
                "need N >= 1 and T >= 2, got N = {}, T = {}",
                self.n, self.t
            )));
        }
        let r = counts.r_total();
        let bound = self.n.min(self.t);
        if r > bound {
            return Err(Error::Dimension { r, bound });
        }
        if !(self.a.abs() < 1.0) {
            return Err(Error::Config(format!("|a| must be < 1, got {}", self.a)));
        }
        if !(0.0..1.0).contains(&self.rho_bar) {
            return Err(Error::Config(format!(
                "rho_bar must lie in [0, 1), got {}",
                self.rho_bar
            )));
        }
        let [lo, hi] = self.alpha_range;
        if !(lo > -1.0 && hi < 1.0 && lo <= hi) {
            return Err(Error::Config(format!(
                "alpha_range must be an interval inside (-1, 1), got [{lo}, {hi}]"
            )));
        }
        if !(self.noise_to_signal_target >= 0.0 && self.b.is_finite()) {
            return Err(Error::Config("noise_to_signal_target must be >= 0".into()));
        }
        if let Some(w) = self.weak {
            if w.factor >= r {
                return Err(Error::Config(format!(
                    "weak factor column {} out of range for r = {r}",
                    w.factor
                )));
            }
            if !(0.0..1.0).contains(&w.kappa) {
                return Err(Error::Config(format!(
                    "kappa must lie in [0, 1), got {}",
                    w.kappa
                )));
            }
        }
        Ok(())
    }

    /// Cross-sectional MA bandwidth `min(floor(N/20), 10)`.
    pub fn bandwidth(&self) -> usize {
        (self.n / 20).min(10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPanel {
    pub panel: Panel,
    pub truth: FactorCounts,
    /// `N x r`, columns ordered trend, I(1), stationary.
    pub loadings: DMatrix<f64>,
    /// `r x T`.
    pub factors: DMatrix<f64>,
    /// Unscaled idiosyncratic component `u`, `N x T`.
    pub noise: DMatrix<f64>,
    pub realized_theta: f64,
    /// Innovation variance of each factor after calibration.
    pub gamma_diag: Vec<f64>,
}

/// Sum of squared first differences of `M` over the observed sample.
pub fn differenced_energy(m: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 1..m.ncols() {
        for i in 0..m.nrows() {
            let d = m[(i, j)] - m[(i, j - 1)];
            acc += d * d;
        }
    }
    acc
}

fn normal(rng: &mut ChaCha8Rng, zero: bool) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    if zero {
        0.0
    } else {
        z
    }
}

/// Gaussian `N x r` draw with orthonormal columns scaled by `√N`.
fn draw_loadings(n: usize, r: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut q = DMatrix::from_fn(n, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    // Two passes of modified Gram-Schmidt.
    for _ in 0..2 {
        for j in 0..r {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let ck = q.column(k).clone_owned();
                let mut cj = q.column_mut(j);
                cj.axpy(-proj, &ck, 1.0);
            }
            let norm = q.column(j).norm();
            q.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    q * (n as f64).sqrt()
}

pub fn simulate(cfg: &DgpConfig) -> Result<SimulatedPanel> {
    cfg.validate()?;
    let truth = cfg.counts()?;
    let (n, t) = (cfg.n, cfg.t);
    let r = truth.r_total();
    let zero = cfg.zero_innovations;
    let mut rng = keyed_stream(&[cfg.seed, 0x0064_6770]);

    let mut loadings = draw_loadings(n, r, &mut rng);
    let rhos: Vec<f64> = (0..cfg.r2)
        .map(|_| cfg.rho_bar * rng.random::<f64>())
        .collect();
    let [lo, hi] = cfg.alpha_range;
    let alphas: Vec<f64> = (0..cfg.r3)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect();

    let mut factors = DMatrix::zeros(r, t);
    let mut row = 0;
    if cfg.r1 == 1 {
        let mut f = 0.0;
        for s in 0..t {
            f += 1.0 + normal(&mut rng, zero);
            factors[(row, s)] = f;
        }
        row += 1;
    }
    for &rho in &rhos {
        let mut e = 0.0;
        for _ in 0..cfg.burn_in {
            e = rho * e + normal(&mut rng, zero);
        }
        let mut f = 0.0;
        for s in 0..t {
            e = rho * e + normal(&mut rng, zero);
            f += e;
            factors[(row, s)] = f;
        }
        row += 1;
    }
    for &alpha in &alphas {
        let mut f = 0.0;
        for _ in 0..cfg.burn_in {
            f = alpha * f + normal(&mut rng, zero);
        }
        for s in 0..t {
            f = alpha * f + normal(&mut rng, zero);
            factors[(row, s)] = f;
        }
        row += 1;
    }

    // Equal-weight calibration of the factor blocks.
    let blocks = [(0, cfg.r1), (cfg.r1, cfg.r2), (cfg.r1 + cfg.r2, cfg.r3)];
    let block_weight = |factors: &DMatrix<f64>, start: usize, len: usize| {
        let common = loadings.columns(start, len) * factors.rows(start, len);
        differenced_energy(&common) / (n * (t - 1)) as f64
    };
    let mut gamma_diag = vec![if zero { 0.0 } else { 1.0 }; r];
    let reference = blocks
        .iter()
        .find(|(_, len)| *len > 0)
        .map(|&(start, len)| block_weight(&factors, start, len));
    if let Some(w_ref) = reference {
        for &(start, len) in blocks.iter().skip(1) {
            if len == 0 || start == 0 {
                continue;
            }
            let w = block_weight(&factors, start, len);
            if w > 0.0 && w_ref > 0.0 {
                let s = (w_ref / w).sqrt();
                factors.rows_mut(start, len).scale_mut(s);
                for g in &mut gamma_diag[start..start + len] {
                    *g *= s * s;
                }
            }
        }
    }

    // Idiosyncratic component.
    let c = cfg.bandwidth();
    let mut noise = DMatrix::zeros(n, t);
    let mut u_prev = vec![0.0; n];
    let mut v = vec![0.0; n];
    for s in 0..(cfg.burn_in + t) {
        for vi in v.iter_mut() {
            *vi = normal(&mut rng, zero);
        }
        for i in 0..n {
            let lo = i.saturating_sub(c);
            let hi = (i + c).min(n - 1);
            let neighbours: f64 = (lo..=hi).filter(|&k| k != i).map(|k| v[k]).sum();
            u_prev[i] = cfg.a * u_prev[i] + v[i] + cfg.b * neighbours;
        }
        if s >= cfg.burn_in {
            noise.column_mut(s - cfg.burn_in).copy_from_slice(&u_prev);
        }
    }

    let common = &loadings * &factors;
    let realized_theta = if r == 0 {
        1.0
    } else {
        let noise_energy = differenced_energy(&noise);
        if noise_energy > 0.0 {
            cfg.noise_to_signal_target * differenced_energy(&common) / noise_energy
        } else {
            0.0
        }
    };

    let common = match cfg.weak {
        Some(w) => {
            let s = (n as f64).powf(-0.5 * w.kappa);
            loadings.column_mut(w.factor).scale_mut(s);
            &loadings * &factors
        }
        None => common,
    };
    let values = common + &noise * realized_theta.sqrt();

    Ok(SimulatedPanel {
        panel: Panel::new(values)?,
        truth,
        loadings,
        factors,
        noise,
        realized_theta,
        gamma_diag,
    })
}
