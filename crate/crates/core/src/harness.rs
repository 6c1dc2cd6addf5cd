//! Monte Carlo engine: scenarios, simulation tables and the weak-factor
//! experiment.
//!
//! Replication `j` of a scenario draws its panel and its randomization
//! streams from a seed derived from `(master_seed, label, j)` alone, so the
//! output does not depend on the number of worker threads or on which other
//! scenarios run alongside it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dgp::{simulate, DgpConfig, WeakLoading};
use crate::error::{Error, Result};
use crate::estimators::{nonstationary_count, total_count, trend_count};
use crate::rng::{combine, replication_seed};
use crate::spectra::PanelSpectra;
use crate::transforms::ScalingScheme;
use crate::types::TestConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `r̂1`.
    Trend,
    /// `r̂* - r1`, signed.
    NonStationary,
    /// `r̂`.
    Total,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Trend => "r1",
            Target::NonStationary => "r2",
            Target::Total => "r",
        }
    }

    fn truth(self, dgp: &DgpConfig) -> i64 {
        match self {
            Target::Trend => dgp.r1 as i64,
            Target::NonStationary => dgp.r2 as i64,
            Target::Total => (dgp.r1 + dgp.r2 + dgp.r3) as i64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    /// Template; its seed is replaced per replication.
    pub dgp: DgpConfig,
    /// Template; its seed fields are replaced per replication.
    pub test: TestConfig,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<ScalingScheme>,
    pub replications: usize,
    pub targets: Vec<Target>,
    #[serde(default)]
    pub master_seed: u64,
}

fn all_schemes() -> Vec<ScalingScheme> {
    ScalingScheme::ALL.to_vec()
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config(format!(
                "scenario {}: replications must be >= 1",
                self.label
            )));
        }
        if self.schemes.is_empty() || self.targets.is_empty() {
            return Err(Error::Config(format!(
                "scenario {}: schemes and targets must not be empty",
                self.label
            )));
        }
        self.dgp.validate()?;
        self.test.validate()
    }

    pub fn replication_seed(&self, j: usize) -> u64 {
        replication_seed(self.master_seed, &self.label, j as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub target: Target,
    pub scheme: ScalingScheme,
    pub truth: i64,
    pub mean: f64,
    /// Estimated value -> number of replications.
    pub histogram: BTreeMap<i64, usize>,
    /// Share of replications whose estimate differs from the truth.
    pub wrong_fraction: f64,
    /// Replications in which a sequential test hit its bound.
    pub max_reached: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub total_seconds: f64,
    pub mean_replication_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub label: String,
    pub replications: usize,
    pub summaries: Vec<EstimatorSummary>,
    /// Not part of any rendered table.
    pub wall_clock: WallClock,
}

impl ScenarioResult {
    pub fn summary(&self, target: Target, scheme: ScalingScheme) -> Option<&EstimatorSummary> {
        self.summaries
            .iter()
            .find(|s| s.target == target && s.scheme == scheme)
    }

    pub fn mean(&self, target: Target, scheme: ScalingScheme) -> Option<f64> {
        self.summary(target, scheme).map(|s| s.mean)
    }
}

struct ReplicationOutcome {
    /// `(estimate, max_reached)` in `targets x schemes` order.
    values: Vec<(i64, bool)>,
    seconds: f64,
}

fn run_replication(s: &Scenario, j: usize) -> Result<ReplicationOutcome> {
    let started = Instant::now();
    let seed = s.replication_seed(j);
    let dgp = DgpConfig {
        seed,
        ..s.dgp.clone()
    };
    let sim = simulate(&dgp)?;
    let spectra = PanelSpectra::compute(&sim.panel)?;
    let mut values = Vec::with_capacity(s.targets.len() * s.schemes.len());
    for &target in &s.targets {
        for &scheme in &s.schemes {
            let cfg = TestConfig {
                scheme,
                master_seed: combine(&[seed, 0x7465_7374]),
                replication: j as u64,
                ..s.test.clone()
            };
            values.push(match target {
                Target::Trend => (trend_count(&spectra, &cfg)?.r1_hat as i64, false),
                Target::NonStationary => {
                    let est = nonstationary_count(&spectra, &cfg)?;
                    (est.count as i64 - dgp.r1 as i64, est.max_reached)
                }
                Target::Total => {
                    let est = total_count(&spectra, &cfg)?;
                    (est.count as i64, est.max_reached)
                }
            });
        }
    }
    Ok(ReplicationOutcome {
        values,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn thread_pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs every replication of `s` on `parallelism` threads. The first failing
/// replication (by index) aborts the scenario and is reported with its seed.
pub fn run_scenario(s: &Scenario, parallelism: usize) -> Result<ScenarioResult> {
    s.validate()?;
    let started = Instant::now();
    let outcomes: Vec<Result<ReplicationOutcome>> = thread_pool(parallelism)?.install(|| {
        (0..s.replications)
            .into_par_iter()
            .map(|j| run_replication(s, j))
            .collect()
    });

    let slots = s.targets.len() * s.schemes.len();
    let mut sums = vec![0i64; slots];
    let mut histograms = vec![BTreeMap::<i64, usize>::new(); slots];
    let mut wrong = vec![0usize; slots];
    let mut max_reached = vec![0usize; slots];
    let mut replication_seconds = 0.0;
    for (j, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome.map_err(|source| Error::Replication {
            replication: j,
            seed: s.replication_seed(j),
            source: Box::new(source),
        })?;
        replication_seconds += outcome.seconds;
        for (k, (value, hit_bound)) in outcome.values.into_iter().enumerate() {
            let truth = s.targets[k / s.schemes.len()].truth(&s.dgp);
            sums[k] += value;
            *histograms[k].entry(value).or_default() += 1;
            wrong[k] += usize::from(value != truth);
            max_reached[k] += usize::from(hit_bound);
        }
    }

    let reps = s.replications as f64;
    let mut summaries = Vec::with_capacity(slots);
    for (k, histogram) in histograms.into_iter().enumerate() {
        let target = s.targets[k / s.schemes.len()];
        summaries.push(EstimatorSummary {
            target,
            scheme: s.schemes[k % s.schemes.len()],
            truth: target.truth(&s.dgp),
            mean: sums[k] as f64 / reps,
            histogram,
            wrong_fraction: wrong[k] as f64 / reps,
            max_reached: max_reached[k],
        });
    }
    Ok(ScenarioResult {
        label: s.label.clone(),
        replications: s.replications,
        summaries,
        wall_clock: WallClock {
            total_seconds: started.elapsed().as_secs_f64(),
            mean_replication_seconds: replication_seconds / reps,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellSpec {
    pub r1: usize,
    pub r2: usize,
    pub r3: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub title: String,
    pub target: Target,
    pub cells: Vec<CellSpec>,
    /// `(N, T)` pairs.
    pub sizes: Vec<(usize, usize)>,
    pub rho_bar: f64,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<ScalingScheme>,
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Renders an information-criterion column, always `n/a`.
    #[serde(default)]
    pub ic_column: bool,
    #[serde(default)]
    pub test: TestConfig,
    /// Template for the remaining DGP parameters.
    #[serde(default)]
    pub dgp: DgpConfig,
}

/// The `(N, T)` grid of the simulation tables.
pub const PRESET_SIZES: [(usize, usize); 6] = [
    (50, 100),
    (100, 100),
    (200, 100),
    (100, 200),
    (200, 200),
    (200, 500),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetTable {
    /// `r̂1` over `r1 ∈ {0,1}`, `r2 ∈ {0,1,2}`, `r3 = 0`.
    Trend,
    /// `r̂2` over `r2, r3 ∈ {0,1,2}` with no trend factor.
    NoTrend,
    /// `r̂2` over `r2, r3 ∈ {0,1,2}` with one trend factor.
    WithTrend,
}

impl TableSpec {
    pub fn preset(
        table: PresetTable,
        rho_bar: f64,
        replications: usize,
        sizes: &[(usize, usize)],
    ) -> Self {
        let (title, target, cells, ic_column) = match table {
            PresetTable::Trend => (
                "trend factors",
                Target::Trend,
                (0..=1)
                    .flat_map(|r1| (0..=2).map(move |r2| CellSpec { r1, r2, r3: 0 }))
                    .collect(),
                false,
            ),
            PresetTable::NoTrend | PresetTable::WithTrend => {
                let r1 = usize::from(table == PresetTable::WithTrend);
                (
                    if r1 == 0 {
                        "zero-mean I(1) factors, no trend"
                    } else {
                        "zero-mean I(1) factors, one trend"
                    },
                    Target::NonStationary,
                    (0..=2)
                        .flat_map(|r2| (0..=2).map(move |r3| CellSpec { r1, r2, r3 }))
                        .collect(),
                    true,
                )
            }
        };
        Self {
            title: title.to_string(),
            target,
            cells,
            sizes: sizes.to_vec(),
            rho_bar,
            schemes: all_schemes(),
            replications,
            master_seed: 0,
            ic_column,
            test: TestConfig::default(),
            dgp: DgpConfig::default(),
        }
    }

    pub fn scenario(&self, cell: CellSpec, n: usize, t: usize) -> Scenario {
        Scenario {
            label: format!(
                "{}|r{}{}{}|N{n}|T{t}|rho{}",
                self.title, cell.r1, cell.r2, cell.r3, self.rho_bar
            ),
            dgp: DgpConfig {
                n,
                t,
                r1: cell.r1,
                r2: cell.r2,
                r3: cell.r3,
                rho_bar: self.rho_bar,
                ..self.dgp.clone()
            },
            test: self.test.clone(),
            schemes: self.schemes.clone(),
            replications: self.replications,
            targets: vec![self.target],
            master_seed: self.master_seed,
        }
    }
}

/// Variations of the randomization design used in the robustness tables.
pub fn robustness_variants() -> Vec<(String, TestConfig)> {
    let mut out = Vec::new();
    for u in [std::f64::consts::SQRT_2, 5.0] {
        for delta_star in [1e-5, 1e-1] {
            out.push((
                format!("u={u:.4},delta*={delta_star:e}"),
                TestConfig {
                    u_points: crate::types::symmetric_points(u),
                    delta_star,
                    ..TestConfig::default()
                },
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub cell: CellSpec,
    pub n: usize,
    pub t: usize,
    pub result: ScenarioResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub spec: TableSpec,
    pub cells: Vec<TableCell>,
}

/// Runs one scenario per `(cell, size)` pair, sizes outermost.
pub fn run_table(spec: &TableSpec, parallelism: usize) -> Result<Table> {
    let mut cells = Vec::with_capacity(spec.cells.len() * spec.sizes.len());
    for &(n, t) in &spec.sizes {
        for &cell in &spec.cells {
            let result = run_scenario(&spec.scenario(cell, n, t), parallelism)?;
            cells.push(TableCell { cell, n, t, result });
        }
    }
    Ok(Table {
        spec: spec.clone(),
        cells,
    })
}

impl Table {
    pub fn mean(&self, cell: CellSpec, n: usize, t: usize, scheme: ScalingScheme) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.cell == cell && c.n == n && c.t == t)
            .and_then(|c| c.result.mean(self.spec.target, scheme))
    }

    /// One row per cell; timing is excluded so the bytes depend only on the
    /// seeds.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("table,target,r1,r2,r3,n,t,rho_bar,replications");
        for s in &self.spec.schemes {
            let _ = write!(out, ",mean_{}", s.name());
        }
        if self.spec.ic_column {
            out.push_str(",mean_IC");
        }
        for s in &self.spec.schemes {
            let _ = write!(out, ",wrong_{}", s.name());
        }
        out.push('\n');
        for c in &self.cells {
            let _ = write!(
                out,
                "\"{}\",{},{},{},{},{},{},{},{}",
                self.spec.title.replace('"', "\"\""),
                self.spec.target.name(),
                c.cell.r1,
                c.cell.r2,
                c.cell.r3,
                c.n,
                c.t,
                self.spec.rho_bar,
                self.spec.replications
            );
            for &s in &self.spec.schemes {
                let mean = c.result.mean(self.spec.target, s).unwrap_or(f64::NAN);
                let _ = write!(out, ",{mean}");
            }
            if self.spec.ic_column {
                out.push_str(",n/a");
            }
            for &s in &self.spec.schemes {
                let wrong = c
                    .result
                    .summary(self.spec.target, s)
                    .map_or(f64::NAN, |x| x.wrong_fraction);
                let _ = write!(out, ",{wrong}");
            }
            out.push('\n');
        }
        out
    }

    /// Aligned text with one block per `(N, T)` pair, two-decimal means.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} (mean of {}, rho_bar = {}, {} replications)\n",
            self.spec.title,
            self.spec.target.name(),
            self.spec.rho_bar,
            self.spec.replications
        );
        let mut columns: Vec<String> = self.spec.schemes.iter().map(|s| s.name().to_string()).collect();
        if self.spec.ic_column {
            columns.push("IC".to_string());
        }
        for &(n, t) in &self.spec.sizes {
            let _ = writeln!(out, "\nN = {n}, T = {t}");
            let _ = write!(out, "{:>4}{:>4}{:>4}", "r1", "r2", "r3");
            for name in &columns {
                let _ = write!(out, "{name:>8}");
            }
            out.push('\n');
            for c in self.cells.iter().filter(|c| c.n == n && c.t == t) {
                let _ = write!(out, "{:>4}{:>4}{:>4}", c.cell.r1, c.cell.r2, c.cell.r3);
                for &s in &self.spec.schemes {
                    let mean = c.result.mean(self.spec.target, s).unwrap_or(f64::NAN);
                    let _ = write!(out, "{mean:>8.2}");
                }
                if self.spec.ic_column {
                    let _ = write!(out, "{:>8}", "n/a");
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeakFactorSpec {
    pub kappas: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub t: usize,
    pub replications: usize,
    pub scheme: ScalingScheme,
    pub master_seed: u64,
    /// Strong zero-mean I(1) factors simulated alongside the weak one.
    pub strong_factors: usize,
    pub test: TestConfig,
}

impl Default for WeakFactorSpec {
    fn default() -> Self {
        Self {
            kappas: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            n_grid: vec![200],
            t: 200,
            replications: 100,
            scheme: ScalingScheme::Bt1,
            master_seed: 0,
            strong_factors: 1,
            test: TestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakFactorPoint {
    pub kappa: f64,
    pub n: usize,
    pub t: usize,
    pub detection_rate: f64,
}

/// Zero-mean I(1) factors only: `strong_factors` with loading energy `N`
/// followed by one with `N^{1-κ}`. The weak factor counts as detected when
/// `r̂*` exceeds the number of strong factors.
pub fn run_weak_factor_experiment(
    spec: &WeakFactorSpec,
    parallelism: usize,
) -> Result<Vec<WeakFactorPoint>> {
    let mut out = Vec::with_capacity(spec.kappas.len() * spec.n_grid.len());
    for &n in &spec.n_grid {
        for &kappa in &spec.kappas {
            let scenario = Scenario {
                label: format!("weak|N{n}|T{}|kappa{kappa}", spec.t),
                dgp: DgpConfig {
                    n,
                    t: spec.t,
                    r2: spec.strong_factors + 1,
                    weak: Some(WeakLoading {
                        factor: spec.strong_factors,
                        kappa,
                    }),
                    ..DgpConfig::default()
                },
                test: spec.test.clone(),
                schemes: vec![spec.scheme],
                replications: spec.replications,
                targets: vec![Target::NonStationary],
                master_seed: spec.master_seed,
            };
            let result = run_scenario(&scenario, parallelism)?;
            let summary = &result.summaries[0];
            let needed = spec.strong_factors as i64 + 1;
            let detected: usize = summary.histogram.range(needed..).map(|(_, &c)| c).sum();
            out.push(WeakFactorPoint {
                kappa,
                n,
                t: spec.t,
                detection_rate: detected as f64 / spec.replications as f64,
            });
        }
    }
    Ok(out)
}
