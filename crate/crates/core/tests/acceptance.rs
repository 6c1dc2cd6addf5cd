//! Acceptance suite. Each test covers one criterion and writes a single
//! `PASS`/`FAIL` line to stdout (uncaptured) before asserting.
//!
//! ```text
//! cargo test -p factordim --test acceptance -- --test-threads=1
//! ```

mod common;

use std::io::Write;
use std::path::PathBuf;

use common::{oracle_eigenvalues, random_matrix, random_symmetric, rng};
use factordim::dgp::{simulate, DgpConfig};
use factordim::empirical::{self, CsvLayout};
use factordim::harness::{
    run_table, run_weak_factor_experiment, CellSpec, PresetTable, TableSpec, WeakFactorSpec,
};
use factordim::linalg::symmetric_eigenvalues;
use factordim::randtest::{draw_xi, theta_statistic, StreamId};
use factordim::transforms::Phi;
use factordim::types::symmetric_points;
use factordim::{estimate_all_schemes, ScalingScheme, StatisticFamily, TestConfig};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

const MEAN_TOL_TABLE1: f64 = 0.03;
const MEAN_TOL_TABLE2: f64 = 0.05;
const HARD_CELL_TARGET: f64 = 1.54;
const HARD_CELL_TOL: f64 = 0.15;
const KS_LIMIT: f64 = 0.04;
const DRIFT_TOL: f64 = 0.02;
const EIGEN_ABS_TOL: f64 = 1e-9;
const GRAM_REL_TOL: f64 = 1e-9;
const WEAK_STRONG_MIN: f64 = 0.9;
const WEAK_WEAK_MAX: f64 = 0.2;

const REPLICATIONS: usize = 200;
const MASTER_SEED: u64 = 20_260_101;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {id:>2} [{verdict}] {name}: {detail}\n");
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get())
}

fn table_cells(spec: &mut TableSpec, keep: &[(usize, usize, usize)]) {
    spec.cells = keep
        .iter()
        .map(|&(r1, r2, r3)| CellSpec { r1, r2, r3 })
        .collect();
}

#[test]
fn c01_trend_table_cells() {
    let mut spec = TableSpec::preset(PresetTable::Trend, 0.4, REPLICATIONS, &[(100, 200)]);
    spec.schemes = vec![ScalingScheme::Bt1, ScalingScheme::Bt2];
    spec.master_seed = MASTER_SEED;
    let cells = [((0, 0, 0), 0.0), ((1, 0, 0), 1.0), ((1, 1, 0), 1.0), ((1, 2, 0), 1.0)];
    table_cells(&mut spec, &cells.map(|c| c.0));
    let table = run_table(&spec, jobs()).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for ((r1, r2, r3), want) in cells {
        for scheme in [ScalingScheme::Bt1, ScalingScheme::Bt2] {
            let got = table.mean(CellSpec { r1, r2, r3 }, 100, 200, scheme).unwrap();
            pass &= (got - want).abs() <= MEAN_TOL_TABLE1;
            detail.push(format!("({r1},{r2}) {scheme}={got:.3}"));
        }
    }
    report(1, "mean r1_hat at N=100,T=200 within 0.03", pass, &detail.join(" "));
    assert!(pass);
}

#[test]
fn c02_no_trend_table_cells() {
    let mut spec = TableSpec::preset(PresetTable::NoTrend, 0.4, REPLICATIONS, &[(100, 200)]);
    spec.schemes = vec![ScalingScheme::Bt1];
    spec.master_seed = MASTER_SEED;
    let cells = [((0, 0, 0), 0.0), ((0, 1, 0), 1.0), ((0, 1, 1), 1.0), ((0, 2, 0), 2.0)];
    table_cells(&mut spec, &cells.map(|c| c.0));
    let table = run_table(&spec, jobs()).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for ((r1, r2, r3), want) in cells {
        let got = table
            .mean(CellSpec { r1, r2, r3 }, 100, 200, ScalingScheme::Bt1)
            .unwrap();
        pass &= (got - want).abs() <= MEAN_TOL_TABLE2;
        detail.push(format!("({r2},{r3})={got:.3}"));
    }
    report(2, "mean r2_hat at N=100,T=200, BT1, within 0.05", pass, &detail.join(" "));
    assert!(pass);
}

#[test]
fn c03_hard_cell() {
    let mut spec = TableSpec::preset(PresetTable::WithTrend, 0.4, REPLICATIONS, &[(200, 100)]);
    spec.schemes = vec![ScalingScheme::Bt1];
    spec.master_seed = MASTER_SEED;
    table_cells(&mut spec, &[(1, 2, 2)]);
    let table = run_table(&spec, jobs()).unwrap();
    let got = table
        .mean(CellSpec { r1: 1, r2: 2, r3: 2 }, 200, 100, ScalingScheme::Bt1)
        .unwrap();
    let pass = (got - HARD_CELL_TARGET).abs() <= HARD_CELL_TOL;
    report(
        3,
        "mean r2_hat for (1,2,2) at N=200,T=100, BT1, within 0.15 of 1.54",
        pass,
        &format!("{got:.3}"),
    );
    assert!(pass);
}

fn theta_draws(phi: Phi, r: usize, draws: usize, family: StatisticFamily) -> Vec<f64> {
    let u = symmetric_points(std::f64::consts::SQRT_2);
    (0..draws as u64)
        .map(|j| {
            let stream = StreamId {
                family,
                p: 1,
                replication: j,
            };
            let xi = draw_xi(r, stream, MASTER_SEED).xi;
            theta_statistic(phi, &xi, &u).theta
        })
        .collect()
}

/// Two-sided KS distance of a sample to a continuous CDF, including the
/// left limits at ties.
fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sample.len() {
        let x = sample[i];
        let mut j = i;
        while j < sample.len() && sample[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    d
}

#[test]
fn c04_null_distribution_of_theta() {
    let mut sample = theta_draws(Phi::saturated(), 200, 2000, StatisticFamily::Trend);
    let chi2 = ChiSquared::new(1.0).unwrap();
    let zero_mass = sample.iter().filter(|&&v| v == 0.0).count() as f64 / sample.len() as f64;
    let ks = ks_distance(&mut sample, |x| chi2.cdf(x));
    let pass = ks < KS_LIMIT;
    report(
        4,
        "KS distance of saturated-phi Theta (R=200, 2000 draws) to chi2(1) below 0.04",
        pass,
        &format!("KS={ks:.4}, empirical P(Theta=0)={zero_mass:.4}"),
    );
    assert!(pass, "KS = {ks}");
}

#[test]
fn c05_alternative_drift() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let drift = (normal.cdf(std::f64::consts::SQRT_2) - 0.5).powi(2) / 0.25;
    assert!((drift - 0.71014).abs() < 1e-5);
    let r = 500;
    let sample = theta_draws(Phi::from_value(1.0), r, 2000, StatisticFamily::Stochastic);
    let mean = sample.iter().map(|t| t / r as f64).sum::<f64>() / sample.len() as f64;
    let pass = (mean - 0.71014).abs() <= DRIFT_TOL;
    report(
        5,
        "mean Theta/R at phi=1, R=500, within 0.02 of 0.71014",
        pass,
        &format!("mean={mean:.5}, oracle drift={drift:.6}"),
    );
    assert!(pass);
}

#[test]
fn c06_eigensolver_oracle() {
    let mut r = rng(MASTER_SEED);
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let n = 2 + trial % 7;
        let a = random_symmetric(&mut r, n);
        let got = symmetric_eigenvalues(&a).unwrap();
        let want = oracle_eigenvalues(&a);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    let mut worst_gram = 0.0f64;
    for trial in 0..100 {
        let (rows, cols) = (2 + trial % 30, 5 + (trial * 7) % 60);
        let x = random_matrix(&mut r, rows, cols);
        let a = symmetric_eigenvalues(&(&x * x.transpose())).unwrap();
        let b = symmetric_eigenvalues(&(x.transpose() * &x)).unwrap();
        let scale = a[0].max(b[0]);
        let k = rows.min(cols);
        for h in 0..k {
            worst_gram = worst_gram.max((a[h] - b[h]).abs() / scale);
        }
    }
    let pass = worst < EIGEN_ABS_TOL && worst_gram < GRAM_REL_TOL;
    report(
        6,
        "eigenvalues vs characteristic-polynomial roots (1e-9 abs), Gram duality (1e-9 rel)",
        pass,
        &format!("max abs err={worst:.2e}, max gram rel err={worst_gram:.2e}"),
    );
    assert!(pass);
}

#[test]
fn c07_scale_invariance() {
    let mut r = rng(MASTER_SEED ^ 7);
    let mut mismatches = 0;
    let schemes = ScalingScheme::ALL;
    for k in 0..50u64 {
        use rand::Rng;
        let dgp = DgpConfig {
            n: r.random_range(20..=80),
            t: r.random_range(40..=120),
            r1: r.random_range(0..=1),
            r2: r.random_range(0..=2),
            r3: r.random_range(0..=2),
            seed: MASTER_SEED + k,
            ..DgpConfig::default()
        };
        let panel = simulate(&dgp).unwrap().panel;
        let cfg = TestConfig {
            master_seed: k,
            ..TestConfig::default()
        };
        let decisions = |s: f64| -> Vec<Vec<bool>> {
            estimate_all_schemes(&panel.scaled(s).unwrap(), &cfg, &schemes)
                .unwrap()
                .iter()
                .map(|rep| rep.steps.iter().map(|st| st.rejected).collect())
                .collect()
        };
        let base = decisions(1.0);
        for s in [1e-3, 1e3] {
            if decisions(s) != base {
                mismatches += 1;
            }
        }
    }
    let pass = mismatches == 0;
    report(
        7,
        "test decisions identical under scaling by 1e-3, 1, 1e3 on 50 panels",
        pass,
        &format!("{mismatches} mismatching (panel, scale) pairs"),
    );
    assert!(pass);
}

#[test]
fn c08_parallel_determinism() {
    let mut spec = TableSpec::preset(PresetTable::WithTrend, 0.4, 24, &[(50, 100), (100, 200)]);
    spec.master_seed = MASTER_SEED;
    let one = run_table(&spec, 1).unwrap();
    let eight = run_table(&spec, 8).unwrap();
    let again = run_table(&spec, 8).unwrap();
    let csv = one.to_csv();
    let text = one.to_text();
    let pass = csv == eight.to_csv()
        && csv == again.to_csv()
        && text == eight.to_text()
        && text == again.to_text();
    report(
        8,
        "table bytes identical for 1 vs 8 workers and across runs",
        pass,
        &format!("{} CSV bytes, {} cells", csv.len(), one.cells.len()),
    );
    assert!(pass);
}

#[test]
fn c09_weak_factor_boundary() {
    let spec = WeakFactorSpec {
        kappas: vec![0.0, 0.2, 0.4, 0.6, 0.8],
        n_grid: vec![200],
        t: 200,
        replications: REPLICATIONS,
        scheme: ScalingScheme::Bt1,
        master_seed: MASTER_SEED,
        strong_factors: 1,
        test: TestConfig::default(),
    };
    let points = run_weak_factor_experiment(&spec, jobs()).unwrap();
    let rate = |kappa: f64| {
        points
            .iter()
            .find(|p| p.kappa == kappa)
            .map(|p| p.detection_rate)
            .unwrap()
    };
    let monotone = points
        .windows(2)
        .all(|w| w[1].detection_rate <= w[0].detection_rate + 0.05);
    let pass = rate(0.2) >= WEAK_STRONG_MIN && rate(0.8) <= WEAK_WEAK_MAX && monotone;
    let curve: Vec<String> = points
        .iter()
        .map(|p| format!("k={}:{:.3}", p.kappa, p.detection_rate))
        .collect();
    report(
        9,
        "weak I(1) factor detection at N=T=200: >=0.9 at 0.2, <=0.2 at 0.8, decreasing",
        pass,
        &curve.join(" "),
    );
    assert!(pass);
}

fn fixture_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("FACTORDIM_HQM_FIXTURE") {
        return Some(PathBuf::from(p));
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/hqm.csv");
    p.exists().then_some(p)
}

#[test]
fn c10_empirical_fixture() {
    let Some(path) = fixture_path() else {
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(
            b"criterion 10 [SKIP] yield-curve fixture not present (set FACTORDIM_HQM_FIXTURE)\n",
        );
        return;
    };
    let panel = empirical::load_panel_csv(&path, &CsvLayout::default()).unwrap();
    let report_ = empirical::analyze(
        &panel,
        &TestConfig::default(),
        &[],
        &empirical::AnalysisOptions::default(),
    )
    .unwrap();
    let bt3 = report_.dimension(ScalingScheme::Bt3).unwrap();
    let counts = (bt3.r1_hat, bt3.r_star_hat, bt3.r2_hat, bt3.r_total_hat, bt3.r3_hat);
    let level = report_.correlation("level", 1).unwrap_or(0.0);
    let pass = counts == (1, 5, 4, 5, 0) && level.abs() > 0.99;
    report(
        10,
        "fixture BT3 counts (1,5,4,5,0) and |Corr(level, F1)| > 0.99",
        pass,
        &format!("counts={counts:?}, corr={level:.4}"),
    );
    assert!(pass);
}
