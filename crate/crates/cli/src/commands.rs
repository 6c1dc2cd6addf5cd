use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use factordim::dgp::{simulate, DgpConfig};
use factordim::empirical::{
    analyze, load_panel_csv, load_series_csv, save_panel_csv, write_report, AnalysisOptions,
    CsvLayout, Orientation,
};
use factordim::harness::{
    run_scenario, run_table, run_weak_factor_experiment, PresetTable, Scenario, TableSpec,
    WeakFactorSpec, PRESET_SIZES,
};
use factordim::{estimate_all, Error, FactorCounts, ScalingScheme, TestConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Cli, Command, LayoutArgs, SEED_ENV};

pub const EXIT_INVALID: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_MAX_REACHED: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = if is_io(&error) { EXIT_IO } else { EXIT_INVALID };
        Failure { code, error }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        anyhow::Error::new(error).into()
    }
}

fn is_io(error: &anyhow::Error) -> bool {
    error.chain().any(|cause| {
        if let Some(e) = cause.downcast_ref::<Error>() {
            e.is_io()
        } else if let Some(e) = cause.downcast_ref::<serde_json::Error>() {
            e.is_io()
        } else {
            cause.is::<std::io::Error>()
        }
    })
}

type Outcome = std::result::Result<ExitCode, Failure>;

struct Session {
    seed: Option<u64>,
    quiet: bool,
    json: bool,
}

impl Session {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> anyhow::Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(None),
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let ctx = Session {
        seed: resolve_seed(cli.seed)?,
        quiet: cli.quiet,
        json: cli.json,
    };
    match &cli.command {
        Command::Simulate { config, output } => cmd_simulate(&ctx, config, output),
        Command::Test {
            panel,
            config,
            scheme,
            layout,
        } => cmd_test(&ctx, panel, config.as_deref(), scheme.as_deref(), layout),
        Command::Montecarlo {
            scenario,
            output,
            jobs,
        } => cmd_montecarlo(&ctx, scenario, output, *jobs),
        Command::Analyze {
            panel,
            output,
            config,
            options,
            external,
            factors,
            no_proxies,
            max_lag,
            layout,
        } => {
            let mut opts: AnalysisOptions = match options {
                Some(p) => read_json(p)?,
                None => AnalysisOptions::default(),
            };
            if factors.is_some() {
                opts.factor_count = *factors;
            }
            if *no_proxies {
                opts.compute_proxies = false;
            }
            if let Some(lag) = max_lag {
                opts.max_lag = *lag;
            }
            cmd_analyze(
                &ctx,
                panel,
                output,
                config.as_deref(),
                &opts,
                external,
                layout,
            )
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

impl LayoutArgs {
    fn layout(&self) -> anyhow::Result<CsvLayout> {
        let delimiter = u8::try_from(self.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .with_context(|| {
                format!(
                    "delimiter {:?} is not a single ASCII character",
                    self.delimiter
                )
            })?;
        Ok(CsvLayout {
            orientation: if self.series_in_rows {
                Orientation::SeriesInRows
            } else {
                Orientation::TimeInRows
            },
            header: !self.no_header,
            label_column: !self.no_label_column,
            delimiter,
        })
    }
}

fn load_test_config(ctx: &Session, path: Option<&Path>) -> anyhow::Result<TestConfig> {
    let mut cfg: TestConfig = match path {
        Some(p) => read_json(p)?,
        None => TestConfig::default(),
    };
    if let Some(seed) = ctx.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Truth<'a> {
    config: &'a DgpConfig,
    truth: FactorCounts,
    realized_theta: f64,
    gamma_diag: &'a [f64],
}

fn cmd_simulate(ctx: &Session, config: &Path, output: &Path) -> Outcome {
    let mut cfg: DgpConfig = read_json(config)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    let sim = simulate(&cfg).context("simulation failed")?;
    create_dir(output)?;
    let panel_path = output.join("panel.csv");
    save_panel_csv(&sim.panel, &panel_path)
        .with_context(|| format!("cannot write {}", panel_path.display()))?;
    let truth = Truth {
        config: &cfg,
        truth: sim.truth,
        realized_theta: sim.realized_theta,
        gamma_diag: &sim.gamma_diag,
    };
    let truth_json = to_json(&truth)?;
    write_file(&output.join("truth.json"), &truth_json)?;
    ctx.note(format!(
        "simulated N={} T={} (r1={}, r2={}, r3={}) into {}",
        cfg.n,
        cfg.t,
        cfg.r1,
        cfg.r2,
        cfg.r3,
        output.display()
    ));
    if ctx.json {
        print!("{truth_json}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_test(
    ctx: &Session,
    panel: &Path,
    config: Option<&Path>,
    scheme: Option<&str>,
    layout: &LayoutArgs,
) -> Outcome {
    let mut cfg = load_test_config(ctx, config)?;
    if let Some(s) = scheme {
        cfg.scheme = s.parse::<ScalingScheme>()?;
    }
    let panel = load_panel_csv(panel, &layout.layout()?)
        .with_context(|| format!("cannot load {}", panel.display()))?;
    let report = estimate_all(&panel, &cfg)?;
    print!("{}", to_json(&report)?);
    ctx.note(format!(
        "{}: r1={} r*={} r={} r2={} r3={}",
        report.scheme.name(),
        report.r1_hat,
        report.r_star_hat,
        report.r_total_hat,
        report.r2_hat,
        report.r3_hat
    ));
    if report.inconsistency_flag {
        ctx.note(
            "warning: estimated counts were inconsistent and a derived count was clamped at zero",
        );
    }
    if report.max_reached {
        ctx.note("warning: a sequential test reached its maximum without rejecting");
        return Ok(ExitCode::from(EXIT_MAX_REACHED));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Deserialize)]
struct TablePreset {
    table: PresetTable,
    #[serde(default = "default_rho_bar")]
    rho_bar: f64,
    replications: usize,
    #[serde(default)]
    sizes: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    master_seed: u64,
}

fn default_rho_bar() -> f64 {
    0.4
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Job {
    Scenario(Scenario),
    Table(TableSpec),
    PresetTable(TablePreset),
    WeakFactor(WeakFactorSpec),
}

fn cmd_montecarlo(ctx: &Session, spec: &Path, output: &Path, jobs: usize) -> Outcome {
    if jobs == 0 {
        return Err(anyhow::anyhow!("--jobs must be at least 1").into());
    }
    let job: Job = read_json(spec)?;
    create_dir(output)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut emit = |name: &str, contents: String| -> anyhow::Result<()> {
        let path = output.join(name);
        write_file(&path, contents)?;
        written.push(path);
        Ok(())
    };
    match job {
        Job::Scenario(mut s) => {
            if let Some(seed) = ctx.seed {
                s.master_seed = seed;
            }
            let result = run_scenario(&s, jobs)?;
            let mut csv = String::from(
                "label,target,scheme,truth,replications,mean,wrong_fraction,max_reached\n",
            );
            for m in &result.summaries {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    result.label,
                    m.target.name(),
                    m.scheme.name(),
                    m.truth,
                    result.replications,
                    m.mean,
                    m.wrong_fraction,
                    m.max_reached
                ));
            }
            emit("summary.csv", csv)?;
            emit("results.json", to_json(&result)?)?;
        }
        Job::Table(mut spec) => {
            if let Some(seed) = ctx.seed {
                spec.master_seed = seed;
            }
            write_table(&spec, jobs, &mut emit)?;
        }
        Job::PresetTable(p) => {
            let sizes = p.sizes.unwrap_or_else(|| PRESET_SIZES.to_vec());
            let mut spec = TableSpec::preset(p.table, p.rho_bar, p.replications, &sizes);
            spec.master_seed = ctx.seed.unwrap_or(p.master_seed);
            write_table(&spec, jobs, &mut emit)?;
        }
        Job::WeakFactor(mut spec) => {
            if let Some(seed) = ctx.seed {
                spec.master_seed = seed;
            }
            let points = run_weak_factor_experiment(&spec, jobs)?;
            let mut csv = String::from("kappa,n,t,detection_rate\n");
            for p in &points {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    p.kappa, p.n, p.t, p.detection_rate
                ));
            }
            emit("weak_factor.csv", csv)?;
            emit("results.json", to_json(&points)?)?;
        }
    }
    for path in &written {
        ctx.note(format!("wrote {}", path.display()));
    }
    if ctx.json {
        let paths: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
        print!("{}", to_json(&paths)?);
    }
    Ok(ExitCode::SUCCESS)
}

fn write_table(
    spec: &TableSpec,
    jobs: usize,
    emit: &mut impl FnMut(&str, String) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    let table = run_table(spec, jobs)?;
    emit("table.csv", table.to_csv())?;
    emit("table.txt", table.to_text())?;
    emit("results.json", to_json(&table)?)
}

fn cmd_analyze(
    ctx: &Session,
    panel_path: &Path,
    output: &Path,
    config: Option<&Path>,
    options: &AnalysisOptions,
    external: &[String],
    layout: &LayoutArgs,
) -> Outcome {
    let cfg = load_test_config(ctx, config)?;
    let panel = load_panel_csv(panel_path, &layout.layout()?)
        .with_context(|| format!("cannot load {}", panel_path.display()))?;
    let series = external
        .iter()
        .map(|spec| {
            let (name, path) = spec
                .split_once('=')
                .filter(|(n, p)| !n.is_empty() && !p.is_empty())
                .with_context(|| format!("external series {spec:?} is not NAME=PATH"))?;
            load_series_csv(name, path)
                .with_context(|| format!("cannot load external series {path}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let report = analyze(&panel, &cfg, &series, options)?;
    let written = write_report(&report, output)?;
    for d in &report.dimensions {
        ctx.note(format!(
            "{}: r1={} r*={} r={} r2={} r3={}{}",
            d.scheme.name(),
            d.r1_hat,
            d.r_star_hat,
            d.r_total_hat,
            d.r2_hat,
            d.r3_hat,
            if d.max_reached {
                " (maximum reached)"
            } else {
                ""
            }
        ));
    }
    ctx.note(format!("extracted {} factors", report.factor_count));
    for path in &written {
        ctx.note(format!("wrote {}", path.display()));
    }
    if ctx.json {
        #[derive(Serialize)]
        struct Summary<'a> {
            factor_count: usize,
            dimensions: &'a [factordim::FactorDimensionReport],
            files: Vec<String>,
        }
        print!(
            "{}",
            to_json(&Summary {
                factor_count: report.factor_count,
                dimensions: &report.dimensions,
                files: written.iter().map(|p| p.display().to_string()).collect(),
            })?
        );
    }
    Ok(ExitCode::SUCCESS)
}
