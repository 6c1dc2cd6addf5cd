use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::estimate_all_schemes;
use crate::transforms::ScalingScheme;
use crate::types::{FactorDimensionReport, Panel, TestConfig};

use super::acf::{autocorrelation, Acf};
use super::factors::{
    correlation, extract_factors, nelson_siegel_loadings, proxies, CurveProxies,
    NelsonSiegelCurves,
};
use super::io::NamedSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    pub schemes: Vec<ScalingScheme>,
    /// Scheme whose total count sets the number of extracted factors.
    pub count_scheme: ScalingScheme,
    /// Overrides the estimated number of factors.
    pub factor_count: Option<usize>,
    pub max_lag: usize,
    pub compute_proxies: bool,
    pub ns_decay: f64,
    /// Defaults to `1..=N`.
    pub ns_maturities: Option<Vec<f64>>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            schemes: ScalingScheme::ALL.to_vec(),
            count_scheme: ScalingScheme::Bt3,
            factor_count: None,
            max_lag: 24,
            compute_proxies: true,
            ns_decay: 0.2,
            ns_maturities: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub series: String,
    /// 1-based factor index.
    pub factor: usize,
    /// `None` when either series is constant.
    pub value: Option<f64>,
}

/// Pointwise percentiles of the residual autocorrelations across series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualAcfSummary {
    pub p05: Vec<f64>,
    pub p50: Vec<f64>,
    pub p95: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalReport {
    pub n: usize,
    pub t: usize,
    pub dimensions: Vec<FactorDimensionReport>,
    pub factor_count: usize,
    pub eigenvalues: Vec<f64>,
    /// One `T`-length path per factor.
    pub factors: Vec<Vec<f64>>,
    /// One `N`-length loading column per factor.
    pub loadings: Vec<Vec<f64>>,
    pub proxies: Option<CurveProxies>,
    pub correlations: Vec<CorrelationEntry>,
    pub factor_acf: Vec<Acf>,
    /// Per-series residual autocorrelations; constant residual series are skipped.
    pub residual_acf: Vec<(usize, Acf)>,
    pub residual_acf_summary: Option<ResidualAcfSummary>,
    pub ns_curves: NelsonSiegelCurves,
    pub series_labels: Option<Vec<String>>,
    pub time_labels: Option<Vec<String>>,
}

impl EmpiricalReport {
    pub fn dimension(&self, scheme: ScalingScheme) -> Option<&FactorDimensionReport> {
        self.dimensions.iter().find(|d| d.scheme == scheme)
    }

    pub fn correlation(&self, series: &str, factor: usize) -> Option<f64> {
        self.correlations
            .iter()
            .find(|c| c.series == series && c.factor == factor)
            .and_then(|c| c.value)
    }
}

fn correlation_or_none(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    match correlation(a, b) {
        Ok(v) => Ok(Some(v)),
        Err(Error::ZeroVariance) => Ok(None),
        Err(e) => Err(e),
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summarize(acfs: &[(usize, Acf)], max_lag: usize) -> Option<ResidualAcfSummary> {
    if acfs.is_empty() {
        return None;
    }
    let mut summary = ResidualAcfSummary {
        p05: Vec::with_capacity(max_lag),
        p50: Vec::with_capacity(max_lag),
        p95: Vec::with_capacity(max_lag),
    };
    for lag in 0..max_lag {
        let mut column: Vec<f64> = acfs.iter().map(|(_, a)| a.values[lag]).collect();
        column.sort_by(f64::total_cmp);
        summary.p05.push(percentile(&column, 0.05));
        summary.p50.push(percentile(&column, 0.50));
        summary.p95.push(percentile(&column, 0.95));
    }
    Some(summary)
}

/// Runs the full pipeline on `panel`. External series must have `T`
/// observations.
pub fn analyze(
    panel: &Panel,
    cfg: &TestConfig,
    external: &[NamedSeries],
    options: &AnalysisOptions,
) -> Result<EmpiricalReport> {
    cfg.validate()?;
    let (n, t) = (panel.n(), panel.t());
    if options.max_lag == 0 || options.max_lag >= t {
        return Err(Error::Config(format!(
            "max_lag must lie in 1..{t}, got {}",
            options.max_lag
        )));
    }
    for series in external {
        if series.values.len() != t {
            return Err(Error::Config(format!(
                "external series {} has {} observations, panel has {t}",
                series.name,
                series.values.len()
            )));
        }
    }

    let mut schemes = options.schemes.clone();
    if options.factor_count.is_none() && !schemes.contains(&options.count_scheme) {
        schemes.push(options.count_scheme);
    }
    let dimensions = estimate_all_schemes(panel, cfg, &schemes)?;
    let r = match options.factor_count {
        Some(r) => r,
        None => dimensions
            .iter()
            .find(|d| d.scheme == options.count_scheme)
            .map(|d| d.r_total_hat)
            .unwrap_or(0),
    }
    .min(n.min(t));

    let curve_proxies = if options.compute_proxies {
        Some(proxies(panel)?)
    } else {
        None
    };

    let mut eigenvalues = Vec::new();
    let mut factors = Vec::new();
    let mut loadings = Vec::new();
    let mut correlations = Vec::new();
    let mut factor_acf = Vec::new();
    let mut residual_acf = Vec::new();
    if r > 0 {
        let extracted = extract_factors(panel, r)?;
        eigenvalues = extracted.eigenvalues.clone();
        factors = extracted
            .factors
            .row_iter()
            .map(|row| row.iter().copied().collect::<Vec<f64>>())
            .collect();
        loadings = extracted
            .loadings
            .column_iter()
            .map(|col| col.iter().copied().collect::<Vec<f64>>())
            .collect();

        let mut named: Vec<(&str, &[f64])> = Vec::new();
        if let Some(p) = &curve_proxies {
            named.push(("level", &p.level));
            named.push(("slope", &p.slope));
            named.push(("curvature", &p.curvature));
        }
        for series in external {
            named.push((&series.name, &series.values));
        }
        for (name, values) in &named {
            for (j, f) in factors.iter().enumerate() {
                correlations.push(CorrelationEntry {
                    series: name.to_string(),
                    factor: j + 1,
                    value: correlation_or_none(values, f)?,
                });
            }
        }

        for f in &factors {
            factor_acf.push(match autocorrelation(f, options.max_lag) {
                Ok(a) => a,
                Err(Error::ZeroVariance) => Acf {
                    values: vec![0.0; options.max_lag],
                    band: 1.96 / (t as f64).sqrt(),
                },
                Err(e) => return Err(e),
            });
        }

        let residuals = extracted.residuals(panel);
        for (i, row) in residuals.row_iter().enumerate() {
            let series: Vec<f64> = row.iter().copied().collect();
            match autocorrelation(&series, options.max_lag) {
                Ok(a) => residual_acf.push((i, a)),
                Err(Error::ZeroVariance) => {}
                Err(e) => return Err(e),
            }
        }
    }

    let maturities = options
        .ns_maturities
        .clone()
        .unwrap_or_else(|| (1..=n).map(|i| i as f64).collect());
    let ns_curves = nelson_siegel_loadings(options.ns_decay, &maturities)?;
    let residual_acf_summary = summarize(&residual_acf, options.max_lag);

    Ok(EmpiricalReport {
        n,
        t,
        dimensions,
        factor_count: r,
        eigenvalues,
        factors,
        loadings,
        proxies: curve_proxies,
        correlations,
        factor_acf,
        residual_acf,
        residual_acf_summary,
        ns_curves,
        series_labels: panel.series_labels().map(<[String]>::to_vec),
        time_labels: panel.time_labels().map(<[String]>::to_vec),
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes `report.json`, `factors.csv`, `loadings.csv`, `acf.csv` and
/// `ns_curves.csv` into `dir`. Returns the paths written.
pub fn write_report(report: &EmpiricalReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let json_path = dir.join("report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(&json_path, json)?;
    written.push(json_path);

    let r = report.factor_count;
    let path = dir.join("factors.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=r).map(|j| format!("F{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for s in 0..report.t {
        let mut rec = vec![report
            .time_labels
            .as_ref()
            .map_or_else(|| (s + 1).to_string(), |l| l[s].clone())];
        rec.extend(report.factors.iter().map(|f| f[s].to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("loadings.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["series".to_string()];
    header.extend((1..=r).map(|j| format!("L{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..report.n {
        let mut rec = vec![report
            .series_labels
            .as_ref()
            .map_or_else(|| format!("x{}", i + 1), |l| l[i].clone())];
        rec.extend(report.loadings.iter().map(|l| l[i].to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("acf.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["kind", "series", "lag", "value", "band"])
        .map_err(csv_err)?;
    let factor_rows = report
        .factor_acf
        .iter()
        .enumerate()
        .map(|(j, a)| ("factor", format!("F{}", j + 1), a));
    let residual_rows = report.residual_acf.iter().map(|(i, a)| {
        let name = report
            .series_labels
            .as_ref()
            .map_or_else(|| format!("x{}", i + 1), |l| l[*i].clone());
        ("residual", name, a)
    });
    for (kind, name, acf) in factor_rows.chain(residual_rows) {
        for (k, v) in acf.values.iter().enumerate() {
            w.write_record([
                kind.to_string(),
                name.clone(),
                (k + 1).to_string(),
                v.to_string(),
                acf.band.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("ns_curves.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["maturity", "level", "slope", "curvature"])
        .map_err(csv_err)?;
    let ns = &report.ns_curves;
    for k in 0..ns.maturities.len() {
        w.write_record([
            ns.maturities[k].to_string(),
            ns.level[k].to_string(),
            ns.slope[k].to_string(),
            ns.curvature[k].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    written.push(path);

    Ok(written)
}
