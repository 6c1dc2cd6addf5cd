//! End-to-end analysis of an observed panel: ingestion, dimension
//! estimation, principal-component factors and identification diagnostics.

mod acf;
mod analysis;
mod factors;
mod io;

pub use acf::{autocorrelation, Acf};
pub use analysis::{
    analyze, write_report, AnalysisOptions, CorrelationEntry, EmpiricalReport, ResidualAcfSummary,
};
pub use factors::{
    correlation, extract_factors, nelson_siegel_loadings, proxies, CurveProxies, ExtractedFactors,
    NelsonSiegelCurves,
};
pub use io::{
    load_panel_csv, load_series_csv, parse_number, read_panel_csv, read_series_csv,
    save_panel_csv, write_panel_csv, CsvLayout, NamedSeries, Orientation,
};
