//! CSV ingestion and export of panels and auxiliary series.
//!
//! Numbers are parsed strictly: an optional sign, digits, an optional
//! decimal point and an optional exponent. Locale variants such as `3,14`
//! are rejected with the offending position.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Panel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// One row per period, one column per series.
    TimeInRows,
    /// One row per series, one column per period.
    SeriesInRows,
}

/// Describes how a panel is laid out in a delimited file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvLayout {
    pub orientation: Orientation,
    /// First row holds labels (series names for `TimeInRows`, dates otherwise).
    pub header: bool,
    /// First column holds labels (dates for `TimeInRows`, series names otherwise).
    pub label_column: bool,
    pub delimiter: u8,
}

impl Default for CsvLayout {
    fn default() -> Self {
        Self {
            orientation: Orientation::TimeInRows,
            header: true,
            label_column: true,
            delimiter: b',',
        }
    }
}

impl CsvLayout {
    pub fn bare(orientation: Orientation) -> Self {
        Self {
            orientation,
            header: false,
            label_column: false,
            delimiter: b',',
        }
    }
}

pub fn parse_number(field: &str, row: usize, col: usize) -> Result<f64> {
    let s = field.trim();
    let err = |message: &str| Error::Parse {
        row,
        col,
        message: format!("{message}: {field:?}"),
    };
    if s.is_empty() {
        return Err(err("empty field"));
    }
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(k) => (&body[..k], Some(&body[k + 1..])),
        None => (body, None),
    };
    let mut parts = mantissa.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    let digits = |x: &str| x.bytes().all(|b| b.is_ascii_digit());
    let mantissa_ok = digits(int)
        && frac.is_none_or(digits)
        && !(int.is_empty() && frac.is_none_or(str::is_empty));
    let exponent_ok = exponent.is_none_or(|e| {
        let e = e.strip_prefix(['+', '-']).unwrap_or(e);
        !e.is_empty() && digits(e)
    });
    if !(mantissa_ok && exponent_ok) {
        return Err(err("not a decimal number"));
    }
    s.parse::<f64>().map_err(|_| err("not a decimal number"))
}

/// Reads a panel. Labels are kept when the layout provides them.
pub fn read_panel_csv<R: Read>(reader: R, layout: &CsvLayout) -> Result<Panel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(layout.delimiter)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut row_labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: line + 1,
            col: 0,
            message: e.to_string(),
        })?;
        if width.is_none() && record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let fields: Vec<&str> = record.iter().collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Shape {
                    row: line + 1,
                    expected: w,
                    found: fields.len(),
                })
            }
            _ => {}
        }
        if layout.header && header.is_none() {
            let skip = usize::from(layout.label_column);
            header = Some(fields.iter().skip(skip).map(|s| s.trim().to_string()).collect());
            continue;
        }
        let (label, data) = if layout.label_column {
            (Some(fields[0].trim().to_string()), &fields[1..])
        } else {
            (None, &fields[..])
        };
        let skip = usize::from(layout.label_column);
        let values = data
            .iter()
            .enumerate()
            .map(|(c, f)| parse_number(f, line + 1, c + skip + 1))
            .collect::<Result<Vec<f64>>>()?;
        row_labels.extend(label);
        rows.push(values);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::Empty);
    }

    let (r, c) = (rows.len(), rows[0].len());
    let (matrix, series_labels, time_labels) = match layout.orientation {
        Orientation::TimeInRows => (
            DMatrix::from_fn(c, r, |i, j| rows[j][i]),
            header,
            layout.label_column.then_some(row_labels),
        ),
        Orientation::SeriesInRows => (
            DMatrix::from_fn(r, c, |i, j| rows[i][j]),
            layout.label_column.then_some(row_labels),
            header,
        ),
    };
    let mut panel = Panel::new(matrix)?;
    if let Some(l) = series_labels {
        panel = panel.with_series_labels(l)?;
    }
    if let Some(l) = time_labels {
        panel = panel.with_time_labels(l)?;
    }
    Ok(panel)
}

pub fn load_panel_csv(path: impl AsRef<Path>, layout: &CsvLayout) -> Result<Panel> {
    read_panel_csv(File::open(path)?, layout)
}

/// Writes a panel time-in-rows with a header and a label column. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_panel_csv<W: Write>(panel: &Panel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut head = vec!["t".to_string()];
    match panel.series_labels() {
        Some(l) => head.extend(l.iter().cloned()),
        None => head.extend((1..=panel.n()).map(|i| format!("x{i}"))),
    }
    w.write_record(&head).map_err(io)?;
    for t in 0..panel.t() {
        let mut rec = vec![match panel.time_labels() {
            Some(l) => l[t].clone(),
            None => (t + 1).to_string(),
        }];
        rec.extend(panel.values().column(t).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_panel_csv(panel: &Panel, path: impl AsRef<Path>) -> Result<()> {
    write_panel_csv(panel, File::create(path)?)
}

/// A named auxiliary series aligned with the panel's periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSeries {
    pub name: String,
    pub dates: Vec<String>,
    pub values: Vec<f64>,
}

/// Reads a two-column `(date, value)` file. A non-numeric first row is
/// treated as a header.
pub fn read_series_csv<R: Read>(name: &str, reader: R) -> Result<NamedSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(reader);
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: line + 1,
            col: 0,
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(Error::Shape {
                row: line + 1,
                expected: 2,
                found: record.len(),
            });
        }
        match parse_number(&record[1], line + 1, 2) {
            Ok(v) => {
                dates.push(record[0].trim().to_string());
                values.push(v);
            }
            Err(_) if line == 0 => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(NamedSeries {
        name: name.to_string(),
        dates,
        values,
    })
}

pub fn load_series_csv(name: &str, path: impl AsRef<Path>) -> Result<NamedSeries> {
    read_series_csv(name, File::open(path)?)
}
