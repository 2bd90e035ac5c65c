//! Macro panel ingestion in the FRED-MD file convention, stationarity
//! transforms, recession targets and lag-aware design assembly.
//!
//! A panel file has a header row (`sasdate`, series ids...), a transform-code
//! row (`Transform:`, codes...) and one row per month. Empty cells, `NA`,
//! `NaN` and `.` are missing values.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::{info, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::glm::Design;
use crate::panel::PanelMatrix;
use crate::period::YearMonth;

/// A series and its transform code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub series_id: String,
    /// 1 level, 2 first difference, 3 second difference, 4 log,
    /// 5 log difference, 6 second log difference,
    /// 7 first difference of the growth rate.
    pub tcode: u8,
}

/// Monthly series on a common, consecutive date index. Missing values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesBlock {
    pub dates: Vec<YearMonth>,
    pub ids: Vec<String>,
    /// `T x N`, rows follow `dates`.
    pub values: DMatrix<f64>,
}

impl SeriesBlock {
    pub fn new(dates: Vec<YearMonth>, ids: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.shape() != (dates.len(), ids.len()) {
            return invalid(format!(
                "block is {:?} but has {} dates and {} ids",
                values.shape(),
                dates.len(),
                ids.len()
            ));
        }
        for w in dates.windows(2) {
            if w[1] != w[0].add_months(1) {
                return invalid(format!("dates {} and {} are not consecutive months", w[0], w[1]));
            }
        }
        Ok(Self { dates, ids, values })
    }

    /// Wrap a complete panel whose time labels are `yyyy-mm` dates.
    pub fn from_panel(panel: &PanelMatrix) -> Result<Self> {
        let dates = panel
            .time_index()
            .iter()
            .map(|s| YearMonth::parse(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dates, panel.series_ids().to_vec(), panel.values().clone())
    }

    /// Complete panel; fails when any value is missing.
    pub fn to_panel(&self) -> Result<PanelMatrix> {
        PanelMatrix::new(
            self.values.clone(),
            self.ids.clone(),
            self.dates.iter().map(|d| d.to_string()).collect(),
        )
    }

    pub fn t(&self) -> usize {
        self.dates.len()
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn row_of(&self, date: YearMonth) -> Option<usize> {
        let first = *self.dates.first()?;
        let k = date.months_since(&first);
        (k >= 0 && (k as usize) < self.dates.len()).then_some(k as usize)
    }

    /// Rows dated within `[start, end]`.
    pub fn window(&self, start: Option<YearMonth>, end: Option<YearMonth>) -> Result<Self> {
        let rows: Vec<usize> = (0..self.t())
            .filter(|&r| start.is_none_or(|s| self.dates[r] >= s) && end.is_none_or(|e| self.dates[r] <= e))
            .collect();
        if rows.is_empty() {
            return Err(Error::InsufficientData("no observations in the requested window".into()));
        }
        self.select_rows(rows[0], rows.len())
    }

    /// `len` consecutive rows starting at `first`.
    pub fn select_rows(&self, first: usize, len: usize) -> Result<Self> {
        if first + len > self.t() {
            return invalid("row range out of bounds");
        }
        Self::new(
            self.dates[first..first + len].to_vec(),
            self.ids.clone(),
            self.values.rows(first, len).into_owned(),
        )
    }

    /// Columns by id, in the requested order.
    pub fn select_series(&self, ids: &[&str]) -> Result<Self> {
        let mut cols = Vec::with_capacity(ids.len());
        for id in ids {
            match self.ids.iter().position(|s| s == id) {
                Some(j) => cols.push(j),
                None => return invalid(format!("series '{id}' not found")),
            }
        }
        Self::new(
            self.dates.clone(),
            cols.iter().map(|&j| self.ids[j].clone()).collect(),
            DMatrix::from_fn(self.t(), cols.len(), |i, j| self.values[(i, cols[j])]),
        )
    }

    /// Each column centred and scaled by its sample standard deviation over
    /// the block's rows.
    pub fn standardized(&self) -> Result<Self> {
        let t = self.t() as f64;
        if self.t() < 2 {
            return invalid("standardisation needs at least two rows");
        }
        let mut out = self.values.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let mean = col.sum() / t;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0)).sqrt();
            if !sd.is_finite() {
                return invalid(format!("series {} has missing values", self.ids[j]));
            }
            if sd == 0.0 {
                return invalid(format!("series {} is constant over the window", self.ids[j]));
            }
            col.apply(|v| *v = (*v - mean) / sd);
        }
        Self::new(self.dates.clone(), self.ids.clone(), out)
    }
}

/// Untransformed panel as read from file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPanel {
    pub block: SeriesBlock,
    pub specs: Vec<SeriesSpec>,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "NaN" | "nan" | "." | "#N/A")
}

/// Read a panel file. Errors carry 1-based file line numbers.
pub fn load_panel(path: impl AsRef<Path>) -> Result<RawPanel> {
    parse_panel(File::open(path)?)
}

pub fn parse_panel<R: Read>(reader: R) -> Result<RawPanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let line_of = |r: &csv::StringRecord, fallback: usize| r.position().map(|p| p.line() as usize).unwrap_or(fallback);

    let header = match records.next() {
        Some(r) => r?,
        None => return Err(Error::Parse { line: 1, message: "empty file".into() }),
    };
    let ids: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    if ids.is_empty() || ids.iter().any(|s| s.is_empty()) {
        return Err(Error::Parse {
            line: line_of(&header, 1),
            message: "header must name a date column followed by series ids".into(),
        });
    }

    let tcodes = match records.next() {
        Some(r) => r?,
        None => return Err(Error::Parse { line: 2, message: "missing transform-code row".into() }),
    };
    let tline = line_of(&tcodes, 2);
    if tcodes.len() < ids.len() + 1 {
        return Err(Error::Parse {
            line: tline,
            message: format!("{} transform codes for {} series", tcodes.len().saturating_sub(1), ids.len()),
        });
    }
    let mut specs = Vec::with_capacity(ids.len());
    for (j, id) in ids.iter().enumerate() {
        let cell = tcodes[j + 1].trim();
        let code = cell
            .parse::<f64>()
            .ok()
            .filter(|c| c.fract() == 0.0 && (1.0..=7.0).contains(c))
            .ok_or_else(|| Error::Parse {
                line: tline,
                message: format!("invalid transform code '{cell}' for series {id}"),
            })?;
        specs.push(SeriesSpec {
            series_id: id.clone(),
            tcode: code as u8,
        });
    }

    let mut dates: Vec<YearMonth> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = line_of(&rec, 0);
        let date_cell = rec.get(0).unwrap_or("").trim();
        if date_cell.is_empty() {
            if rec.iter().all(|c| c.trim().is_empty()) {
                continue;
            }
            return Err(Error::Parse { line, message: "missing date".into() });
        }
        let date = YearMonth::parse(date_cell).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(Error::Parse {
                    line,
                    message: format!("date {date} does not follow {prev}"),
                });
            }
            if date != prev.add_months(1) {
                return Err(Error::Parse {
                    line,
                    message: format!("gap between {prev} and {date}; monthly rows must be consecutive"),
                });
            }
        }
        let mut row = Vec::with_capacity(ids.len());
        for j in 0..ids.len() {
            let cell = rec.get(j + 1).unwrap_or("").trim();
            if is_missing(cell) {
                row.push(f64::NAN);
            } else {
                let v = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("non-numeric value '{cell}' for series {}", ids[j]),
                })?;
                row.push(v);
            }
        }
        dates.push(date);
        rows.push(row);
    }
    if dates.is_empty() {
        return Err(Error::Parse { line: tline + 1, message: "no observations".into() });
    }
    let values = DMatrix::from_fn(rows.len(), ids.len(), |i, j| rows[i][j]);
    Ok(RawPanel {
        block: SeriesBlock::new(dates, ids, values)?,
        specs,
    })
}

/// Leading values lost to transform code `tcode`.
pub fn tcode_lead(tcode: u8) -> usize {
    match tcode {
        2 | 5 => 1,
        3 | 6 | 7 => 2,
        _ => 0,
    }
}

/// Apply a transform code; positions without enough history are NaN and
/// missing inputs propagate. Errors name the offending index.
pub fn apply_tcode(series: &[f64], tcode: u8) -> Result<Vec<f64>> {
    let dates: Vec<String> = (0..series.len()).map(|i| format!("index {i}")).collect();
    transform_series(series, tcode, "series", &dates)
}

/// [`apply_tcode`] with errors naming the series and date.
pub fn transform_series(series: &[f64], tcode: u8, series_id: &str, dates: &[String]) -> Result<Vec<f64>> {
    let err = |i: usize, message: String| Error::Transform {
        series: series_id.to_string(),
        date: dates.get(i).cloned().unwrap_or_default(),
        message,
    };
    let logged = |xs: &[f64]| -> Result<Vec<f64>> {
        xs.iter()
            .enumerate()
            .map(|(i, &v)| {
                if v.is_nan() {
                    Ok(f64::NAN)
                } else if v <= 0.0 {
                    Err(err(i, format!("log transform of non-positive value {v}")))
                } else {
                    Ok(v.ln())
                }
            })
            .collect()
    };
    let diff = |xs: &[f64]| -> Vec<f64> {
        let mut out = vec![f64::NAN; xs.len()];
        for i in 1..xs.len() {
            out[i] = xs[i] - xs[i - 1];
        }
        out
    };
    Ok(match tcode {
        1 => series.to_vec(),
        2 => diff(series),
        3 => diff(&diff(series)),
        4 => logged(series)?,
        5 => diff(&logged(series)?),
        6 => diff(&diff(&logged(series)?)),
        7 => {
            let mut growth = vec![f64::NAN; series.len()];
            for i in 1..series.len() {
                if series[i - 1] == 0.0 {
                    return Err(err(i, "growth rate with a zero previous value".into()));
                }
                growth[i] = series[i] / series[i - 1] - 1.0;
            }
            diff(&growth)
        }
        c => return invalid(format!("unknown transform code {c}")),
    })
}

/// Transformed, complete panel ready for factor extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedPanel {
    pub block: SeriesBlock,
    pub specs: Vec<SeriesSpec>,
    /// Series removed because of missing values inside the window.
    pub dropped_series: Vec<String>,
}

impl PreparedPanel {
    pub fn panel(&self) -> Result<PanelMatrix> {
        self.block.to_panel()
    }
}

/// Transform every series, restrict to `[start, end]`, drop the leading
/// rows lost to differencing panel-wide, then drop series that still have
/// missing values.
pub fn prepare_panel(raw: &RawPanel, start: Option<YearMonth>, end: Option<YearMonth>) -> Result<PreparedPanel> {
    let block = &raw.block;
    let labels: Vec<String> = block.dates.iter().map(|d| d.to_string()).collect();
    let mut values = DMatrix::from_element(block.t(), block.n(), f64::NAN);
    for (j, spec) in raw.specs.iter().enumerate() {
        let col: Vec<f64> = block.values.column(j).iter().copied().collect();
        let tr = transform_series(&col, spec.tcode, &spec.series_id, &labels)?;
        values.column_mut(j).copy_from_slice(&tr);
    }
    let transformed = SeriesBlock::new(block.dates.clone(), block.ids.clone(), values)?;

    // Drop rows without enough history for the largest transform lag, but
    // only the ones that fall inside the window.
    let lead = raw.specs.iter().map(|s| tcode_lead(s.tcode)).max().unwrap_or(0);
    let earliest = block.dates[0].add_months(lead as i64);
    let start = Some(start.map_or(earliest, |s| s.max(earliest)));
    let window = transformed.window(start, end)?;

    let keep: Vec<usize> = (0..window.n())
        .filter(|&j| window.values.column(j).iter().all(|v| v.is_finite()))
        .collect();
    let dropped_series: Vec<String> = (0..window.n())
        .filter(|j| !keep.contains(j))
        .map(|j| window.ids[j].clone())
        .collect();
    if !dropped_series.is_empty() {
        warn!(
            "dropping {} series with missing values in the window: {}",
            dropped_series.len(),
            dropped_series.join(", ")
        );
    }
    if keep.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} complete series in the window",
            keep.len()
        )));
    }
    let ids: Vec<&str> = keep.iter().map(|&j| window.ids[j].as_str()).collect();
    let block = window.select_series(&ids)?;
    let specs = keep.iter().map(|&j| raw.specs[j].clone()).collect();
    info!("prepared panel: T={}, N={}", block.t(), block.n());
    Ok(PreparedPanel {
        block,
        specs,
        dropped_series,
    })
}

/// Monthly 0/1 recession indicator on consecutive dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecessionSeries {
    pub dates: Vec<YearMonth>,
    pub values: Vec<u8>,
}

impl RecessionSeries {
    pub fn new(dates: Vec<YearMonth>, values: Vec<u8>) -> Result<Self> {
        if dates.len() != values.len() || dates.is_empty() {
            return invalid("recession dates and values must be non-empty and of equal length");
        }
        if values.iter().any(|v| *v > 1) {
            return invalid("recession indicator must be 0 or 1");
        }
        for w in dates.windows(2) {
            if w[1] != w[0].add_months(1) {
                return invalid(format!("recession dates {} and {} are not consecutive", w[0], w[1]));
            }
        }
        Ok(Self { dates, values })
    }

    pub fn get(&self, date: YearMonth) -> Option<u8> {
        let k = date.months_since(&self.dates[0]);
        (k >= 0).then(|| self.values.get(k as usize).copied()).flatten()
    }

    pub fn first(&self) -> YearMonth {
        self.dates[0]
    }

    pub fn last(&self) -> YearMonth {
        *self.dates.last().expect("non-empty")
    }

    /// Number of distinct recession spells (runs of ones).
    pub fn episodes(&self) -> usize {
        count_episodes(&self.values)
    }

    /// Sub-series over `[start, end]`.
    pub fn window(&self, start: YearMonth, end: YearMonth) -> Result<Self> {
        let idx: Vec<usize> = (0..self.dates.len())
            .filter(|&i| self.dates[i] >= start && self.dates[i] <= end)
            .collect();
        if idx.is_empty() {
            return Err(Error::InsufficientData("no recession observations in the window".into()));
        }
        Self::new(
            idx.iter().map(|&i| self.dates[i]).collect(),
            idx.iter().map(|&i| self.values[i]).collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "recession"])?;
        for (d, v) in self.dates.iter().zip(&self.values) {
            w.write_record([d.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Number of runs of ones in a 0/1 sequence.
pub fn count_episodes(values: &[u8]) -> usize {
    let mut prev = 0;
    let mut count = 0;
    for &v in values {
        if v == 1 && prev == 0 {
            count += 1;
        }
        prev = v;
    }
    count
}

/// Business-cycle turning points: recession months run from the month after
/// each peak through the trough.
#[derive(Debug, Clone, PartialEq)]
pub struct TurningPoints {
    pub spells: Vec<(YearMonth, YearMonth)>,
}

impl TurningPoints {
    pub fn indicator(&self, start: YearMonth, end: YearMonth) -> Result<RecessionSeries> {
        if end < start {
            return invalid("end precedes start");
        }
        let dates: Vec<YearMonth> = (0..=end.months_since(&start)).map(|k| start.add_months(k)).collect();
        let values = dates
            .iter()
            .map(|d| self.spells.iter().any(|(p, t)| d > p && d <= t) as u8)
            .collect();
        RecessionSeries::new(dates, values)
    }
}

/// A recession file in either accepted layout.
#[derive(Debug, Clone, PartialEq)]
pub enum RecessionSource {
    Indicator(RecessionSeries),
    TurningPoints(TurningPoints),
}

impl RecessionSource {
    /// Indicator over `[start, end]`. A monthly indicator must cover the range.
    pub fn over(&self, start: YearMonth, end: YearMonth) -> Result<RecessionSeries> {
        match self {
            RecessionSource::Indicator(s) => {
                let w = s.window(start, end)?;
                if w.first() != start || w.last() != end {
                    warn!(
                        "recession indicator covers {}..{}, requested {}..{}",
                        w.first(),
                        w.last(),
                        start,
                        end
                    );
                }
                Ok(w)
            }
            RecessionSource::TurningPoints(tp) => tp.indicator(start, end),
        }
    }
}

/// Read recessions from a `date,value` file of monthly 0/1 values, or from a
/// file with `peak` and `trough` columns.
pub fn load_recessions(path: impl AsRef<Path>) -> Result<RecessionSource> {
    parse_recessions(File::open(path)?)
}

pub fn parse_recessions<R: Read>(reader: R) -> Result<RecessionSource> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let peak = header.iter().position(|h| h == "peak");
    let trough = header.iter().position(|h| h == "trough");
    let line_of = |r: &csv::StringRecord| r.position().map(|p| p.line() as usize).unwrap_or(0);

    if let (Some(p), Some(t)) = (peak, trough) {
        let mut spells = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = line_of(&rec);
            let cell = |j: usize| rec.get(j).unwrap_or("").trim().to_string();
            let (pc, tc) = (cell(p), cell(t));
            if pc.is_empty() && tc.is_empty() {
                continue;
            }
            let parse = |s: &str| YearMonth::parse(s).map_err(|e| Error::Parse { line, message: e.to_string() });
            let (pk, tr) = (parse(&pc)?, parse(&tc)?);
            if tr <= pk {
                return Err(Error::Parse {
                    line,
                    message: format!("trough {tr} does not follow peak {pk}"),
                });
            }
            spells.push((pk, tr));
        }
        return Ok(RecessionSource::TurningPoints(TurningPoints { spells }));
    }

    if header.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "recession file needs date,value or peak,trough columns".into(),
        });
    }
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let date_cell = rec.get(0).unwrap_or("").trim();
        if date_cell.is_empty() {
            continue;
        }
        let date = YearMonth::parse(date_cell).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let cell = rec.get(1).unwrap_or("").trim();
        let v = cell
            .parse::<f64>()
            .ok()
            .filter(|v| *v == 0.0 || *v == 1.0)
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("recession value '{cell}' is not 0 or 1"),
            })?;
        if let Some(prev) = dates.last() {
            if date != YearMonth::add_months(prev, 1) {
                return Err(Error::Parse {
                    line,
                    message: format!("date {date} does not follow {prev} by one month"),
                });
            }
        }
        dates.push(date);
        values.push(v as u8);
    }
    Ok(RecessionSource::Indicator(RecessionSeries::new(dates, values)?))
}

/// Target definition for design assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub recessions: RecessionSeries,
    /// Months before the recession state of a month becomes known.
    pub publication_lag_months: usize,
    pub horizon: usize,
}

/// A design together with the dates of its rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledDesign {
    pub design: Design,
    pub regressor_dates: Vec<YearMonth>,
    pub target_dates: Vec<YearMonth>,
}

fn finite_row(block: Option<&SeriesBlock>, date: YearMonth) -> Option<Option<Vec<f64>>> {
    match block {
        None => Some(None),
        Some(b) => {
            let r = b.row_of(date)?;
            let row: Vec<f64> = b.values.row(r).iter().copied().collect();
            row.iter().all(|v| v.is_finite()).then_some(Some(row))
        }
    }
}

/// Pair regressors dated `t` with the target at `t + h`.
///
/// A pair is used when `t <= estimation_end`, the target date is at least
/// `publication_lag_months` before `estimation_end`, the target is observed
/// and every regressor is present. `factors` fills the factor block and
/// `observed` the observed-regressor block; either may be absent. Row dates
/// come from whichever block is present (the factor block when both are).
pub fn assemble_design(
    factors: Option<&SeriesBlock>,
    target: &TargetSpec,
    estimation_end: YearMonth,
    observed: Option<&SeriesBlock>,
) -> Result<AssembledDesign> {
    let base = factors.or(observed).ok_or_else(|| {
        Error::InvalidArgument("a design needs a factor or an observed-regressor block".into())
    })?;
    let h = target.horizon as i64;
    let last_target = estimation_end.add_months(-(target.publication_lag_months as i64));
    let mut w_rows = Vec::new();
    let mut f_rows = Vec::new();
    let mut y = Vec::new();
    let mut regressor_dates = Vec::new();
    let mut target_dates = Vec::new();
    for &date in &base.dates {
        let target_date = date.add_months(h);
        if date > estimation_end || target_date > last_target {
            continue;
        }
        let Some(label) = target.recessions.get(target_date) else {
            continue;
        };
        let (Some(f), Some(w)) = (finite_row(factors, date), finite_row(observed, date)) else {
            continue;
        };
        f_rows.push(f.unwrap_or_default());
        w_rows.push(w.unwrap_or_default());
        y.push(label);
        regressor_dates.push(date);
        target_dates.push(target_date);
    }
    if y.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no usable (regressor, target) pairs up to {estimation_end} with lag {} and horizon {h}",
            target.publication_lag_months
        )));
    }
    let n = y.len();
    let d = factors.map_or(0, |b| b.n());
    let p = observed.map_or(0, |b| b.n());
    let design = Design::new(
        DMatrix::from_fn(n, p, |i, j| w_rows[i][j]),
        DMatrix::from_fn(n, d, |i, j| f_rows[i][j]),
        y,
        target.horizon,
    )?;
    Ok(AssembledDesign {
        design,
        regressor_dates,
        target_dates,
    })
}

#[derive(Serialize, Deserialize)]
struct CacheMeta {
    specs: Vec<SeriesSpec>,
    dropped_series: Vec<String>,
    start: YearMonth,
    end: YearMonth,
    rows: usize,
    series: usize,
    recession_episodes: Option<usize>,
}

pub const CACHE_PANEL: &str = "panel.csv";
pub const CACHE_META: &str = "panel.json";
pub const CACHE_RECESSIONS: &str = "recessions.csv";

/// Write the prepared panel (`panel.csv`, `panel.json`) and, when given,
/// the recession indicator (`recessions.csv`) into `dir`.
pub fn write_cache(dir: impl AsRef<Path>, prepared: &PreparedPanel, recessions: Option<&RecessionSeries>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_block_csv(&prepared.block, File::create(dir.join(CACHE_PANEL))?)?;
    let meta = CacheMeta {
        specs: prepared.specs.clone(),
        dropped_series: prepared.dropped_series.clone(),
        start: prepared.block.dates[0],
        end: *prepared.block.dates.last().expect("non-empty"),
        rows: prepared.block.t(),
        series: prepared.block.n(),
        recession_episodes: recessions.map(|r| r.episodes()),
    };
    serde_json::to_writer_pretty(File::create(dir.join(CACHE_META))?, &meta)?;
    if let Some(r) = recessions {
        r.write_csv(File::create(dir.join(CACHE_RECESSIONS))?)?;
    }
    Ok(())
}

/// Read a cache written by [`write_cache`].
pub fn read_cache(dir: impl AsRef<Path>) -> Result<(PreparedPanel, Option<RecessionSeries>)> {
    let dir = dir.as_ref();
    let meta: CacheMeta = serde_json::from_reader(File::open(dir.join(CACHE_META))?)?;
    let block = read_block_csv(File::open(dir.join(CACHE_PANEL))?)?;
    if block.ids.len() != meta.specs.len() {
        return invalid("cache metadata does not match the panel columns");
    }
    let rec_path = dir.join(CACHE_RECESSIONS);
    let recessions = if rec_path.exists() {
        match load_recessions(&rec_path)? {
            RecessionSource::Indicator(s) => Some(s),
            RecessionSource::TurningPoints(_) => return invalid("cached recessions must be monthly"),
        }
    } else {
        None
    };
    Ok((
        PreparedPanel {
            block,
            specs: meta.specs,
            dropped_series: meta.dropped_series,
        },
        recessions,
    ))
}

/// `date,id1,id2,...` with one row per month; NaN written as empty.
pub fn write_block_csv<W: Write>(block: &SeriesBlock, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(block.ids.iter().cloned());
    w.write_record(&header)?;
    for (i, d) in block.dates.iter().enumerate() {
        let mut row = vec![d.to_string()];
        row.extend(block.values.row(i).iter().map(|v| if v.is_nan() { String::new() } else { v.to_string() }));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_block_csv`].
pub fn read_block_csv<R: Read>(reader: R) -> Result<SeriesBlock> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let ids: Vec<String> = rdr.headers()?.iter().skip(1).map(|s| s.to_string()).collect();
    let mut dates = Vec::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let date = YearMonth::parse(rec.get(0).unwrap_or("")).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let mut row = Vec::with_capacity(ids.len());
        for j in 0..ids.len() {
            let cell = rec.get(j + 1).unwrap_or("").trim();
            row.push(if is_missing(cell) {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("non-numeric value '{cell}'"),
                })?
            });
        }
        dates.push(date);
        rows.push(row);
    }
    if dates.is_empty() {
        return Err(Error::Parse { line: 2, message: "no rows".into() });
    }
    let values = DMatrix::from_fn(rows.len(), ids.len(), |i, j| rows[i][j]);
    SeriesBlock::new(dates, ids, values)
}

/// Series id lookup helper: position of every id in `ids`.
pub fn index_of(ids: &[String]) -> HashMap<&str, usize> {
    ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
}
