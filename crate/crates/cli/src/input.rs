//! Reading panels, regression data and score/label columns.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use binfar_core::data::{self, RecessionSeries, SeriesBlock};
use binfar_core::period::YearMonth;
use binfar_core::{Error, Result};
use log::info;
use nalgebra::DMatrix;

/// A predictor panel plus any recession indicator found next to it.
pub struct LoadedPanel {
    pub block: SeriesBlock,
    pub recessions: Option<RecessionSeries>,
}

/// Load a predictor panel from a cache directory, a `date,series...` CSV or
/// a raw file whose second row holds transform codes, restricted to
/// `[start, end]`.
pub fn load_panel(path: &Path, start: Option<YearMonth>, end: Option<YearMonth>) -> Result<LoadedPanel> {
    if path.is_dir() {
        let (prepared, recessions) = data::read_cache(path)?;
        return Ok(LoadedPanel {
            block: prepared.block.window(start, end)?,
            recessions,
        });
    }
    if is_raw_panel(path)? {
        info!("{} has a transform-code row; transforming", path.display());
        let raw = data::load_panel(path)?;
        let prepared = data::prepare_panel(&raw, start, end)?;
        return Ok(LoadedPanel {
            block: prepared.block,
            recessions: None,
        });
    }
    let block = data::read_block_csv(File::open(path)?)?;
    Ok(LoadedPanel {
        block: block.window(start, end)?,
        recessions: None,
    })
}

/// A raw panel's second line starts with a label such as `Transform:` rather
/// than a date.
fn is_raw_panel(path: &Path) -> Result<bool> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    lines.next().transpose()?;
    let second = lines.next().transpose()?.unwrap_or_default();
    let first_cell = second.split(',').next().unwrap_or("").trim().trim_matches('"');
    Ok(YearMonth::parse(first_cell).is_err())
}

/// Regression data: outcome, observed regressors and optional dates.
pub struct DataTable {
    pub dates: Option<Vec<YearMonth>>,
    pub y: Vec<u8>,
    pub w: DMatrix<f64>,
    pub w_names: Vec<String>,
}

fn parse_label(cell: &str, line: usize) -> Result<u8> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v == 0.0 => Ok(0),
        Ok(v) if v == 1.0 => Ok(1),
        _ => Err(Error::Parse {
            line,
            message: format!("label '{cell}' is not 0 or 1"),
        }),
    }
}

fn parse_number(cell: &str, line: usize, column: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("non-numeric value '{cell}' in column {column}"),
        })
}

/// Read a regression CSV. `w_cols = None` takes every column other than the
/// outcome and `date`; `Some(&[])` takes none.
pub fn read_data(path: &Path, y_col: &str, w_cols: Option<&[String]>) -> Result<DataTable> {
    let mut rdr = csv::Reader::from_reader(File::open(path)?);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| header.iter().position(|h| h == name);
    let y_at = find(y_col).ok_or_else(|| Error::InvalidArgument(format!("no column named '{y_col}'")))?;
    let date_at = header.iter().position(|h| h.eq_ignore_ascii_case("date"));
    let w_at: Vec<usize> = match w_cols {
        Some(cols) => cols
            .iter()
            .map(|c| find(c).ok_or_else(|| Error::InvalidArgument(format!("no column named '{c}'"))))
            .collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&j| j != y_at && Some(j) != date_at).collect(),
    };

    let mut dates = Vec::new();
    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if let Some(j) = date_at {
            let d = YearMonth::parse(rec.get(j).unwrap_or("")).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            dates.push(d);
        }
        y.push(parse_label(rec.get(y_at).unwrap_or(""), line)?);
        rows.push(
            w_at.iter()
                .map(|&j| parse_number(rec.get(j).unwrap_or(""), line, &header[j]))
                .collect::<Result<_>>()?,
        );
    }
    if y.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no observations".into(),
        });
    }
    Ok(DataTable {
        dates: date_at.map(|_| dates),
        w: DMatrix::from_fn(y.len(), w_at.len(), |i, j| rows[i][j]),
        w_names: w_at.iter().map(|&j| header[j].clone()).collect(),
        y,
    })
}

/// First column of a CSV as strings, skipping a leading non-numeric header.
fn first_column(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(File::open(path)?);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        let cell = rec.get(0).unwrap_or("").trim().to_string();
        if cell.is_empty() || (i == 0 && cell.parse::<f64>().is_err()) {
            continue;
        }
        out.push((line, cell));
    }
    Ok(out)
}

pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    first_column(path)?
        .into_iter()
        .map(|(line, c)| parse_number(&c, line, "score"))
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<u8>> {
    first_column(path)?
        .into_iter()
        .map(|(line, c)| parse_label(&c, line))
        .collect()
}
