use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{rows_of, select_rows};

/// A `T x N` predictor panel: rows are periods, columns are series.
///
/// Construction enforces `T >= 2`, `N >= 2` and finiteness of every entry.
/// Missing observations are handled upstream in [`crate::data`].
#[derive(Debug, Clone, PartialEq)]
pub struct PanelMatrix {
    values: DMatrix<f64>,
    series_ids: Vec<String>,
    time_index: Vec<String>,
}

impl PanelMatrix {
    pub fn new(values: DMatrix<f64>, series_ids: Vec<String>, time_index: Vec<String>) -> Result<Self> {
        let (t, n) = values.shape();
        if t < 2 || n < 2 {
            return invalid(format!("panel must be at least 2x2, got {t}x{n}"));
        }
        if series_ids.len() != n {
            return invalid(format!("{} series ids for {n} columns", series_ids.len()));
        }
        if time_index.len() != t {
            return invalid(format!("{} time labels for {t} rows", time_index.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % t, pos / t);
            return invalid(format!(
                "non-finite value in series {} at {}",
                series_ids[j], time_index[i]
            ));
        }
        Ok(Self {
            values,
            series_ids,
            time_index,
        })
    }

    /// Panel with generated labels `x1..xN` and `1..T`.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let ids = (1..=values.ncols()).map(|j| format!("x{j}")).collect();
        let times = (1..=values.nrows()).map(|t| t.to_string()).collect();
        Self::new(values, ids, times)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn series_ids(&self) -> &[String] {
        &self.series_ids
    }

    pub fn time_index(&self) -> &[String] {
        &self.time_index
    }

    /// Number of periods `T`.
    pub fn t(&self) -> usize {
        self.values.nrows()
    }

    /// Number of series `N`.
    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    /// Sub-panel of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.t()) {
            return invalid(format!("row {r} out of range for T={}", self.t()));
        }
        Self::new(
            select_rows(&self.values, rows),
            self.series_ids.clone(),
            rows.iter().map(|&r| self.time_index[r].clone()).collect(),
        )
    }

    /// The first `len` rows.
    pub fn head(&self, len: usize) -> Result<Self> {
        let rows: Vec<usize> = (0..len).collect();
        self.select_rows(&rows)
    }

    /// Keep the named columns (in the requested order).
    pub fn select_series(&self, ids: &[&str]) -> Result<Self> {
        let mut cols = Vec::with_capacity(ids.len());
        for id in ids {
            match self.series_ids.iter().position(|s| s == id) {
                Some(j) => cols.push(j),
                None => return invalid(format!("series '{id}' not in panel")),
            }
        }
        let values = DMatrix::from_fn(self.t(), cols.len(), |i, j| self.values[(i, cols[j])]);
        Self::new(
            values,
            cols.iter().map(|&j| self.series_ids[j].clone()).collect(),
            self.time_index.clone(),
        )
    }

    /// Each series centred and scaled to unit sample variance.
    pub fn standardized(&self) -> Result<Self> {
        let t = self.t() as f64;
        let mut out = self.values.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let mean = col.sum() / t;
            let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
            let sd = (ss / (t - 1.0)).sqrt();
            if !(sd > 0.0) {
                return invalid(format!("series {} is constant", self.series_ids[j]));
            }
            col.apply(|v| *v = (*v - mean) / sd);
        }
        Self::new(out, self.series_ids.clone(), self.time_index.clone())
    }

    pub fn to_json_value(&self) -> PanelJson {
        PanelJson {
            series_ids: self.series_ids.clone(),
            time_index: self.time_index.clone(),
            values: rows_of(&self.values),
        }
    }
}

/// Row-major JSON form of a panel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelJson {
    pub series_ids: Vec<String>,
    pub time_index: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_non_finite() {
        assert!(PanelMatrix::from_matrix(DMatrix::zeros(1, 3)).is_err());
        assert!(PanelMatrix::from_matrix(DMatrix::zeros(3, 1)).is_err());
        let mut m = DMatrix::from_element(3, 3, 1.0);
        m[(1, 2)] = f64::NAN;
        let err = PanelMatrix::from_matrix(m).unwrap_err().to_string();
        assert!(err.contains("x3"), "{err}");
    }

    #[test]
    fn standardize_gives_zero_mean_unit_variance() {
        let m = DMatrix::from_fn(20, 3, |i, j| (i * i) as f64 + 3.0 * j as f64);
        let p = PanelMatrix::from_matrix(m).unwrap().standardized().unwrap();
        for col in p.values().column_iter() {
            let mean = col.sum() / 20.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 19.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }
}
