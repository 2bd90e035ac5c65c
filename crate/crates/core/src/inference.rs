//! Moving-block bootstrap for the two-step estimator.
//!
//! Each replication resamples `L` overlapping blocks of `q` consecutive
//! periods, rebuilds the predictor panel and the regression sample from the
//! same blocks, re-extracts the factors and refits the likelihood.

use std::io::Write;

use log::debug;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::factors::estimate_factors;
use crate::glm::{fit, Design, FitOptions, LinkFunction};
use crate::linalg::{mean_sd, quantile_sorted, rows_of};
use crate::metrics::coefficient_names;
use crate::panel::PanelMatrix;
use crate::rng::stream_rng;

/// Block layout and replication count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BootstrapSpec {
    /// Number of blocks `L`.
    pub num_blocks: usize,
    /// Block length `q`.
    pub block_length: usize,
    /// Replications `B`.
    pub replications: usize,
    pub seed: u64,
}

impl BootstrapSpec {
    pub fn new(num_blocks: usize, block_length: usize, replications: usize, seed: u64) -> Result<Self> {
        if num_blocks == 0 || block_length == 0 || replications == 0 {
            return invalid("bootstrap needs at least one block of length one and one replication");
        }
        Ok(Self {
            num_blocks,
            block_length,
            replications,
            seed,
        })
    }

    /// `L` blocks of length `q = floor(n / L)` over `n = T - h` usable rows.
    pub fn from_num_blocks(num_blocks: usize, usable_rows: usize, replications: usize, seed: u64) -> Result<Self> {
        if num_blocks == 0 || num_blocks > usable_rows {
            return invalid(format!("cannot split {usable_rows} rows into {num_blocks} blocks"));
        }
        Self::new(num_blocks, usable_rows / num_blocks, replications, seed)
    }

    /// Blocks of length `q = ceil(n^(1/3))`, `L = floor(n / q)`.
    pub fn default_for(usable_rows: usize, replications: usize, seed: u64) -> Result<Self> {
        if usable_rows == 0 {
            return invalid("no usable rows for the bootstrap");
        }
        let mut q = (usable_rows as f64).cbrt().ceil() as usize;
        // Guard against cbrt rounding just above an exact cube.
        while q > 1 && (q - 1).pow(3) >= usable_rows {
            q -= 1;
        }
        Self::new(usable_rows / q, q, replications, seed)
    }

    /// Rows per bootstrap sample, `qL`.
    pub fn sample_rows(&self) -> usize {
        self.num_blocks * self.block_length
    }
}

/// Block start offsets `s_1..s_L` for replication `b`, uniform on
/// `{0, .., qL - q}`.
pub fn block_starts(spec: &BootstrapSpec, replication: usize) -> Vec<usize> {
    let max_start = spec.sample_rows() - spec.block_length;
    let mut rng = stream_rng(spec.seed, replication as u64);
    (0..spec.num_blocks).map(|_| rng.random_range(0..=max_start)).collect()
}

/// Row indices of a bootstrap sample assembled from block starts.
pub fn block_rows(starts: &[usize], block_length: usize) -> Vec<usize> {
    starts.iter().flat_map(|&s| s..s + block_length).collect()
}

/// Bootstrap distribution of the coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub coefficient_names: Vec<String>,
    /// Estimate on the trimmed original sample (the `L = 1` bootstrap sample).
    pub beta_hat: Vec<f64>,
    /// `B' x k`, one row per converged refit, in replication order.
    #[serde(serialize_with = "serialize_rows")]
    pub draws: DMatrix<f64>,
    /// Replication index of each row of `draws`.
    pub draw_index: Vec<usize>,
    pub standard_errors: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub level: f64,
    pub failed_draws: usize,
    pub spec: BootstrapSpec,
}

fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    rows_of(m).serialize(s)
}

impl BootstrapResult {
    /// Percentile interval at another level from the same draws.
    pub fn percentile_interval(&self, level: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        percentile_ci(&self.draws, level)
    }

    /// One row per draw followed by `se`, `ci_lower`, `ci_upper` summary rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["row".to_string()];
        header.extend(self.coefficient_names.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in self.draws.row_iter().enumerate() {
            let mut rec = vec![format!("draw{}", self.draw_index[i])];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        for (label, values) in [
            ("estimate", &self.beta_hat),
            ("se", &self.standard_errors),
            ("ci_lower", &self.ci_lower),
            ("ci_upper", &self.ci_upper),
        ] {
            let mut rec = vec![label.to_string()];
            rec.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn percentile_ci(draws: &DMatrix<f64>, level: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(level > 0.0 && level < 1.0) {
        return invalid(format!("confidence level must lie in (0, 1), got {level}"));
    }
    if draws.nrows() == 0 {
        return Err(Error::BootstrapFailure("no converged draws".into()));
    }
    let alpha = (1.0 - level) / 2.0;
    let mut lo = Vec::with_capacity(draws.ncols());
    let mut hi = Vec::with_capacity(draws.ncols());
    for col in draws.column_iter() {
        let mut v: Vec<f64> = col.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        lo.push(quantile_sorted(&v, alpha));
        hi.push(quantile_sorted(&v, 1.0 - alpha));
    }
    Ok((lo, hi))
}

/// Two-step estimate on a resampled set of rows: factors from the selected
/// panel rows, then the likelihood fit on the matching design rows.
fn refit(
    design: &Design,
    panel: &PanelMatrix,
    rows: &[usize],
    d: usize,
    link: LinkFunction,
    opts: &FitOptions,
) -> Result<Vec<f64>> {
    let sample = design.select_rows(rows)?;
    let sample = if d == 0 {
        sample.with_factors(DMatrix::zeros(rows.len(), 0))?
    } else {
        let est = estimate_factors(&panel.select_rows(rows)?, d)?;
        sample.with_factors(est.factors)?
    };
    let fitted = fit(&sample, link, opts)?;
    if !fitted.converged {
        return Err(Error::NumericalFailure("refit did not converge".into()));
    }
    Ok(fitted.beta)
}

/// Moving-block bootstrap of the factor-augmented estimator.
///
/// `panel` row `t` must be the predictor panel at the date of design row `t`
/// (so the panel has at least `design.n()` rows; extra trailing rows are
/// ignored). The design's factor block is replaced by factors re-estimated
/// with `d` components inside every replication. When `qL` is below the
/// number of design rows the most recent rows are dropped.
pub fn moving_block_bootstrap(
    design: &Design,
    panel: &PanelMatrix,
    d: usize,
    link: LinkFunction,
    spec: &BootstrapSpec,
    level: f64,
) -> Result<BootstrapResult> {
    moving_block_bootstrap_with(design, panel, d, link, spec, level, &FitOptions::default())
}

pub fn moving_block_bootstrap_with(
    design: &Design,
    panel: &PanelMatrix,
    d: usize,
    link: LinkFunction,
    spec: &BootstrapSpec,
    level: f64,
    opts: &FitOptions,
) -> Result<BootstrapResult> {
    if !(level > 0.0 && level < 1.0) {
        return invalid(format!("confidence level must lie in (0, 1), got {level}"));
    }
    let n = design.n();
    if panel.t() < n {
        return invalid(format!("panel has {} rows but the design has {n}", panel.t()));
    }
    if spec.block_length > n {
        return invalid(format!("block length {} exceeds the {n} usable rows", spec.block_length));
    }
    if spec.sample_rows() > n {
        return invalid(format!(
            "{} blocks of length {} need {} rows, only {n} available",
            spec.num_blocks,
            spec.block_length,
            spec.sample_rows()
        ));
    }

    let trimmed: Vec<usize> = (0..spec.sample_rows()).collect();
    let beta_hat = refit(design, panel, &trimmed, d, link, opts)?;

    let outcomes: Vec<Result<Vec<f64>>> = (0..spec.replications)
        .into_par_iter()
        .map(|b| {
            let rows = block_rows(&block_starts(spec, b), spec.block_length);
            refit(design, panel, &rows, d, link, opts)
        })
        .collect();

    let k = design.p() + d + 1;
    let mut kept = Vec::new();
    let mut draw_index = Vec::new();
    let mut failed = 0;
    for (b, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(beta) => {
                kept.push(beta);
                draw_index.push(b);
            }
            Err(e) => {
                debug!("bootstrap replication {b} failed: {e}");
                failed += 1;
            }
        }
    }
    if kept.is_empty() {
        return Err(Error::BootstrapFailure(format!(
            "all {} bootstrap refits failed",
            spec.replications
        )));
    }
    let draws = DMatrix::from_fn(kept.len(), k, |i, j| kept[i][j]);
    let standard_errors = draws
        .column_iter()
        .map(|c| mean_sd(&c.iter().copied().collect::<Vec<_>>()).1)
        .collect();
    let (ci_lower, ci_upper) = percentile_ci(&draws, level)?;
    Ok(BootstrapResult {
        coefficient_names: coefficient_names(design.p(), d),
        beta_hat,
        draws,
        draw_index,
        standard_errors,
        ci_lower,
        ci_upper,
        level,
        failed_draws: failed,
        spec: *spec,
    })
}
