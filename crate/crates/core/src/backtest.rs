//! In-sample evaluation and expanding-window out-of-sample forecasting of
//! recession probabilities.

use std::io::Write;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{assemble_design, AssembledDesign, RecessionSeries, SeriesBlock, TargetSpec};
use crate::error::{invalid, Error, Result};
use crate::factors::{estimate_factors, select_num_factors, FactorEstimate, DEFAULT_D_MAX};
use crate::glm::{fit, fitted_probabilities, predict_proba, Design, FitOptions, LinkFunction};
use crate::metrics::{pseudo_r2, roc_auc};
use crate::period::YearMonth;

/// Observable proxies used by the probit comparator.
pub const PROXY_SERIES: [&str; 8] = [
    "IPMANSICS", "CPIAUCSL", "BAAFFM", "GS1", "T5YFFM", "AWHMAN", "RPI", "S&P 500",
];

pub const DEFAULT_HORIZONS: [usize; 5] = [1, 3, 6, 9, 12];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Intercept plus principal-component factors of the panel (plus any
    /// observed regressors supplied in the inputs).
    BinaryFar,
    /// Intercept plus observed regressors only.
    ProbitObserved,
}

/// How many factors to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DPolicy {
    Fixed(usize),
    /// Information criterion on the first estimation window, then held fixed.
    Ic { d_max: usize },
    /// Information criterion re-run at every forecast origin.
    IcPerOrigin { d_max: usize },
}

impl Default for DPolicy {
    fn default() -> Self {
        DPolicy::Ic { d_max: DEFAULT_D_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestConfig {
    pub horizons: Vec<usize>,
    /// First forecast origin.
    pub oos_start: YearMonth,
    /// Last forecast origin; defaults to the last panel date.
    pub oos_end: Option<YearMonth>,
    pub model: Model,
    pub d_policy: DPolicy,
    pub link: LinkFunction,
    pub publication_lag: usize,
    /// Minimum number of estimation pairs at the first origin.
    pub min_window: usize,
    pub fit: FitOptions,
}

impl BacktestConfig {
    pub fn new(model: Model, oos_start: YearMonth) -> Self {
        Self {
            horizons: DEFAULT_HORIZONS.to_vec(),
            oos_start,
            oos_end: None,
            model,
            d_policy: DPolicy::default(),
            link: LinkFunction::Probit,
            publication_lag: 3,
            min_window: 60,
            fit: FitOptions::default(),
        }
    }
}

/// Data for a backtest: the transformed, complete predictor panel, optional
/// observed regressors and the recession indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestInputs {
    pub panel: SeriesBlock,
    pub observed: Option<SeriesBlock>,
    pub recessions: RecessionSeries,
}

impl BacktestInputs {
    pub fn new(panel: SeriesBlock, observed: Option<SeriesBlock>, recessions: RecessionSeries) -> Result<Self> {
        if panel.values.iter().any(|v| !v.is_finite()) {
            return invalid("predictor panel must be complete");
        }
        if panel.t() < 2 || panel.n() < 2 {
            return invalid("predictor panel must be at least 2x2");
        }
        Ok(Self {
            panel,
            observed,
            recessions,
        })
    }

    fn last_date(&self) -> YearMonth {
        *self.panel.dates.last().expect("non-empty panel")
    }
}

/// One out-of-sample forecast.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastRecord {
    pub target_date: YearMonth,
    pub horizon: usize,
    pub probability: f64,
    pub realized: u8,
    pub estimation_end: YearMonth,
    pub d: usize,
    pub estimation_rows: usize,
}

/// Fitted probability for one in-sample row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedPoint {
    pub regressor_date: YearMonth,
    pub target_date: YearMonth,
    pub probability: f64,
    pub realized: u8,
}

/// Evaluation of one horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub horizon: usize,
    pub model: Model,
    pub observations: usize,
    pub auc: Option<f64>,
    pub pseudo_r2: Option<f64>,
    pub loglik: Option<f64>,
    pub loglik_null: Option<f64>,
    pub d: usize,
    pub beta: Vec<f64>,
    /// Origins skipped because the fit failed (out of sample).
    pub skipped: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fitted: Vec<FittedPoint>,
}

/// Per-horizon outcome: a report or the reason the horizon failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonResult {
    pub horizon: usize,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

fn resolve_d(policy: DPolicy, window: &SeriesBlock) -> Result<usize> {
    match policy {
        DPolicy::Fixed(d) => Ok(d),
        DPolicy::Ic { d_max } | DPolicy::IcPerOrigin { d_max } => {
            let cap = window.t().min(window.n()).saturating_sub(1);
            let sel = select_num_factors(&window.standardized()?.to_panel()?, d_max.min(cap))?;
            Ok(sel.d_hat)
        }
    }
}

/// Principal-component factors from panel rows dated up to `end`, each
/// series standardised over that window.
pub fn window_factors(panel: &SeriesBlock, end: YearMonth, d: usize) -> Result<(SeriesBlock, Option<FactorEstimate>)> {
    let window = panel.window(None, Some(end))?;
    if d == 0 {
        return Ok((
            SeriesBlock::new(window.dates.clone(), vec![], nalgebra::DMatrix::zeros(window.t(), 0))?,
            None,
        ));
    }
    let est = estimate_factors(&window.standardized()?.to_panel()?, d)?;
    let ids = (1..=d).map(|j| format!("f{j}")).collect();
    Ok((SeriesBlock::new(window.dates.clone(), ids, est.factors.clone())?, Some(est)))
}

/// Regressor blocks for one estimation window.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub factors: Option<SeriesBlock>,
    pub observed: Option<SeriesBlock>,
}

fn window_blocks(inputs: &BacktestInputs, config: &BacktestConfig, end: YearMonth, d: usize) -> Result<Blocks> {
    let observed = match (&inputs.observed, config.model) {
        (Some(o), _) => Some(o.window(None, Some(end))?.standardized()?),
        (None, Model::ProbitObserved) => return invalid("the observed-regressor model needs observed regressors"),
        (None, Model::BinaryFar) => None,
    };
    let factors = match config.model {
        Model::ProbitObserved => None,
        Model::BinaryFar => Some(window_factors(&inputs.panel, end, d)?.0),
    };
    let factors = factors.filter(|f| f.n() > 0 || observed.is_none());
    Ok(Blocks { factors, observed })
}

fn assemble(blocks: &Blocks, target: &TargetSpec, end: YearMonth) -> Result<AssembledDesign> {
    assemble_design(blocks.factors.as_ref(), target, end, blocks.observed.as_ref())
}

fn target(inputs: &BacktestInputs, lag: usize, h: usize) -> TargetSpec {
    TargetSpec {
        recessions: inputs.recessions.clone(),
        publication_lag_months: lag,
        horizon: h,
    }
}

fn in_sample_horizon(inputs: &BacktestInputs, config: &BacktestConfig, d: usize, h: usize) -> Result<EvalReport> {
    let end = inputs.last_date();
    let blocks = window_blocks(inputs, config, end, d)?;
    let assembled = assemble(&blocks, &target(inputs, 0, h), end)?;
    let design = &assembled.design;
    let fitted = fit(design, config.link, &config.fit)?;
    if !fitted.converged {
        return Err(Error::NumericalFailure(format!("fit for h={h} did not converge")));
    }
    let probs = fitted_probabilities(&fitted, design)?;
    let auc = roc_auc(&probs, design.y())?.auc;
    let null = fit(&Design::intercept_only(design.y().to_vec(), h)?, config.link, &config.fit)?;
    let r2 = pseudo_r2(fitted.loglik, null.loglik, design.n()).ok();
    let points = (0..design.n())
        .map(|i| FittedPoint {
            regressor_date: assembled.regressor_dates[i],
            target_date: assembled.target_dates[i],
            probability: probs[i],
            realized: design.y()[i],
        })
        .collect();
    Ok(EvalReport {
        horizon: h,
        model: config.model,
        observations: design.n(),
        auc: Some(auc),
        pseudo_r2: r2,
        loglik: Some(fitted.loglik),
        loglik_null: Some(null.loglik),
        d: design.d(),
        beta: fitted.beta,
        skipped: 0,
        fitted: points,
    })
}

fn effective_d(config: &BacktestConfig, inputs: &BacktestInputs, window_end: YearMonth) -> Result<usize> {
    match config.model {
        Model::ProbitObserved => Ok(0),
        Model::BinaryFar => resolve_d(config.d_policy, &inputs.panel.window(None, Some(window_end))?),
    }
}

/// Full-sample fit per horizon (no publication lag). A failing horizon is
/// reported without aborting the others.
pub fn in_sample(inputs: &BacktestInputs, config: &BacktestConfig) -> Result<Vec<HorizonResult>> {
    let d = effective_d(config, inputs, inputs.last_date())?;
    info!("in-sample evaluation with d = {d}");
    Ok(config
        .horizons
        .iter()
        .map(|&h| match in_sample_horizon(inputs, config, d, h) {
            Ok(r) => HorizonResult {
                horizon: h,
                report: Some(r),
                error: None,
            },
            Err(e) => {
                warn!("in-sample h={h} failed: {e}");
                HorizonResult {
                    horizon: h,
                    report: None,
                    error: Some(e.to_string()),
                }
            }
        })
        .collect())
}

/// Forecast origins `oos_start..=oos_end` restricted to panel dates.
pub fn forecast_origins(inputs: &BacktestInputs, config: &BacktestConfig) -> Result<Vec<YearMonth>> {
    let last = inputs.last_date();
    let end = config.oos_end.unwrap_or(last).min(last);
    if config.oos_start < inputs.panel.dates[0] || config.oos_start > end {
        return invalid(format!(
            "out-of-sample start {} outside the panel range {}..{}",
            config.oos_start, inputs.panel.dates[0], end
        ));
    }
    Ok((0..=end.months_since(&config.oos_start))
        .map(|k| config.oos_start.add_months(k))
        .collect())
}

/// Estimation design at one origin: data dated up to the origin, targets at
/// least `publication_lag` months old.
pub fn origin_design(
    inputs: &BacktestInputs,
    config: &BacktestConfig,
    origin: YearMonth,
    d: usize,
    h: usize,
) -> Result<(AssembledDesign, Blocks)> {
    let blocks = window_blocks(inputs, config, origin, d)?;
    let assembled = assemble(&blocks, &target(inputs, config.publication_lag, h), origin)?;
    Ok((assembled, blocks))
}

fn forecast_at(inputs: &BacktestInputs, config: &BacktestConfig, origin: YearMonth, d: usize, h: usize) -> Result<Option<ForecastRecord>> {
    let target_date = origin.add_months(h as i64);
    let Some(realized) = inputs.recessions.get(target_date) else {
        return Ok(None);
    };
    let (assembled, blocks) = origin_design(inputs, config, origin, d, h)?;
    let fitted = fit(&assembled.design, config.link, &config.fit)?;
    if !fitted.converged {
        return Err(Error::NumericalFailure("fit did not converge".into()));
    }
    let row = |b: &Option<SeriesBlock>| -> Result<Vec<f64>> {
        match b {
            None => Ok(vec![]),
            Some(b) => {
                let r = b
                    .row_of(origin)
                    .ok_or_else(|| Error::InsufficientData(format!("no regressors at {origin}")))?;
                Ok(b.values.row(r).iter().copied().collect())
            }
        }
    };
    let probability = predict_proba(&fitted, &row(&blocks.observed)?, &row(&blocks.factors)?)?;
    Ok(Some(ForecastRecord {
        target_date,
        horizon: h,
        probability,
        realized,
        estimation_end: origin,
        d: assembled.design.d(),
        estimation_rows: assembled.design.n(),
    }))
}

/// Expanding-window forecasts of `P(y_{origin + h} = 1)` for every origin
/// and horizon. Records come back in chronological order per horizon;
/// origins whose target lies beyond the data are skipped, failed fits are
/// logged and counted.
pub fn out_of_sample(inputs: &BacktestInputs, config: &BacktestConfig) -> Result<(Vec<ForecastRecord>, Vec<HorizonResult>)> {
    let origins = forecast_origins(inputs, config)?;
    let first = origins[0];
    let d0 = effective_d(config, inputs, first)?;
    info!("out-of-sample: {} origins from {first}, initial d = {d0}", origins.len());

    for &h in &config.horizons {
        let (assembled, _) = origin_design(inputs, config, first, d0, h)?;
        if assembled.design.n() < config.min_window {
            return invalid(format!(
                "initial window has {} estimation pairs for h={h}; at least {} required",
                assembled.design.n(),
                config.min_window
            ));
        }
    }

    let per_origin_d: Vec<usize> = match (config.model, config.d_policy) {
        (Model::BinaryFar, DPolicy::IcPerOrigin { .. }) => origins
            .par_iter()
            .map(|&o| effective_d(config, inputs, o))
            .collect::<Result<_>>()?,
        _ => vec![d0; origins.len()],
    };

    let mut records = Vec::new();
    let mut results = Vec::new();
    for &h in &config.horizons {
        let outcomes: Vec<(YearMonth, Result<Option<ForecastRecord>>)> = origins
            .par_iter()
            .zip(per_origin_d.par_iter())
            .map(|(&o, &d)| (o, forecast_at(inputs, config, o, d, h)))
            .collect();
        let mut recs = Vec::new();
        let mut skipped = 0;
        for (o, out) in outcomes {
            match out {
                Ok(Some(r)) => recs.push(r),
                Ok(None) => {}
                Err(e) => {
                    warn!("origin {o}, h={h}: {e}");
                    skipped += 1;
                }
            }
        }
        let probs: Vec<f64> = recs.iter().map(|r| r.probability).collect();
        let labels: Vec<u8> = recs.iter().map(|r| r.realized).collect();
        let auc = roc_auc(&probs, &labels).ok().map(|r| r.auc);
        results.push(HorizonResult {
            horizon: h,
            report: Some(EvalReport {
                horizon: h,
                model: config.model,
                observations: recs.len(),
                auc,
                pseudo_r2: None,
                loglik: None,
                loglik_null: None,
                d: d0,
                beta: vec![],
                skipped,
                fitted: vec![],
            }),
            error: None,
        });
        records.extend(recs);
    }
    Ok((records, results))
}

/// Forecast records as CSV.
pub fn write_records_csv<W: Write>(records: &[ForecastRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["target_date", "horizon", "probability", "realized", "estimation_end", "d", "estimation_rows"])?;
    for r in records {
        w.write_record([
            r.target_date.to_string(),
            r.horizon.to_string(),
            r.probability.to_string(),
            r.realized.to_string(),
            r.estimation_end.to_string(),
            r.d.to_string(),
            r.estimation_rows.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fitted in-sample probabilities as CSV.
pub fn write_fitted_csv<W: Write>(points: &[FittedPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["regressor_date", "target_date", "probability", "realized"])?;
    for p in points {
        w.write_record([
            p.regressor_date.to_string(),
            p.target_date.to_string(),
            p.probability.to_string(),
            p.realized.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Summary table with one row per model and one column per horizon.
pub fn write_summary_table<W: Write>(rows: &[(String, Vec<HorizonResult>)], metric: &str, out: W) -> Result<()> {
    let mut horizons: Vec<usize> = rows.iter().flat_map(|(_, r)| r.iter().map(|x| x.horizon)).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["model".to_string()];
    header.extend(horizons.iter().map(|h| format!("h={h}")));
    w.write_record(&header)?;
    for (name, results) in rows {
        let mut rec = vec![name.clone()];
        for h in &horizons {
            let v = results
                .iter()
                .find(|r| r.horizon == *h)
                .and_then(|r| r.report.as_ref())
                .and_then(|r| match metric {
                    "auc" => r.auc,
                    "pseudo_r2" => r.pseudo_r2,
                    _ => None,
                });
            rec.push(v.map(|x| format!("{x:.3}")).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
