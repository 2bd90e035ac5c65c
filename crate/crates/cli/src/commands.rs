use std::collections::{BTreeSet, HashMap};
use std::io::{self, Write};

use binfar_core::backtest::{
    self, BacktestConfig, BacktestInputs, DPolicy, HorizonResult, Model, PROXY_SERIES,
};
use binfar_core::data::{self, RecessionSeries, SeriesBlock};
use binfar_core::factors::{estimate_factors, select_num_factors, FactorSelection};
use binfar_core::glm::{self, fitted_probabilities, Design, FitOptions, LinkFunction};
use binfar_core::inference::{moving_block_bootstrap_with, BootstrapResult, BootstrapSpec};
use binfar_core::metrics::{marginal_r2, pseudo_r2, roc_auc, RocCurve};
use binfar_core::period::YearMonth;
use binfar_core::simulate::{self, CellResult, StudyOptions};
use binfar_core::{plot, BinaryFarFit, Error, PanelMatrix, Result};
use log::{info, warn};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::args::*;
use crate::input::{load_panel, read_data, read_labels, read_scores, LoadedPanel};
use crate::output::{ManifestBuilder, Sink};
use crate::CliError;

type CmdResult = std::result::Result<(), CliError>;

pub struct Ctx {
    pub format: Option<Format>,
    pub manifest: ManifestBuilder,
}

impl Ctx {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn resolve_seed(seed: Option<u64>, ctx: &mut Ctx) -> u64 {
    let seed = seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    });
    ctx.manifest.seed(seed);
    seed
}

fn fit_options(a: &FitOptionArgs) -> std::result::Result<FitOptions, CliError> {
    if !(a.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    if a.max_iter == 0 {
        return Err(usage("--max-iter must be at least 1"));
    }
    Ok(FitOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        ..FitOptions::default()
    })
}

fn stdout_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load_source(source: &PanelArgs, ctx: &mut Ctx) -> std::result::Result<LoadedPanel, CliError> {
    let path = source.panel.as_deref().ok_or_else(|| usage("--panel is required"))?;
    ctx.manifest.input(path)?;
    Ok(load_panel(path, source.start, source.end)?)
}

/// Largest admissible `d_max` for a `T x N` panel.
fn cap_d_max(d_max: usize, panel: &PanelMatrix) -> Result<usize> {
    let cap = panel.t().min(panel.n()).saturating_sub(1);
    if cap == 0 {
        return Err(Error::InsufficientData("panel too small for factor selection".into()));
    }
    if d_max > cap {
        warn!("d_max lowered from {d_max} to {cap} by the panel dimensions");
    }
    Ok(d_max.min(cap))
}

// ---------------------------------------------------------------- ingest

#[derive(Serialize)]
struct IngestSummary {
    start: YearMonth,
    end: YearMonth,
    rows: usize,
    series: usize,
    dropped_series: Vec<String>,
    recession_months: Option<usize>,
    recession_episodes: Option<usize>,
}

pub fn ingest(a: &IngestArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.input(&a.panel)?;
    let raw = data::load_panel(&a.panel)?;
    let prepared = data::prepare_panel(&raw, a.start, a.end)?;
    let first = prepared.block.dates[0];
    let last = *prepared.block.dates.last().expect("non-empty panel");
    let recessions = match &a.recessions {
        Some(p) => {
            ctx.manifest.input(p)?;
            Some(data::load_recessions(p)?.over(first, last)?)
        }
        None => None,
    };
    let mut sink = Sink::new(Some(&a.out))?;
    data::write_cache(&a.out, &prepared, recessions.as_ref())?;
    sink.record(data::CACHE_PANEL);
    sink.record(data::CACHE_META);
    if recessions.is_some() {
        sink.record(data::CACHE_RECESSIONS);
    }
    let summary = IngestSummary {
        start: first,
        end: last,
        rows: prepared.block.t(),
        series: prepared.block.n(),
        dropped_series: prepared.dropped_series.clone(),
        recession_months: recessions.as_ref().map(|r| r.values.iter().filter(|v| **v == 1).count()),
        recession_episodes: recessions.as_ref().map(RecessionSeries::episodes),
    };
    stdout_json(&summary)?;
    sink.finish(&ctx.manifest)?;
    Ok(())
}

// ---------------------------------------------------------- select-factors

#[derive(Serialize)]
struct SelectionReport {
    d_hat: usize,
    d: usize,
    d_max: usize,
    rows: usize,
    series: usize,
    start: YearMonth,
    end: YearMonth,
    explained_share: Option<f64>,
    #[serde(flatten)]
    selection: FactorSelection,
}

fn write_ic_csv(sel: &FactorSelection, w: &mut dyn Write) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["d", "ic", "eigenvalue"])?;
    for (d, ic) in sel.ic_values.iter().enumerate() {
        let ev = if d == 0 { String::new() } else { sel.eigenvalues[d - 1].to_string() };
        c.write_record([d.to_string(), ic.to_string(), ev])?;
    }
    c.flush()?;
    Ok(())
}

pub fn select_factors(a: &SelectArgs, ctx: &mut Ctx) -> CmdResult {
    let loaded = load_source(&a.source, ctx)?;
    let block = loaded.block.standardized()?;
    let panel = block.to_panel()?;
    let d_max = cap_d_max(a.d_max, &panel)?;
    let selection = select_num_factors(&panel, d_max)?;
    let d = a.d.unwrap_or(selection.d_hat);
    info!("selected d = {} (d_max = {d_max})", selection.d_hat);
    let estimate = if d > 0 { Some(estimate_factors(&panel, d)?) } else { None };

    let report = SelectionReport {
        d_hat: selection.d_hat,
        d,
        d_max,
        rows: panel.t(),
        series: panel.n(),
        start: block.dates[0],
        end: *block.dates.last().expect("non-empty panel"),
        explained_share: estimate.as_ref().map(|e| e.explained_share()),
        selection,
    };
    match ctx.format_or(Format::Json) {
        Format::Json => stdout_json(&report)?,
        Format::Csv => write_ic_csv(&report.selection, &mut io::stdout().lock())?,
    }

    let mut sink = Sink::new(a.out.as_deref())?;
    sink.json("selection.json", &report)?;
    sink.file("ic.csv", |w| write_ic_csv(&report.selection, w))?;
    if let Some(est) = &estimate {
        let ids = (1..=d).map(|j| format!("f{j}")).collect();
        let factors = SeriesBlock::new(block.dates.clone(), ids, est.factors.clone())?;
        sink.file("factors.csv", |w| data::write_block_csv(&factors, w))?;
        sink.file("loadings.csv", |w| {
            let mut c = csv::Writer::from_writer(w);
            let mut header = vec!["series".to_string()];
            header.extend((1..=d).map(|j| format!("f{j}")));
            c.write_record(&header)?;
            for (i, id) in panel.series_ids().iter().enumerate() {
                let mut rec = vec![id.clone()];
                rec.extend(est.loadings.row(i).iter().map(|v| v.to_string()));
                c.write_record(&rec)?;
            }
            c.flush()?;
            Ok(())
        })?;
        if sink.has_dir() {
            let r2 = marginal_r2(&panel, est)?;
            sink.file("marginal_r2.csv", |w| r2.write_csv(w))?;
        }
        if ctx.format == Some(Format::Json) {
            sink.json("factors.json", est)?;
        }
    }
    sink.finish(&ctx.manifest)?;
    Ok(())
}

// ------------------------------------------------------- fit / bootstrap

struct BuiltDesign {
    design: Design,
    /// Standardised panel rows matching the design rows.
    panel: Option<PanelMatrix>,
    d: usize,
    selection: Option<FactorSelection>,
    names: Vec<String>,
    labels: Vec<String>,
}

fn build_design(a: &DesignArgs, ctx: &mut Ctx) -> std::result::Result<BuiltDesign, CliError> {
    ctx.manifest.input(&a.data)?;
    let w_cols = if a.no_w { Some(Vec::new()) } else { a.w_cols.clone() };
    let table = read_data(&a.data, &a.y_col, w_cols.as_deref())?;
    let n = table.y.len();
    let labels: Vec<String> = match &table.dates {
        Some(ds) => ds.iter().map(ToString::to_string).collect(),
        None => (1..=n).map(|i| i.to_string()).collect(),
    };

    let mut d = 0;
    let mut selection = None;
    let mut f = DMatrix::zeros(n, 0);
    let panel = match &a.source.panel {
        None => None,
        Some(_) => {
            let loaded = load_source(&a.source, ctx)?;
            let rows: Vec<usize> = match &table.dates {
                Some(ds) => ds
                    .iter()
                    .map(|dt| {
                        loaded
                            .block
                            .row_of(*dt)
                            .ok_or_else(|| Error::InsufficientData(format!("panel has no row for {dt}")))
                    })
                    .collect::<Result<_>>()?,
                None => {
                    if loaded.block.t() < n {
                        return Err(Error::InsufficientData(format!(
                            "panel has {} rows, data has {n}",
                            loaded.block.t()
                        ))
                        .into());
                    }
                    (0..n).collect()
                }
            };
            let panel = loaded.block.to_panel()?.select_rows(&rows)?.standardized()?;
            d = match a.d {
                Some(d) => d,
                None => {
                    let sel = select_num_factors(&panel, cap_d_max(a.d_max, &panel)?)?;
                    info!("information criterion selects d = {}", sel.d_hat);
                    let d = sel.d_hat;
                    selection = Some(sel);
                    d
                }
            };
            if d > 0 {
                f = estimate_factors(&panel, d)?.factors;
            }
            Some(panel)
        }
    };
    let mut names = vec!["cons".to_string()];
    names.extend(table.w_names.iter().cloned());
    names.extend((1..=d).map(|j| format!("f{j}")));
    Ok(BuiltDesign {
        design: Design::new(table.w, f, table.y, a.h)?,
        panel,
        d,
        selection,
        names,
        labels,
    })
}

#[derive(Serialize)]
struct Coefficient<'a> {
    name: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct FitReport<'a> {
    link: LinkFunction,
    observations: usize,
    h: usize,
    p: usize,
    d: usize,
    coefficients: Vec<Coefficient<'a>>,
    loglik: f64,
    loglik_null: Option<f64>,
    pseudo_r2: Option<f64>,
    auc: Option<f64>,
    iterations: usize,
    converged: bool,
    gradient_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_selection: Option<&'a FactorSelection>,
    fit: &'a BinaryFarFit,
}

fn write_coefficients(names: &[String], beta: &[f64], w: &mut dyn Write) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["name", "value"])?;
    for (n, b) in names.iter().zip(beta) {
        c.write_record([n.clone(), b.to_string()])?;
    }
    c.flush()?;
    Ok(())
}

pub fn fit(a: &FitCmdArgs, ctx: &mut Ctx) -> CmdResult {
    let opts = fit_options(&a.fit)?;
    let link: LinkFunction = a.fit.link.into();
    let b = build_design(&a.design, ctx)?;
    let fitted = glm::fit(&b.design, link, &opts)?;
    if !fitted.converged {
        warn!("fit did not converge in {} iterations", fitted.iterations);
    }

    let (probs, loglik_null, r2, auc) = if fitted.converged {
        let probs = fitted_probabilities(&fitted, &b.design)?;
        let null = glm::fit(&Design::intercept_only(b.design.y().to_vec(), b.design.h())?, link, &opts)?;
        let r2 = pseudo_r2(fitted.loglik, null.loglik, b.design.n()).ok();
        let auc = roc_auc(&probs, b.design.y()).ok().map(|r| r.auc);
        (Some(probs), Some(null.loglik), r2, auc)
    } else {
        (None, None, None, None)
    };
    let report = FitReport {
        link,
        observations: b.design.n(),
        h: b.design.h(),
        p: b.design.p(),
        d: b.d,
        coefficients: b
            .names
            .iter()
            .zip(&fitted.beta)
            .map(|(n, v)| Coefficient { name: n, value: *v })
            .collect(),
        loglik: fitted.loglik,
        loglik_null,
        pseudo_r2: r2,
        auc,
        iterations: fitted.iterations,
        converged: fitted.converged,
        gradient_norm: fitted.gradient_norm,
        d_selection: b.selection.as_ref(),
        fit: &fitted,
    };
    match ctx.format_or(Format::Json) {
        Format::Json => stdout_json(&report)?,
        Format::Csv => write_coefficients(&b.names, &fitted.beta, &mut io::stdout().lock())?,
    }

    let mut sink = Sink::new(a.out.as_deref())?;
    sink.json("fit.json", &report)?;
    sink.file("coefficients.csv", |w| write_coefficients(&b.names, &fitted.beta, w))?;
    if let Some(probs) = &probs {
        sink.file("fitted.csv", |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["row", "y", "probability"])?;
            for ((l, y), p) in b.labels.iter().zip(b.design.y()).zip(probs) {
                c.write_record([l.clone(), y.to_string(), p.to_string()])?;
            }
            c.flush()?;
            Ok(())
        })?;
    }
    sink.finish(&ctx.manifest)?;
    Ok(())
}

fn write_bootstrap_summary(res: &BootstrapResult, w: &mut dyn Write) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["name", "estimate", "se", "ci_lower", "ci_upper"])?;
    for (j, name) in res.coefficient_names.iter().enumerate() {
        c.write_record([
            name.clone(),
            res.beta_hat[j].to_string(),
            res.standard_errors[j].to_string(),
            res.ci_lower[j].to_string(),
            res.ci_upper[j].to_string(),
        ])?;
    }
    c.flush()?;
    Ok(())
}

pub fn bootstrap(a: &BootstrapArgs, ctx: &mut Ctx) -> CmdResult {
    let opts = fit_options(&a.fit)?;
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(usage("--level must lie in (0, 1)"));
    }
    let seed = resolve_seed(a.seed, ctx);
    let b = build_design(&a.design, ctx)?;
    let n = b.design.n();
    let spec = match (a.blocks, a.block_length) {
        (Some(l), Some(q)) => BootstrapSpec::new(l, q, a.reps, seed)?,
        (Some(l), None) => BootstrapSpec::from_num_blocks(l, n, a.reps, seed)?,
        (None, Some(q)) if q > 0 => BootstrapSpec::new(n / q, q, a.reps, seed)?,
        (None, Some(_)) => return Err(usage("--block-length must be at least 1")),
        (None, None) => BootstrapSpec::default_for(n, a.reps, seed)?,
    };
    info!(
        "bootstrap with L = {}, q = {}, B = {}",
        spec.num_blocks, spec.block_length, spec.replications
    );
    // Without factors the panel is never used; a placeholder satisfies the shape check.
    let panel = match b.panel {
        Some(p) => p,
        None => PanelMatrix::from_matrix(DMatrix::zeros(n.max(2), 2))?,
    };
    let mut res = moving_block_bootstrap_with(&b.design, &panel, b.d, a.fit.link.into(), &spec, a.level, &opts)?;
    res.coefficient_names = b.names.clone();
    if res.failed_draws > 0 {
        warn!("{} of {} bootstrap refits failed", res.failed_draws, spec.replications);
    }
    match ctx.format_or(Format::Csv) {
        Format::Csv => write_bootstrap_summary(&res, &mut io::stdout().lock())?,
        Format::Json => stdout_json(&res)?,
    }
    let mut sink = Sink::new(a.out.as_deref())?;
    sink.file("bootstrap.csv", |w| res.write_csv(w))?;
    sink.file("bootstrap_summary.csv", |w| write_bootstrap_summary(&res, w))?;
    sink.json("bootstrap.json", &res)?;
    sink.finish(&ctx.manifest)?;
    Ok(())
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct StudyReport<'a> {
    seed: u64,
    options: StudyOptions,
    cells: &'a [CellResult],
}

pub fn simulate(a: &SimulateArgs, ctx: &mut Ctx) -> CmdResult {
    if a.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let seed = resolve_seed(a.seed, ctx);
    let grid = simulate::table_grid(a.example, a.dgp, &a.n, &a.t, seed)?;
    let mut opts = StudyOptions::new(a.reps);
    opts.use_ic = a.use_ic;
    opts.d_max = a.d_max;
    let cells = simulate::run_study(&grid, &opts)?;
    for c in &cells {
        if !c.failures.is_empty() {
            warn!(
                "N={} T={}: {} of {} replications failed",
                c.config.n,
                c.config.t,
                c.failures.len(),
                c.replications
            );
        }
    }
    let report = StudyReport {
        seed,
        options: opts,
        cells: &cells,
    };
    match ctx.format_or(Format::Csv) {
        Format::Csv => simulate::write_rmse_table(&cells, io::stdout().lock())?,
        Format::Json => stdout_json(&report)?,
    }
    let mut sink = Sink::new(Some(&a.out))?;
    sink.file("rmse.csv", |w| simulate::write_rmse_table(&cells, w))?;
    sink.file("auc.csv", |w| simulate::write_auc_table(&cells, w))?;
    sink.json("study.json", &report)?;
    if a.replications {
        sink.file("replications.csv", |w| simulate::write_replications(&cells, w))?;
    }
    sink.finish(&ctx.manifest)?;
    Ok(())
}

// ---------------------------------------------------------------- backtest

fn model_of(m: ModelArg) -> (Model, &'static str, &'static str) {
    match m {
        ModelArg::Far => (Model::BinaryFar, "far", "Binary FAR"),
        ModelArg::Probit => (Model::ProbitObserved, "probit", "Probit"),
    }
}

#[derive(Serialize)]
struct ModelSummary {
    model: &'static str,
    results: Vec<HorizonResult>,
}

#[derive(Serialize)]
struct BacktestSummary {
    mode: &'static str,
    start: YearMonth,
    end: YearMonth,
    series: usize,
    publication_lag: usize,
    models: Vec<ModelSummary>,
}

/// Dated probabilities and outcomes for one (model, horizon).
struct Scored {
    label: &'static str,
    horizon: usize,
    dates: Vec<YearMonth>,
    probs: Vec<f64>,
    realized: Vec<u8>,
}

pub fn run_backtest(a: &BacktestArgs, ctx: &mut Ctx) -> CmdResult {
    if a.horizons.is_empty() || a.horizons.contains(&0) {
        return Err(usage("--horizons must list positive horizons"));
    }
    let fit = fit_options(&a.fit)?;
    let loaded = load_source(&a.source, ctx)?;
    let block = loaded.block;
    let first = block.dates[0];
    let last = *block.dates.last().expect("non-empty panel");
    let recessions = match &a.recessions {
        Some(p) => {
            ctx.manifest.input(p)?;
            data::load_recessions(p)?.over(first, last)?
        }
        None => loaded
            .recessions
            .ok_or_else(|| usage("--recessions is required unless the panel cache holds them"))?,
    };
    let d_policy = match (a.d, a.ic_every_origin) {
        (Some(d), _) => DPolicy::Fixed(d),
        (None, true) => DPolicy::IcPerOrigin { d_max: a.d_max },
        (None, false) => DPolicy::Ic { d_max: a.d_max },
    };
    let mode = match a.mode {
        Mode::Is => "is",
        Mode::Oos => "oos",
    };

    let mut models: Vec<ModelArg> = Vec::new();
    for m in &a.model {
        if !models.contains(m) {
            models.push(*m);
        }
    }

    let mut sink = Sink::new(Some(&a.out))?;
    let mut summaries = Vec::new();
    let mut table_rows = Vec::new();
    let mut scored: Vec<Scored> = Vec::new();
    for m in models {
        let (model, tag, label) = model_of(m);
        let observed = match model {
            Model::ProbitObserved => Some(block.select_series(&PROXY_SERIES)?),
            Model::BinaryFar => None,
        };
        let inputs = BacktestInputs::new(block.clone(), observed, recessions.clone())?;
        let mut cfg = BacktestConfig::new(model, a.oos_start.unwrap_or(first));
        cfg.horizons = a.horizons.clone();
        cfg.oos_end = a.oos_end;
        cfg.d_policy = d_policy;
        cfg.link = a.fit.link.into();
        cfg.publication_lag = a.lag;
        cfg.min_window = a.min_window;
        cfg.fit = fit;

        let mut results = match a.mode {
            Mode::Is => backtest::in_sample(&inputs, &cfg)?,
            Mode::Oos => {
                let (records, results) = backtest::out_of_sample(&inputs, &cfg)?;
                for &h in &cfg.horizons {
                    let rs: Vec<_> = records.iter().filter(|r| r.horizon == h).cloned().collect();
                    sink.file(&format!("oos_{tag}_h{h}.csv"), |w| backtest::write_records_csv(&rs, w))?;
                    scored.push(Scored {
                        label,
                        horizon: h,
                        dates: rs.iter().map(|r| r.target_date).collect(),
                        probs: rs.iter().map(|r| r.probability).collect(),
                        realized: rs.iter().map(|r| r.realized).collect(),
                    });
                }
                results
            }
        };
        if a.mode == Mode::Is {
            for r in &mut results {
                let Some(rep) = r.report.as_mut() else { continue };
                let pts = std::mem::take(&mut rep.fitted);
                sink.file(&format!("is_{tag}_h{}.csv", r.horizon), |w| backtest::write_fitted_csv(&pts, w))?;
                scored.push(Scored {
                    label,
                    horizon: r.horizon,
                    dates: pts.iter().map(|p| p.target_date).collect(),
                    probs: pts.iter().map(|p| p.probability).collect(),
                    realized: pts.iter().map(|p| p.realized).collect(),
                });
            }
        }
        for r in &results {
            if let Some(e) = &r.error {
                warn!("{label} h={}: {e}", r.horizon);
            }
        }
        table_rows.push((label.to_string(), results.clone()));
        summaries.push(ModelSummary { model: tag, results });
    }

    let summary = BacktestSummary {
        mode,
        start: first,
        end: last,
        series: block.n(),
        publication_lag: if a.mode == Mode::Is { 0 } else { a.lag },
        models: summaries,
    };
    sink.json("summary.json", &summary)?;
    sink.file("auc.csv", |w| backtest::write_summary_table(&table_rows, "auc", w))?;
    if a.mode == Mode::Is {
        sink.file("pseudo_r2.csv", |w| backtest::write_summary_table(&table_rows, "pseudo_r2", w))?;
    }
    if !a.no_plots {
        write_plots(&mut sink, mode, &a.horizons, &scored, &recessions)?;
    }
    match ctx.format_or(Format::Csv) {
        Format::Csv => backtest::write_summary_table(&table_rows, "auc", io::stdout().lock())?,
        Format::Json => stdout_json(&summary)?,
    }
    sink.finish(&ctx.manifest)?;
    Ok(())
}

fn write_plots(
    sink: &mut Sink,
    mode: &str,
    horizons: &[usize],
    scored: &[Scored],
    recessions: &RecessionSeries,
) -> Result<()> {
    for &h in horizons {
        let group: Vec<&Scored> = scored.iter().filter(|s| s.horizon == h && !s.dates.is_empty()).collect();
        if group.is_empty() {
            continue;
        }
        let curves: Vec<(&str, RocCurve)> = group
            .iter()
            .filter_map(|s| roc_auc(&s.probs, &s.realized).ok().map(|r| (s.label, r)))
            .collect();
        if !curves.is_empty() {
            let refs: Vec<(&str, &RocCurve)> = curves.iter().map(|(l, r)| (*l, r)).collect();
            let svg = plot::roc_svg(&format!("ROC, h = {h}"), &refs);
            sink.text(&format!("{mode}_roc_h{h}.svg"), &svg)?;
        }

        // Plot over the dates every model covers.
        let mut common: BTreeSet<YearMonth> = group[0].dates.iter().copied().collect();
        for s in &group[1..] {
            let ds: BTreeSet<YearMonth> = s.dates.iter().copied().collect();
            common = common.intersection(&ds).copied().collect();
        }
        let dates: Vec<YearMonth> = common.into_iter().collect();
        let series: Vec<(&str, Vec<f64>)> = group
            .iter()
            .map(|s| {
                let at: HashMap<YearMonth, f64> = s.dates.iter().copied().zip(s.probs.iter().copied()).collect();
                (s.label, dates.iter().map(|d| at[d]).collect())
            })
            .collect();
        let refs: Vec<(&str, &[f64])> = series.iter().map(|(l, v)| (*l, v.as_slice())).collect();
        let shade: Vec<u8> = dates.iter().map(|d| recessions.get(*d).unwrap_or(0)).collect();
        let svg = plot::probability_svg(&format!("Recession probability, h = {h}"), &dates, &refs, &shade);
        sink.text(&format!("{mode}_prob_h{h}.svg"), &svg)?;
    }
    Ok(())
}

// --------------------------------------------------------------------- roc

#[derive(Serialize)]
struct RocReport<'a> {
    auc: f64,
    positives: usize,
    negatives: usize,
    #[serde(flatten)]
    curve: &'a RocCurve,
}

pub fn roc(a: &RocArgs, ctx: &mut Ctx) -> CmdResult {
    ctx.manifest.input(&a.scores)?;
    ctx.manifest.input(&a.labels)?;
    let scores = read_scores(&a.scores)?;
    let labels = read_labels(&a.labels)?;
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        ))
        .into());
    }
    let curve = roc_auc(&scores, &labels)?;
    match ctx.format_or(Format::Csv) {
        Format::Csv => println!("auc {}", curve.auc),
        Format::Json => stdout_json(&RocReport {
            auc: curve.auc,
            positives: curve.positives,
            negatives: curve.negatives,
            curve: &curve,
        })?,
    }
    let mut sink = Sink::new(a.out.as_deref())?;
    sink.file("roc.csv", |w| curve.write_csv(w))?;
    sink.text("roc.svg", &plot::roc_svg("ROC", &[("scores", &curve)]))?;
    sink.finish(&ctx.manifest)?;
    Ok(())
}

pub fn dispatch(cmd: &Command, ctx: &mut Ctx) -> CmdResult {
    match cmd {
        Command::Ingest(a) => ingest(a, ctx),
        Command::SelectFactors(a) => select_factors(a, ctx),
        Command::Fit(a) => fit(a, ctx),
        Command::Bootstrap(a) => bootstrap(a, ctx),
        Command::Simulate(a) => simulate(a, ctx),
        Command::Backtest(a) => run_backtest(a, ctx),
        Command::Roc(a) => roc(a, ctx),
    }
}
