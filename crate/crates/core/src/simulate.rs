//! Monte Carlo designs for the binary factor-augmented regression and the
//! replication driver that summarises coefficient RMSE and in-sample AUC.
//!
//! Model: `y_{t+1} = 1{beta0 + beta_w'w_t + beta_f'f_t - eps_{t+1} >= 0}` with
//! `beta = (-2, 1, 1, 1, 1)`, `w_1t ~ U(0,2)`, `w_2t ~ U(-3,3)`, unit-variance
//! AR(1) factors with `rho_i = 0.8^i` started at `U(0,2)`, and a panel
//! `x_it = lambda_i'f_t + gamma_it` with `lambda ~ U(0,6)`.

use std::io::Write;

use log::{debug, warn};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::factors::{estimate_factors, rotation_residual, select_num_factors, DEFAULT_D_MAX};
use crate::glm::{fit, fitted_probabilities, Design, FitOptions, LinkFunction, LOGISTIC_UNIT_SCALE};
use crate::linalg::{mean_sd, median};
use crate::metrics::{rmse, roc_auc, rotate_coefficients, RmseReport};
use crate::panel::PanelMatrix;
use crate::rng::stream_rng;

/// True coefficients in estimation order `(cons, w1, w2, f1, f2)`.
pub const BETA_TRUE: [f64; 5] = [-2.0, 1.0, 1.0, 1.0, 1.0];
/// Autoregressive coefficients of the two latent factors.
pub const FACTOR_RHO: [f64; 2] = [0.8, 0.64];
/// Number of latent factors in the design.
pub const TRUE_D: usize = 2;
/// Number of observed regressors in the design.
pub const OBSERVED_P: usize = 2;

/// One Monte Carlo design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DgpConfig {
    pub n: usize,
    pub t: usize,
    /// Distribution of the latent error `eps`, also the fitting link.
    pub error_link: LinkFunction,
    /// Distribution of the other random shocks (factor innovations and
    /// idiosyncratic panel noise). Normal draws in the probit design; the
    /// logistic design replaces all of them by the unit-variance logistic.
    pub shock_law: LinkFunction,
    pub rho_eps: f64,
    pub seed: u64,
    pub h: usize,
}

impl DgpConfig {
    /// Example 1 (normal shocks) or 2 (logistic shocks) crossed with DGP 1
    /// (i.i.d. errors), 2 (AR(1) errors, rho 0.3) or 3 (rho 0.7).
    pub fn preset(example: u8, dgp: u8, n: usize, t: usize, seed: u64) -> Result<Self> {
        let link = match example {
            1 => LinkFunction::Probit,
            2 => LinkFunction::LogisticUnitVariance,
            e => return invalid(format!("example must be 1 or 2, got {e}")),
        };
        let rho_eps = match dgp {
            1 => 0.0,
            2 => 0.3,
            3 => 0.7,
            g => return invalid(format!("dgp must be 1, 2 or 3, got {g}")),
        };
        Ok(Self {
            n,
            t,
            error_link: link,
            shock_law: link,
            rho_eps,
            seed,
            h: 1,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.n < 10 || self.t < 10 {
            return invalid(format!("simulation needs n, t >= 10 (got n={}, t={})", self.n, self.t));
        }
        if !(0.0..1.0).contains(&self.rho_eps) {
            return invalid(format!("rho_eps must lie in [0, 1), got {}", self.rho_eps));
        }
        if self.h != 1 {
            return invalid("the simulation design uses h = 1");
        }
        Ok(())
    }

    /// Example number implied by the error law (1 normal, 2 logistic).
    pub fn example(&self) -> u8 {
        match self.error_link {
            LinkFunction::Probit => 1,
            LinkFunction::LogisticUnitVariance => 2,
        }
    }

    /// DGP label implied by `rho_eps`, when it is one of the presets.
    pub fn dgp(&self) -> Option<u8> {
        [(0.0, 1), (0.3, 2), (0.7, 3)]
            .iter()
            .find(|(r, _)| *r == self.rho_eps)
            .map(|(_, g)| *g)
    }
}

/// One simulated data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimDraw {
    /// `T x N` panel `x_it`.
    pub panel: PanelMatrix,
    /// `T x 2` observed regressors.
    pub w: DMatrix<f64>,
    /// `T x 2` latent factors.
    pub f_true: DMatrix<f64>,
    /// `N x 2` loadings.
    pub loadings_true: DMatrix<f64>,
    /// Latent errors `eps_1..eps_T`.
    pub eps: Vec<f64>,
    /// `y[t]` is the outcome at period `t + 1`, paired with regressors at `t`
    /// (`T - 1` entries).
    pub y: Vec<u8>,
    pub beta_true: [f64; 5],
}

/// Zero-mean, unit-variance draw from `law`.
pub fn standard_draw<R: Rng + ?Sized>(law: LinkFunction, rng: &mut R) -> f64 {
    match law {
        LinkFunction::Probit => rng.sample(StandardNormal),
        LinkFunction::LogisticUnitVariance => {
            let u: f64 = rng.random();
            // `random` can return 0; nudge it into the open interval.
            let u = u.max(f64::MIN_POSITIVE);
            (u / (1.0 - u)).ln() / LOGISTIC_UNIT_SCALE
        }
    }
}

/// Draw a data set from `config` using the generator's stream 0.
pub fn generate(config: &DgpConfig) -> Result<SimDraw> {
    generate_stream(config, 0)
}

/// Draw a data set from stream `stream` of `config.seed`.
pub fn generate_stream(config: &DgpConfig, stream: u64) -> Result<SimDraw> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, stream);
    let (n, t) = (config.n, config.t);
    let law = config.shock_law;

    let loadings = DMatrix::from_fn(n, TRUE_D, |_, _| rng.random_range(0.0..6.0));
    let mut prev = [rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)];
    let mut f = DMatrix::zeros(t, TRUE_D);
    let mut w = DMatrix::zeros(t, OBSERVED_P);
    for s in 0..t {
        for j in 0..TRUE_D {
            let rho = FACTOR_RHO[j];
            prev[j] = rho * prev[j] + (1.0 - rho * rho).sqrt() * standard_draw(law, &mut rng);
            f[(s, j)] = prev[j];
        }
        w[(s, 0)] = rng.random_range(0.0..2.0);
        w[(s, 1)] = rng.random_range(-3.0..3.0);
    }
    let mut x = &f * loadings.transpose();
    for v in x.iter_mut() {
        *v += standard_draw(law, &mut rng);
    }

    let rho = config.rho_eps;
    let scale = (1.0 - rho * rho).sqrt();
    let mut eps = Vec::with_capacity(t);
    let mut last = standard_draw(config.error_link, &mut rng);
    eps.push(last);
    for _ in 1..t {
        last = rho * last + scale * standard_draw(config.error_link, &mut rng);
        eps.push(last);
    }

    let y = (0..t - 1)
        .map(|s| {
            let index = BETA_TRUE[0]
                + BETA_TRUE[1] * w[(s, 0)]
                + BETA_TRUE[2] * w[(s, 1)]
                + BETA_TRUE[3] * f[(s, 0)]
                + BETA_TRUE[4] * f[(s, 1)];
            (index - eps[s + 1] >= 0.0) as u8
        })
        .collect();

    Ok(SimDraw {
        panel: PanelMatrix::from_matrix(x)?,
        w,
        f_true: f,
        loadings_true: loadings,
        eps,
        y,
        beta_true: BETA_TRUE,
    })
}

impl SimDraw {
    /// Design pairing `(w_t, f_t)` with `y_{t+1}`, using the given `T x d`
    /// factor matrix (estimated or true).
    pub fn design(&self, factors: &DMatrix<f64>) -> Result<Design> {
        let rows = self.y.len();
        if factors.nrows() != rows + 1 {
            return invalid(format!("factor matrix has {} rows, expected {}", factors.nrows(), rows + 1));
        }
        Design::new(
            self.w.rows(0, rows).into_owned(),
            factors.rows(0, rows).into_owned(),
            self.y.clone(),
            1,
        )
    }
}

/// Controls for [`run_study`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyOptions {
    pub replications: usize,
    /// Select the number of factors by the information criterion instead of
    /// fixing it at the true value.
    pub use_ic: bool,
    pub d_max: usize,
    pub fit: FitOptions,
}

impl StudyOptions {
    pub fn new(replications: usize) -> Self {
        Self {
            replications,
            use_ic: false,
            d_max: DEFAULT_D_MAX,
            fit: FitOptions::default(),
        }
    }
}

/// Outcome of one Monte Carlo replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replication {
    pub index: usize,
    pub d_hat: usize,
    pub beta_hat: Vec<f64>,
    /// Rotated truth; absent when `d_hat` differs from the true dimension.
    pub beta_rotated: Option<Vec<f64>>,
    /// `(1/T) sum ||f_hat_t - H'f_t||^2`, when the rotation exists.
    pub factor_rate: Option<f64>,
    pub auc: f64,
    pub converged: bool,
}

/// One failed replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationFailure {
    pub index: usize,
    pub kind: String,
    pub message: String,
}

/// Estimate factors, rotate the truth, fit and score one replication.
pub fn run_replication(config: &DgpConfig, index: usize, opts: &StudyOptions) -> Result<Replication> {
    let draw = generate_stream(config, index as u64)?;
    let d_hat = if opts.use_ic {
        let d_max = opts.d_max.min(config.n.min(config.t) - 1);
        select_num_factors(&draw.panel, d_max)?.d_hat
    } else {
        TRUE_D
    };

    let (factors, beta_rotated, factor_rate) = if d_hat == 0 {
        (DMatrix::zeros(config.t, 0), None, None)
    } else {
        let est = estimate_factors(&draw.panel, d_hat)?;
        if d_hat == TRUE_D {
            let est = est.with_rotation(&draw.f_true, &draw.loadings_true)?;
            let h = est.rotation.clone().expect("rotation attached");
            let rotated = rotate_coefficients(&draw.beta_true, &h)?;
            let rate = rotation_residual(&est, &draw.f_true, &h)?;
            (est.factors, Some(rotated), Some(rate))
        } else {
            (est.factors, None, None)
        }
    };

    let design = draw.design(&factors)?;
    let fitted = fit(&design, config.error_link, &opts.fit)?;
    if !fitted.converged {
        return Err(Error::NumericalFailure(format!(
            "Newton iteration stopped after {} steps with gradient {:e}",
            fitted.iterations, fitted.gradient_norm
        )));
    }
    let probs = fitted_probabilities(&fitted, &design)?;
    let auc = roc_auc(&probs, design.y())?.auc;
    Ok(Replication {
        index,
        d_hat,
        beta_hat: fitted.beta,
        beta_rotated,
        factor_rate,
        auc,
        converged: fitted.converged,
    })
}

/// Mean, median and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let (mean, std) = mean_sd(xs);
        Some(Self {
            mean,
            median: median(xs),
            std,
        })
    }
}

/// Aggregated results for one design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub config: DgpConfig,
    pub replications: usize,
    /// Coefficient RMSE over replications where the rotation exists.
    pub rmse: Option<RmseReport>,
    pub auc: Option<Summary>,
    pub factor_rate: Option<Summary>,
    /// Histogram of selected factor counts, indexed by `d`.
    pub d_hat_counts: Vec<usize>,
    pub failures: Vec<ReplicationFailure>,
    #[serde(skip)]
    pub draws: Vec<Replication>,
}

impl CellResult {
    /// Share of successful replications selecting the true dimension.
    pub fn correct_d_share(&self) -> f64 {
        let ok: usize = self.d_hat_counts.iter().sum();
        if ok == 0 {
            return 0.0;
        }
        self.d_hat_counts.get(TRUE_D).copied().unwrap_or(0) as f64 / ok as f64
    }
}

/// Run all replications of one design. Replication `r` uses random stream
/// `r` of `config.seed`, so results do not depend on scheduling.
pub fn run_cell(config: &DgpConfig, opts: &StudyOptions) -> Result<CellResult> {
    if opts.replications == 0 {
        return invalid("at least one replication is required");
    }
    config.validate()?;
    let outcomes: Vec<std::result::Result<Replication, ReplicationFailure>> = (0..opts.replications)
        .into_par_iter()
        .map(|r| {
            run_replication(config, r, opts).map_err(|e| ReplicationFailure {
                index: r,
                kind: e.kind().to_string(),
                message: e.to_string(),
            })
        })
        .collect();

    let mut draws = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => draws.push(r),
            Err(f) => {
                debug!("replication {} failed: {}", f.index, f.message);
                failures.push(f);
            }
        }
    }
    if !failures.is_empty() {
        warn!(
            "{} of {} replications failed for n={}, t={}",
            failures.len(),
            opts.replications,
            config.n,
            config.t
        );
    }

    let rotated: Vec<&Replication> = draws.iter().filter(|r| r.beta_rotated.is_some()).collect();
    let rmse_report = if rotated.is_empty() {
        None
    } else {
        let k = BETA_TRUE.len();
        let est = DMatrix::from_fn(rotated.len(), k, |i, j| rotated[i].beta_hat[j]);
        let truth = DMatrix::from_fn(rotated.len(), k, |i, j| rotated[i].beta_rotated.as_ref().unwrap()[j]);
        Some(rmse(&est, &truth, OBSERVED_P)?)
    };
    let aucs: Vec<f64> = draws.iter().map(|r| r.auc).collect();
    let rates: Vec<f64> = draws.iter().filter_map(|r| r.factor_rate).collect();
    let max_d = draws.iter().map(|r| r.d_hat).max().unwrap_or(0).max(TRUE_D);
    let mut d_hat_counts = vec![0; max_d + 1];
    for r in &draws {
        d_hat_counts[r.d_hat] += 1;
    }
    Ok(CellResult {
        config: *config,
        replications: opts.replications,
        rmse: rmse_report,
        auc: Summary::of(&aucs),
        factor_rate: Summary::of(&rates),
        d_hat_counts,
        failures,
        draws,
    })
}

/// Run every design in `grid`.
pub fn run_study(grid: &[DgpConfig], opts: &StudyOptions) -> Result<Vec<CellResult>> {
    grid.iter().map(|c| run_cell(c, opts)).collect()
}

/// The full `N x T` grid of the tables for one example and DGP.
pub fn table_grid(example: u8, dgp: u8, ns: &[usize], ts: &[usize], seed: u64) -> Result<Vec<DgpConfig>> {
    let mut grid = Vec::new();
    for &n in ns {
        for &t in ts {
            grid.push(DgpConfig::preset(example, dgp, n, t, seed)?);
        }
    }
    Ok(grid)
}

fn sorted_unique(xs: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = xs.collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn write_table<W: Write>(
    cells: &[CellResult],
    out: W,
    metrics: &[(&str, &dyn Fn(&CellResult) -> Option<f64>)],
) -> Result<()> {
    let ts = sorted_unique(cells.iter().map(|c| c.config.t));
    let mut panels: Vec<(u8, Option<u8>, f64)> = Vec::new();
    for c in cells {
        let key = (c.config.example(), c.config.dgp(), c.config.rho_eps);
        if !panels.contains(&key) {
            panels.push(key);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["example".to_string(), "dgp".to_string(), "N".to_string()];
    for (name, _) in metrics {
        header.extend(ts.iter().map(|t| format!("{name}_T{t}")));
    }
    w.write_record(&header)?;
    for (example, dgp, rho) in panels {
        let in_panel: Vec<&CellResult> = cells
            .iter()
            .filter(|c| c.config.example() == example && c.config.rho_eps == rho)
            .collect();
        let label = dgp.map(|g| g.to_string()).unwrap_or_else(|| format!("rho={rho}"));
        for n in sorted_unique(in_panel.iter().map(|c| c.config.n)) {
            let mut row = vec![example.to_string(), label.clone(), n.to_string()];
            for (_, get) in metrics {
                for &t in &ts {
                    let cell = in_panel.iter().find(|c| c.config.n == n && c.config.t == t);
                    row.push(fmt_opt(cell.and_then(|c| get(c))));
                }
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// RMSE table: one row per `(panel, N)`, one column per coefficient and `T`.
pub fn write_rmse_table<W: Write>(cells: &[CellResult], out: W) -> Result<()> {
    let names = ["all", "cons", "f1", "f2", "w1", "w2"];
    let getters: Vec<Box<dyn Fn(&CellResult) -> Option<f64>>> = names
        .iter()
        .map(|&name| -> Box<dyn Fn(&CellResult) -> Option<f64>> {
            if name == "all" {
                Box::new(|c: &CellResult| c.rmse.as_ref().map(|r| r.rmse_all))
            } else {
                Box::new(move |c: &CellResult| c.rmse.as_ref().and_then(|r| r.get(name)))
            }
        })
        .collect();
    let labels: Vec<String> = names.iter().map(|n| format!("rmse_{n}")).collect();
    let metrics: Vec<(&str, &dyn Fn(&CellResult) -> Option<f64>)> =
        labels.iter().map(|l| l.as_str()).zip(getters.iter().map(|g| g.as_ref())).collect();
    write_table(cells, out, &metrics)
}

/// AUC table: mean, median and standard deviation per `(panel, N)` and `T`.
pub fn write_auc_table<W: Write>(cells: &[CellResult], out: W) -> Result<()> {
    let mean = |c: &CellResult| c.auc.map(|s| s.mean);
    let med = |c: &CellResult| c.auc.map(|s| s.median);
    let std = |c: &CellResult| c.auc.map(|s| s.std);
    write_table(
        cells,
        out,
        &[("auc_mean", &mean), ("auc_median", &med), ("auc_std", &std)],
    )
}

/// Per-replication records in long format.
pub fn write_replications<W: Write>(cells: &[CellResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "example", "rho_eps", "n", "t", "replication", "d_hat", "auc", "b_cons", "b_w1", "b_w2", "b_f1", "b_f2",
    ])?;
    for c in cells {
        for r in &c.draws {
            let mut row = vec![
                c.config.example().to_string(),
                c.config.rho_eps.to_string(),
                c.config.n.to_string(),
                c.config.t.to_string(),
                r.index.to_string(),
                r.d_hat.to_string(),
                r.auc.to_string(),
            ];
            row.extend((0..5).map(|j| r.beta_hat.get(j).map(|b| b.to_string()).unwrap_or_default()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(n: usize, t: usize) -> DgpConfig {
        DgpConfig::preset(1, 1, n, t, 17).unwrap()
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&config(30, 50)).unwrap();
        let b = generate(&config(30, 50)).unwrap();
        assert_eq!(a, b);
        let c = generate_stream(&config(30, 50), 1).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn shapes_and_threshold_rule() {
        let draw = generate(&config(20, 40)).unwrap();
        assert_eq!(draw.panel.t(), 40);
        assert_eq!(draw.panel.n(), 20);
        assert_eq!(draw.y.len(), 39);
        for s in 0..39 {
            let idx = -2.0 + draw.w[(s, 0)] + draw.w[(s, 1)] + draw.f_true[(s, 0)] + draw.f_true[(s, 1)];
            assert_eq!(draw.y[s] == 1, idx - draw.eps[s + 1] >= 0.0);
        }
        assert!(draw.w.column(0).iter().all(|v| (0.0..2.0).contains(v)));
        assert!(draw.w.column(1).iter().all(|v| (-3.0..3.0).contains(v)));
        assert!(draw.loadings_true.iter().all(|v| (0.0..6.0).contains(v)));
    }

    #[test]
    fn factors_have_unit_variance() {
        let draw = generate(&config(10, 400)).unwrap();
        let f1: Vec<f64> = draw.f_true.column(0).iter().copied().collect();
        let (_, sd) = mean_sd(&f1);
        assert!((sd * sd - 1.0).abs() < 0.15 * 2.0, "{}", sd * sd);
        // Long series for a tighter check of the stationary variance.
        let long = generate(&DgpConfig::preset(1, 1, 10, 20_000, 3).unwrap()).unwrap();
        for j in 0..2 {
            let col: Vec<f64> = long.f_true.column(j).iter().copied().collect();
            let (_, sd) = mean_sd(&col);
            assert!((sd * sd - 1.0).abs() < 0.08, "factor {j}: {}", sd * sd);
        }
    }

    #[test]
    fn autoregressive_errors_keep_unit_variance() {
        for (example, dgp) in [(1, 3), (2, 2)] {
            let c = DgpConfig::preset(example, dgp, 10, 50_000, 5).unwrap();
            let draw = generate(&c).unwrap();
            let (_, sd) = mean_sd(&draw.eps);
            assert!((sd - 1.0).abs() < 0.03);
            let lag1: f64 = draw.eps.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (draw.eps.len() - 1) as f64;
            assert!((lag1 - c.rho_eps).abs() < 0.03, "{lag1}");
        }
    }

    #[test]
    fn logistic_draws_are_standardised() {
        let mut rng = stream_rng(8, 0);
        let xs: Vec<f64> = (0..200_000)
            .map(|_| standard_draw(LinkFunction::LogisticUnitVariance, &mut rng))
            .collect();
        let (mean, sd) = mean_sd(&xs);
        assert!(mean.abs() < 0.01 && (sd - 1.0).abs() < 0.01);
        let below = xs.iter().filter(|x| **x <= 0.5).count() as f64 / xs.len() as f64;
        assert!((below - LinkFunction::LogisticUnitVariance.cdf(0.5)).abs() < 0.005);
    }

    #[test]
    fn class_balance_matches_independent_generator() {
        // Straightforward re-implementation of the outcome rule with its own
        // generator; only the distribution of y is compared.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let periods = 1_000_000;
        let mut f = [rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)];
        let mut ones = 0usize;
        for _ in 0..periods {
            for j in 0..2 {
                let rho: f64 = 0.8f64.powi(j as i32 + 1);
                let k: f64 = rng.sample(StandardNormal);
                f[j] = rho * f[j] + (1.0 - rho * rho).sqrt() * k;
            }
            let w1 = rng.random_range(0.0..2.0);
            let w2 = rng.random_range(-3.0..3.0);
            let e: f64 = rng.sample(StandardNormal);
            if -2.0 + w1 + w2 + f[0] + f[1] - e >= 0.0 {
                ones += 1;
            }
        }
        let oracle = ones as f64 / periods as f64;

        let draw = generate(&DgpConfig::preset(1, 1, 10, 100_000, 21).unwrap()).unwrap();
        let freq = draw.y.iter().filter(|v| **v == 1).count() as f64 / draw.y.len() as f64;
        assert!((freq - oracle).abs() < 0.01, "{freq} vs {oracle}");
    }

    #[test]
    fn single_replication_aggregates_trivially() {
        let mut opts = StudyOptions::new(1);
        opts.fit = FitOptions::default();
        let cell = run_cell(&config(30, 60), &opts).unwrap();
        let auc = cell.auc.unwrap();
        assert_eq!(auc.mean, auc.median);
        assert_eq!(auc.std, 0.0);
        assert_eq!(auc.mean, cell.draws[0].auc);
        let rep = cell.rmse.unwrap();
        let direct: f64 = cell.draws[0]
            .beta_hat
            .iter()
            .zip(cell.draws[0].beta_rotated.as_ref().unwrap())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!((rep.rmse_all - direct).abs() < 1e-12);
    }

    #[test]
    fn tables_have_one_row_per_n() {
        let grid = table_grid(1, 1, &[20, 30], &[40, 60], 3).unwrap();
        let cells = run_study(&grid, &StudyOptions::new(3)).unwrap();
        let mut buf = Vec::new();
        write_rmse_table(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("example,dgp,N,rmse_all_T40,rmse_all_T60,rmse_cons_T40"));
        let mut buf = Vec::new();
        write_auc_table(&cells, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn invalid_presets() {
        assert!(DgpConfig::preset(3, 1, 100, 100, 0).is_err());
        assert!(DgpConfig::preset(1, 4, 100, 100, 0).is_err());
        assert!(generate(&DgpConfig::preset(1, 1, 5, 100, 0).unwrap()).is_err());
    }
}
