//! Binary-response maximum likelihood for the factor-augmented forecasting
//! equation `P(y_{t+h} = 1 | z_t) = F(beta' z_t)`, `z_t = (1, w_t', f_t')'`.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::linalg::select_rows;

/// Probabilities are kept inside `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-12;

/// `pi / sqrt(3)`: scale that gives the logistic distribution unit variance.
pub const LOGISTIC_UNIT_SCALE: f64 = 1.813_799_364_234_217_8;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Distribution of the latent error, used as the link between the index
/// `beta' z` and the response probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkFunction {
    /// Standard normal CDF.
    Probit,
    /// Logistic with zero mean and unit variance: `1 / (1 + exp(-x pi/sqrt(3)))`.
    LogisticUnitVariance,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LinkFunction {
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            LinkFunction::Probit => 0.5 * erfc(-x / SQRT_2),
            LinkFunction::LogisticUnitVariance => sigmoid(LOGISTIC_UNIT_SCALE * x),
        }
    }

    /// `1 - cdf(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            LinkFunction::Probit => 0.5 * erfc(x / SQRT_2),
            LinkFunction::LogisticUnitVariance => sigmoid(-LOGISTIC_UNIT_SCALE * x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            LinkFunction::Probit => INV_SQRT_2PI * (-0.5 * x * x).exp(),
            LinkFunction::LogisticUnitVariance => {
                let s = sigmoid(LOGISTIC_UNIT_SCALE * x);
                LOGISTIC_UNIT_SCALE * s * (1.0 - s)
            }
        }
    }

    pub fn pdf_prime(&self, x: f64) -> f64 {
        match self {
            LinkFunction::Probit => -x * self.pdf(x),
            LinkFunction::LogisticUnitVariance => {
                let s = sigmoid(LOGISTIC_UNIT_SCALE * x);
                LOGISTIC_UNIT_SCALE * LOGISTIC_UNIT_SCALE * s * (1.0 - s) * (1.0 - 2.0 * s)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LinkFunction::Probit => "probit",
            LinkFunction::LogisticUnitVariance => "logistic",
        }
    }

    /// Per-observation log-likelihood and its first two derivatives in the index.
    ///
    /// When the relevant probability is clamped the contribution is a
    /// constant, so both derivatives are zero.
    fn terms(&self, eta: f64, y: u8) -> (f64, f64, f64) {
        let prob = if y == 1 { self.cdf(eta) } else { self.sf(eta) };
        if prob <= PROB_CLAMP {
            return (PROB_CLAMP.ln(), 0.0, 0.0);
        }
        if prob >= 1.0 - PROB_CLAMP {
            return ((1.0 - PROB_CLAMP).ln(), 0.0, 0.0);
        }
        let sign = if y == 1 { 1.0 } else { -1.0 };
        let dens = self.pdf(eta);
        let dens1 = sign * self.pdf_prime(eta);
        let ratio = dens / prob;
        (prob.ln(), sign * ratio, dens1 / prob - ratio * ratio)
    }
}

impl fmt::Display for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "probit" | "normal" => Ok(LinkFunction::Probit),
            "logistic" | "logit" | "logistic_unit_variance" => Ok(LinkFunction::LogisticUnitVariance),
            other => invalid(format!("unknown link '{other}' (expected probit or logistic)")),
        }
    }
}

/// Regressors dated `t` paired with the outcome `y_{t+h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    w: DMatrix<f64>,
    f: DMatrix<f64>,
    y: Vec<u8>,
    h: usize,
}

impl Design {
    /// `w` is `n x p` observed regressors, `f` is `n x d` factor regressors and
    /// `y[t]` is the outcome paired with row `t`. Either block may have zero
    /// columns.
    pub fn new(w: DMatrix<f64>, f: DMatrix<f64>, y: Vec<u8>, h: usize) -> Result<Self> {
        let n = y.len();
        if w.nrows() != n || f.nrows() != n {
            return invalid(format!(
                "design blocks have {} and {} rows for {n} outcomes",
                w.nrows(),
                f.nrows()
            ));
        }
        if let Some(v) = y.iter().find(|v| **v > 1) {
            return invalid(format!("outcome {v} is not binary"));
        }
        if w.iter().chain(f.iter()).any(|v| !v.is_finite()) {
            return invalid("design contains non-finite regressors");
        }
        Ok(Self { w, f, y, h })
    }

    pub fn intercept_only(y: Vec<u8>, h: usize) -> Result<Self> {
        let n = y.len();
        Self::new(DMatrix::zeros(n, 0), DMatrix::zeros(n, 0), y, h)
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.w.ncols()
    }

    pub fn d(&self) -> usize {
        self.f.ncols()
    }

    /// Number of coefficients, `1 + p + d`.
    pub fn k(&self) -> usize {
        1 + self.p() + self.d()
    }

    /// The `n x k` matrix with rows `(1, w_t', f_t')`.
    pub fn regressors(&self) -> DMatrix<f64> {
        let p = self.p();
        DMatrix::from_fn(self.n(), self.k(), |t, j| match j {
            0 => 1.0,
            j if j <= p => self.w[(t, j - 1)],
            j => self.f[(t, j - 1 - p)],
        })
    }

    /// Same outcomes and observed regressors with a different factor block.
    pub fn with_factors(&self, f: DMatrix<f64>) -> Result<Self> {
        Self::new(self.w.clone(), f, self.y.clone(), self.h)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.iter().any(|&r| r >= self.n()) {
            return invalid("row index out of range");
        }
        Self::new(
            select_rows(&self.w, rows),
            select_rows(&self.f, rows),
            rows.iter().map(|&r| self.y[r]).collect(),
            self.h,
        )
    }

    pub fn ones(&self) -> usize {
        self.y.iter().filter(|v| **v == 1).count()
    }
}

/// Newton iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Convergence threshold on the max-norm of the score.
    pub tol: f64,
    pub max_iter: usize,
    /// Coefficients beyond this max-norm with a still-improving likelihood
    /// are reported as separation.
    pub beta_cap: f64,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100,
            beta_cap: 50.0,
            max_halvings: 30,
        }
    }
}

/// Maximum-likelihood fit of the binary forecasting equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinaryFarFit {
    /// `(beta_0, beta_w', beta_f')'`.
    pub beta: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub link: LinkFunction,
    pub converged: bool,
    pub p: usize,
    pub d: usize,
    pub n: usize,
    /// Log-likelihood after each accepted step, starting at `beta = 0`.
    #[serde(skip)]
    pub loglik_path: Vec<f64>,
}

impl BinaryFarFit {
    pub fn intercept(&self) -> f64 {
        self.beta[0]
    }

    pub fn beta_w(&self) -> &[f64] {
        &self.beta[1..1 + self.p]
    }

    pub fn beta_f(&self) -> &[f64] {
        &self.beta[1 + self.p..]
    }
}

fn check_beta(beta: &[f64], design: &Design) -> Result<()> {
    if beta.len() != design.k() {
        return invalid(format!(
            "beta has {} entries, design needs 1 + p + d = {}",
            beta.len(),
            design.k()
        ));
    }
    Ok(())
}

fn loglik_z(z: &DMatrix<f64>, y: &[u8], link: LinkFunction, beta: &DVector<f64>) -> f64 {
    let eta = z * beta;
    eta.iter().zip(y).map(|(e, &yy)| link.terms(*e, yy).0).sum()
}

fn score_hessian_z(
    z: &DMatrix<f64>,
    y: &[u8],
    link: LinkFunction,
    beta: &DVector<f64>,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    let eta = z * beta;
    let mut ll = 0.0;
    let mut d1 = DVector::zeros(y.len());
    let mut d2 = DVector::zeros(y.len());
    for (t, (e, &yy)) in eta.iter().zip(y).enumerate() {
        let (l, l1, l2) = link.terms(*e, yy);
        ll += l;
        d1[t] = l1;
        d2[t] = l2;
    }
    let grad = z.tr_mul(&d1);
    let mut weighted = z.clone();
    for (t, mut row) in weighted.row_iter_mut().enumerate() {
        row.scale_mut(d2[t]);
    }
    let hess = z.tr_mul(&weighted);
    (ll, grad, hess)
}

/// `sum_t [y_t log F(beta'z_t) + (1 - y_t) log(1 - F(beta'z_t))]`, with the
/// probabilities clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub fn log_likelihood(beta: &[f64], design: &Design, link: LinkFunction) -> Result<f64> {
    check_beta(beta, design)?;
    Ok(loglik_z(
        &design.regressors(),
        design.y(),
        link,
        &DVector::from_column_slice(beta),
    ))
}

/// Analytic score vector and Hessian matrix of [`log_likelihood`].
pub fn score_and_hessian(beta: &[f64], design: &Design, link: LinkFunction) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_beta(beta, design)?;
    let (_, g, h) = score_hessian_z(
        &design.regressors(),
        design.y(),
        link,
        &DVector::from_column_slice(beta),
    );
    Ok((g, h))
}

fn check_rank(z: &DMatrix<f64>) -> Result<()> {
    let mut scaled = z.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::SingularDesign(format!("regressor column {j} is identically zero")));
        }
        col.scale_mut(1.0 / norm);
    }
    let sv = scaled.singular_values();
    if sv.min() <= 1e-10 * sv.max() {
        return Err(Error::SingularDesign(format!(
            "regressors are collinear (singular value ratio {:e})",
            sv.min() / sv.max()
        )));
    }
    Ok(())
}

/// Newton ascent direction `(-H)^{-1} g`, with a single `1e-10 I` ridge retry.
fn newton_direction(grad: &DVector<f64>, hess: &DMatrix<f64>) -> Result<DVector<f64>> {
    let neg = -hess;
    if let Some(ch) = Cholesky::new(neg.clone()) {
        return Ok(ch.solve(grad));
    }
    let k = neg.nrows();
    let ridged = neg + DMatrix::<f64>::identity(k, k) * 1e-10;
    match Cholesky::new(ridged) {
        Some(ch) => Ok(ch.solve(grad)),
        None => Err(Error::SingularDesign("Hessian is not negative definite".into())),
    }
}

/// Maximise the log-likelihood by Newton's method with step halving,
/// starting from `beta = 0`.
///
/// Reaching `max_iter`, or a line search that cannot improve the objective,
/// returns `converged = false` instead of an error.
pub fn fit(design: &Design, link: LinkFunction, opts: &FitOptions) -> Result<BinaryFarFit> {
    let n = design.n();
    let k = design.k();
    let ones = design.ones();
    if ones == 0 || ones == n {
        return Err(Error::DegenerateOutcome(format!(
            "outcome is constant ({ones} ones in {n} observations)"
        )));
    }
    if n <= k {
        return invalid(format!("{n} observations cannot identify {k} coefficients"));
    }
    let z = design.regressors();
    check_rank(&z)?;
    let y = design.y();

    let mut beta = DVector::zeros(k);
    let (mut ll, mut grad, mut hess) = score_hessian_z(&z, y, link, &beta);
    let mut path = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let gnorm = grad.amax();
        if gnorm < opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let step = newton_direction(&grad, &hess)?;
        // Near the optimum the predicted gain drops below the rounding noise
        // of the sum, so candidates within that noise are accepted.
        let slack = 1e-12 * (1.0 + ll.abs());
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand = &beta + &step * scale;
            let cand_ll = loglik_z(&z, y, link, &cand);
            if cand_ll.is_finite() && cand_ll >= ll - slack {
                accepted = Some((cand, cand_ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((cand, cand_ll)) = accepted else {
            break;
        };
        let rel_gain = (cand_ll - ll) / ll.abs().max(f64::MIN_POSITIVE);
        beta = cand;
        if beta.amax() > opts.beta_cap && rel_gain > 1e-10 {
            return Err(Error::Separation(format!(
                "coefficients exceed {} while the likelihood keeps increasing",
                opts.beta_cap
            )));
        }
        (ll, grad, hess) = score_hessian_z(&z, y, link, &beta);
        path.push(ll);
    }

    Ok(BinaryFarFit {
        beta: beta.iter().copied().collect(),
        loglik: ll,
        iterations,
        gradient_norm: grad.amax(),
        link,
        converged,
        p: design.p(),
        d: design.d(),
        n,
        loglik_path: path,
    })
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `F(beta_hat' z)` for one new regressor vector `z = (1, w', f')'`.
pub fn predict_proba(fit: &BinaryFarFit, w_new: &[f64], f_new: &[f64]) -> Result<f64> {
    if !fit.converged {
        return invalid("prediction from a fit that did not converge");
    }
    if w_new.len() != fit.p || f_new.len() != fit.d {
        return invalid(format!(
            "expected {} observed and {} factor regressors, got {} and {}",
            fit.p,
            fit.d,
            w_new.len(),
            f_new.len()
        ));
    }
    let index = fit.beta[0]
        + fit.beta_w().iter().zip(w_new).map(|(b, x)| b * x).sum::<f64>()
        + fit.beta_f().iter().zip(f_new).map(|(b, x)| b * x).sum::<f64>();
    Ok(clamp_prob(fit.link.cdf(index)))
}

/// Fitted probabilities for every row of a design.
pub fn fitted_probabilities(fit: &BinaryFarFit, design: &Design) -> Result<Vec<f64>> {
    if design.p() != fit.p || design.d() != fit.d {
        return invalid("design does not match fitted model");
    }
    let eta = design.regressors() * DVector::from_column_slice(&fit.beta);
    Ok(eta.iter().map(|e| clamp_prob(fit.link.cdf(*e))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use rand::Rng;
    use rand_distr::StandardNormal;

    use crate::rng::stream_rng;

    const LINKS: [LinkFunction; 2] = [LinkFunction::Probit, LinkFunction::LogisticUnitVariance];

    fn random_design(n: usize, p: usize, d: usize, seed: u64) -> (Design, Vec<f64>) {
        let mut rng = stream_rng(seed, 0);
        let w = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
        let f = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let beta: Vec<f64> = (0..1 + p + d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = (0..n)
            .map(|t| {
                let mut idx = beta[0];
                for j in 0..p {
                    idx += beta[1 + j] * w[(t, j)];
                }
                for j in 0..d {
                    idx += beta[1 + p + j] * f[(t, j)];
                }
                let e: f64 = rng.sample(StandardNormal);
                (idx - e >= 0.0) as u8
            })
            .collect();
        (Design::new(w, f, y, 1).unwrap(), beta)
    }

    fn bisect_inverse_normal(p: f64) -> f64 {
        // Trapezoid integration of the density for an independent CDF.
        let cdf = |x: f64| {
            let lo = -12.0;
            let steps = 200_000;
            let h = (x - lo) / steps as f64;
            let dens = |u: f64| (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
            let mut s = 0.5 * (dens(lo) + dens(x));
            for i in 1..steps {
                s += dens(lo + i as f64 * h);
            }
            s * h
        };
        let (mut a, mut b) = (-5.0, 5.0);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if cdf(m) < p {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn logistic_link_has_unit_variance() {
        let link = LinkFunction::LogisticUnitVariance;
        let h = 1e-3;
        let var: f64 = (-40_000..=40_000)
            .map(|i| {
                let x = i as f64 * h;
                x * x * link.pdf(x) * h
            })
            .sum();
        assert!((var - 1.0).abs() < 1e-6, "{var}");
        assert!((LOGISTIC_UNIT_SCALE - PI / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cdf_and_sf_are_complementary_and_increasing() {
        for link in LINKS {
            let mut prev = 0.0;
            for i in -80..=80 {
                let x = i as f64 * 0.1;
                let c = link.cdf(x);
                assert!(c >= prev);
                assert!((c + link.sf(x) - 1.0).abs() < 1e-15);
                prev = c;
            }
            assert_eq!(link.cdf(0.0), 0.5);
        }
    }

    #[test]
    fn zero_beta_gives_n_log_half() {
        let (design, _) = random_design(37, 2, 1, 1);
        for link in LINKS {
            let ll = log_likelihood(&[0.0; 4], &design, link).unwrap();
            assert!((ll - 37.0 * 0.5f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (design, _) = random_design(20, 2, 1, 2);
        assert!(log_likelihood(&[0.0; 3], &design, LinkFunction::Probit).is_err());
        assert!(score_and_hessian(&[0.0; 5], &design, LinkFunction::Probit).is_err());
    }

    #[test]
    fn log_likelihood_matches_naive_sum() {
        let (design, beta) = random_design(150, 2, 2, 3);
        for link in LINKS {
            let mut naive = 0.0;
            for t in 0..design.n() {
                let mut idx = beta[0];
                for j in 0..2 {
                    idx += beta[1 + j] * design.w()[(t, j)];
                    idx += beta[3 + j] * design.f()[(t, j)];
                }
                let p = link.cdf(idx).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                naive += if design.y()[t] == 1 { p.ln() } else { (1.0 - p).ln() };
            }
            let ll = log_likelihood(&beta, &design, link).unwrap();
            assert!((ll - naive).abs() < 1e-10, "{link}: {ll} vs {naive}");
        }
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let (design, _) = random_design(120, 2, 2, 4);
        let mut rng = stream_rng(44, 0);
        for link in LINKS {
            for _ in 0..5 {
                let beta: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (g, h) = score_and_hessian(&beta, &design, link).unwrap();
                let eps = 1e-5;
                for j in 0..5 {
                    let mut up = beta.clone();
                    let mut dn = beta.clone();
                    up[j] += eps;
                    dn[j] -= eps;
                    let fd = (log_likelihood(&up, &design, link).unwrap()
                        - log_likelihood(&dn, &design, link).unwrap())
                        / (2.0 * eps);
                    assert!((fd - g[j]).abs() < 1e-6, "grad {j}: {fd} vs {}", g[j]);
                    let (gu, _) = score_and_hessian(&up, &design, link).unwrap();
                    let (gd, _) = score_and_hessian(&dn, &design, link).unwrap();
                    for i in 0..5 {
                        let fdh = (gu[i] - gd[i]) / (2.0 * eps);
                        assert!((fdh - h[(i, j)]).abs() < 1e-4);
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_pair_has_zero_gradient_at_zero() {
        let design = Design::intercept_only(vec![1, 0], 0).unwrap();
        let (g, _) = score_and_hessian(&[0.0], &design, LinkFunction::Probit).unwrap();
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn hessian_is_negative_semidefinite() {
        let (design, _) = random_design(200, 2, 2, 5);
        let mut rng = stream_rng(55, 0);
        for link in LINKS {
            for _ in 0..20 {
                let beta: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
                let (_, h) = score_and_hessian(&beta, &design, link).unwrap();
                let eig = h.symmetric_eigenvalues();
                assert!(eig.max() <= 1e-8, "{link}: {}", eig.max());
            }
        }
    }

    #[test]
    fn balanced_intercept_only_fit_is_zero() {
        let y: Vec<u8> = (0..100).map(|i| (i % 2) as u8).collect();
        let design = Design::intercept_only(y, 0).unwrap();
        let fit = fit(&design, LinkFunction::Probit, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.beta[0].abs() < 1e-8);
    }

    #[test]
    fn intercept_only_fit_inverts_sample_frequency() {
        let y: Vec<u8> = (0..100).map(|i| (i < 30) as u8).collect();
        let design = Design::intercept_only(y, 0).unwrap();
        let fit = fit(&design, LinkFunction::Probit, &FitOptions::default()).unwrap();
        let oracle = bisect_inverse_normal(0.3);
        assert!((oracle - -0.524_400_5).abs() < 1e-6);
        assert!((fit.beta[0] - oracle).abs() < 1e-6, "{} vs {oracle}", fit.beta[0]);
        let expected = 30.0 * 0.3f64.ln() + 70.0 * 0.7f64.ln();
        assert!((fit.loglik - expected).abs() < 1e-9);
        assert!(fit.loglik <= 0.0);
    }

    #[test]
    fn fit_converges_with_monotone_path() {
        for seed in 0..10 {
            let (design, _) = random_design(150, 2, 2, 100 + seed);
            for link in LINKS {
                let fit = fit(&design, link, &FitOptions::default()).unwrap();
                assert!(fit.converged);
                assert!(fit.gradient_norm < 1e-8);
                for w in fit.loglik_path.windows(2) {
                    assert!(w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()));
                }
            }
        }
    }

    #[test]
    fn constant_outcome_is_refused() {
        let design = Design::new(DMatrix::from_element(10, 1, 1.0), DMatrix::zeros(10, 0), vec![0; 10], 0).unwrap();
        assert!(matches!(
            fit(&design, LinkFunction::Probit, &FitOptions::default()),
            Err(Error::DegenerateOutcome(_))
        ));
    }

    #[test]
    fn collinear_design_is_singular() {
        let (design, _) = random_design(50, 1, 0, 6);
        let w = DMatrix::from_fn(50, 2, |t, _| design.w()[(t, 0)]);
        let dup = Design::new(w, DMatrix::zeros(50, 0), design.y().to_vec(), 1).unwrap();
        assert!(matches!(
            fit(&dup, LinkFunction::Probit, &FitOptions::default()),
            Err(Error::SingularDesign(_))
        ));
    }

    #[test]
    fn perfect_separation_is_detected() {
        // A narrow margin forces the coefficients far past the cap before the
        // likelihood flattens out.
        let x: Vec<f64> = (0..40).map(|i| (i as f64 - 19.5) * 0.01).collect();
        let y: Vec<u8> = x.iter().map(|v| (*v > 0.0) as u8).collect();
        let design = Design::new(DMatrix::from_column_slice(40, 1, &x), DMatrix::zeros(40, 0), y, 0).unwrap();
        for link in LINKS {
            let res = fit(&design, link, &FitOptions::default());
            assert!(matches!(res, Err(Error::Separation(_))), "{link}: {res:?}");
        }
    }

    #[test]
    fn predictions() {
        let (design, _) = random_design(120, 2, 1, 7);
        let mut fit = fit(&design, LinkFunction::Probit, &FitOptions::default()).unwrap();
        let w = [0.3, -1.2];
        let f = [0.7];
        let idx = fit.beta[0] + fit.beta[1] * w[0] + fit.beta[2] * w[1] + fit.beta[3] * f[0];
        let p = predict_proba(&fit, &w, &f).unwrap();
        assert!((p - LinkFunction::Probit.cdf(idx)).abs() < 1e-12);
        assert!(predict_proba(&fit, &w, &[]).is_err());

        fit.beta = vec![0.0; 4];
        assert_eq!(predict_proba(&fit, &w, &f).unwrap(), 0.5);
        fit.beta = vec![1.0, 1.0, 0.0, 0.0];
        assert_eq!(predict_proba(&fit, &[-1.0, 0.0], &f).unwrap(), 0.5);
    }
}
