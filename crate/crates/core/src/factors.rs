//! Principal-component factor extraction, the factor rotation matrix and
//! information-criterion selection of the number of factors.
//!
//! For a `T x N` panel `X` the estimated factors are `sqrt(T)` times the top
//! `d` eigenvectors of `XX'/(NT)`, so that `F'F/T = I_d`, and the loadings are
//! `X'F/T`. The eigenproblem is solved on whichever Gram matrix is smaller.

use log::warn;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::rows_of;
use crate::panel::PanelMatrix;

/// Relative gap below which the d-th and (d+1)-th eigenvalues count as tied.
pub const DEGENERATE_GAP: f64 = 1e-10;

/// Default upper bound on the number of factors searched by the criterion.
pub const DEFAULT_D_MAX: usize = 15;

/// Which Gram matrix the eigendecomposition is performed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramRoute {
    /// `T x T` when `T <= N`, otherwise `N x N`.
    Auto,
    /// `XX'/(NT)`, `T x T`.
    Time,
    /// `X'X/(NT)`, `N x N`; factors recovered as `X v / sqrt(N mu)`.
    Cross,
}

/// Output of the principal-component step.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorEstimate {
    /// `T x d`, normalised so that `F'F/T = I_d`.
    pub factors: DMatrix<f64>,
    /// `N x d`, equal to `X'F/T`.
    pub loadings: DMatrix<f64>,
    /// Top `d` eigenvalues of `XX'/(NT)`, descending.
    pub eigenvalues: Vec<f64>,
    /// `tr(XX')/(NT)`, the sum of all eigenvalues.
    pub total_variation: f64,
    /// Rotation towards known true factors (simulation only).
    pub rotation: Option<DMatrix<f64>>,
    /// Set when eigenvalue `d` and `d + 1` coincide within [`DEGENERATE_GAP`].
    pub degenerate_spectrum: bool,
}

impl FactorEstimate {
    pub fn d(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Share of total panel variation captured by the `d` factors.
    pub fn explained_share(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.total_variation
    }

    /// Attach the rotation matrix computed against known factors and loadings.
    pub fn with_rotation(mut self, true_factors: &DMatrix<f64>, true_loadings: &DMatrix<f64>) -> Result<Self> {
        self.rotation = Some(rotation_matrix(&self, true_factors, true_loadings)?);
        Ok(self)
    }

    /// Common component `F Lambda'`.
    pub fn common_component(&self) -> DMatrix<f64> {
        &self.factors * self.loadings.transpose()
    }
}

#[derive(Serialize)]
struct FactorEstimateJson {
    d: usize,
    eigenvalues: Vec<f64>,
    total_variation: f64,
    degenerate_spectrum: bool,
    factors: Vec<Vec<f64>>,
    loadings: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rotation: Option<Vec<Vec<f64>>>,
}

impl Serialize for FactorEstimate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FactorEstimateJson {
            d: self.d(),
            eigenvalues: self.eigenvalues.clone(),
            total_variation: self.total_variation,
            degenerate_spectrum: self.degenerate_spectrum,
            factors: rows_of(&self.factors),
            loadings: rows_of(&self.loadings),
            rotation: self.rotation.as_ref().map(rows_of),
        }
        .serialize(serializer)
    }
}

struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    route: GramRoute,
}

fn resolve_route(x: &DMatrix<f64>, route: GramRoute) -> GramRoute {
    match route {
        GramRoute::Auto if x.nrows() <= x.ncols() => GramRoute::Time,
        GramRoute::Auto => GramRoute::Cross,
        r => r,
    }
}

fn gram(x: &DMatrix<f64>, route: GramRoute) -> DMatrix<f64> {
    let scale = 1.0 / (x.nrows() * x.ncols()) as f64;
    match route {
        GramRoute::Time => (x * x.transpose()) * scale,
        _ => x.tr_mul(x) * scale,
    }
}

fn spectrum(x: &DMatrix<f64>, route: GramRoute) -> Result<Spectrum> {
    let route = resolve_route(x, route);
    let g = gram(x, route);
    let m = g.nrows();
    let eig = g
        .try_symmetric_eigen(f64::EPSILON, 1000 * m.max(10))
        .ok_or_else(|| Error::NumericalFailure("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum { values, vectors, route })
}

fn eigenvalues_desc(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    let g = gram(x, resolve_route(x, GramRoute::Auto));
    let mut vals: Vec<f64> = g.symmetric_eigenvalues().iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

/// Principal-component factors of a panel.
pub fn estimate_factors(x: &PanelMatrix, d: usize) -> Result<FactorEstimate> {
    estimate_factors_matrix(x.values(), d, GramRoute::Auto)
}

/// As [`estimate_factors`] on a bare `T x N` matrix with an explicit Gram route.
pub fn estimate_factors_matrix(x: &DMatrix<f64>, d: usize, route: GramRoute) -> Result<FactorEstimate> {
    let (t, n) = x.shape();
    if d == 0 || d > t.min(n) {
        return invalid(format!("number of factors d={d} must lie in 1..={}", t.min(n)));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("panel contains non-finite values");
    }
    let spec = spectrum(x, route)?;
    let tf = t as f64;
    let top = spec.values[0].max(0.0);

    let mut factors = DMatrix::zeros(t, d);
    match spec.route {
        GramRoute::Time => {
            for j in 0..d {
                factors.set_column(j, &(spec.vectors.column(j) * tf.sqrt()));
            }
        }
        _ => {
            for j in 0..d {
                let mu = spec.values[j];
                if !(mu > 1e-14 * top) {
                    return Err(Error::NumericalFailure(format!(
                        "eigenvalue {} is numerically zero; panel rank is below d={d}",
                        j + 1
                    )));
                }
                let f = x * spec.vectors.column(j) / (n as f64 * mu).sqrt();
                factors.set_column(j, &f);
            }
        }
    }
    let mut loadings = x.tr_mul(&factors) / tf;

    for j in 0..d {
        let col_sum: f64 = loadings.column(j).sum();
        let flip = if col_sum == 0.0 {
            loadings.column(j).iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0)
        } else {
            col_sum < 0.0
        };
        if flip {
            loadings.column_mut(j).neg_mut();
            factors.column_mut(j).neg_mut();
        }
    }

    let eigenvalues: Vec<f64> = spec.values[..d].iter().map(|v| v.max(0.0)).collect();
    let degenerate_spectrum = spec.values.len() > d && {
        let gap = spec.values[d - 1] - spec.values[d];
        gap <= DEGENERATE_GAP * spec.values[d - 1].abs()
    };
    if degenerate_spectrum {
        warn!(
            "eigenvalues {} and {} are tied ({:e}); the factor space is not identified",
            d,
            d + 1,
            spec.values[d - 1]
        );
    }
    let total_variation = x.norm_squared() / (t * n) as f64;

    Ok(FactorEstimate {
        factors,
        loadings,
        eigenvalues,
        total_variation,
        rotation: None,
        degenerate_spectrum,
    })
}

/// `H = (Lambda'Lambda/N)(F'F_hat/T) V^{-1}`, linking estimated to true factors.
pub fn rotation_matrix(
    estimate: &FactorEstimate,
    true_factors: &DMatrix<f64>,
    true_loadings: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (t, d) = estimate.factors.shape();
    let n = estimate.loadings.nrows();
    if true_factors.shape() != (t, d) {
        return invalid(format!(
            "true factors are {:?}, estimate is {t}x{d}",
            true_factors.shape()
        ));
    }
    if true_loadings.shape() != (n, d) {
        return invalid(format!(
            "true loadings are {:?}, estimate has N={n}, d={d}",
            true_loadings.shape()
        ));
    }
    let scale = estimate.eigenvalues[0].abs().max(1.0);
    if let Some(v) = estimate.eigenvalues.iter().find(|v| **v <= 1e-12 * scale) {
        return Err(Error::SingularRotation(format!("eigenvalue {v:e} is not positive")));
    }
    let ll = true_loadings.tr_mul(true_loadings) / n as f64;
    let ff = true_factors.tr_mul(&estimate.factors) / t as f64;
    let mut h = ll * ff;
    for (j, v) in estimate.eigenvalues.iter().enumerate() {
        h.column_mut(j).scale_mut(1.0 / v);
    }
    Ok(h)
}

/// `(1/T) sum_t ||f_hat_t - H' f_t||^2`: the mean squared distance between the
/// estimated factors and the rotated truth.
pub fn rotation_residual(estimate: &FactorEstimate, true_factors: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<f64> {
    if true_factors.shape() != estimate.factors.shape() || h.shape() != (estimate.d(), estimate.d()) {
        return invalid("dimension mismatch in rotation residual");
    }
    let rotated = true_factors * h;
    Ok((&estimate.factors - rotated).norm_squared() / estimate.factors.nrows() as f64)
}

/// Result of information-criterion factor selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorSelection {
    pub d_hat: usize,
    /// `IC(d)` for `d = 0..=d_max`.
    pub ic_values: Vec<f64>,
    /// Eigenvalues of `XX'/(NT)` for `d = 1..=d_max`.
    pub eigenvalues: Vec<f64>,
}

/// Penalty weight `log(C)/C` with `C = NT/(N+T)`.
pub fn ic_penalty(n: usize, t: usize) -> f64 {
    let c = (n * t) as f64 / (n + t) as f64;
    c.ln() / c
}

/// Choose the number of factors minimising
/// `IC(d) = log(SSR(d)/(NT)) + d log(C)/C`, `C = NT/(N+T)`, over `0..=d_max`.
///
/// `SSR(0)` is the raw sum of squares of the panel. Ties go to the smaller d.
pub fn select_num_factors(x: &PanelMatrix, d_max: usize) -> Result<FactorSelection> {
    select_num_factors_matrix(x.values(), d_max)
}

pub fn select_num_factors_matrix(x: &DMatrix<f64>, d_max: usize) -> Result<FactorSelection> {
    let (t, n) = x.shape();
    if d_max == 0 || d_max + 1 > t.min(n) {
        return invalid(format!("d_max={d_max} must lie in 1..={}", t.min(n).saturating_sub(1)));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return invalid("panel contains non-finite values");
    }
    let nt = (n * t) as f64;
    let total = x.norm_squared();
    if !(total > 0.0) {
        return invalid("panel is identically zero");
    }
    let vals = eigenvalues_desc(x)?;
    let penalty = ic_penalty(n, t);
    // The residual sum of squares after removing d components is
    // total - NT * sum of the top d eigenvalues. Below this floor the
    // subtraction is rounding noise, so the fit counts as exact.
    let floor = total * 1e-12;
    let mut ic_values = Vec::with_capacity(d_max + 1);
    let mut explained = 0.0;
    for d in 0..=d_max {
        if d > 0 {
            explained += nt * vals[d - 1].max(0.0);
        }
        let ssr = (total - explained).max(floor);
        ic_values.push((ssr / nt).ln() + d as f64 * penalty);
    }
    let mut d_hat = 0;
    for (d, v) in ic_values.iter().enumerate() {
        if *v < ic_values[d_hat] {
            d_hat = d;
        }
    }
    Ok(FactorSelection {
        d_hat,
        ic_values,
        eigenvalues: vals[..d_max].to_vec(),
    })
}
