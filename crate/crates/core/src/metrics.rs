//! Evaluation statistics: ROC/AUC, the Estrella pseudo-R², coefficient RMSE
//! against rotated truth and marginal R² for factor interpretation.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::factors::FactorEstimate;
use crate::panel::PanelMatrix;

/// Empirical ROC curve over all distinct score thresholds.
///
/// The first point has threshold `+inf` (nothing classified positive); each
/// following point classifies `score >= threshold` as positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub thresholds: Vec<f64>,
    pub tp_rate: Vec<f64>,
    pub fp_rate: Vec<f64>,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

impl RocCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["threshold", "tp_rate", "fp_rate"])?;
        for i in 0..self.thresholds.len() {
            w.write_record([
                self.thresholds[i].to_string(),
                self.tp_rate[i].to_string(),
                self.fp_rate[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_labels(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return invalid(format!("{} scores for {} labels", scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return invalid("scores contain NaN");
    }
    if labels.iter().any(|l| *l > 1) {
        return invalid("labels must be 0 or 1");
    }
    let pos = labels.iter().filter(|l| **l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels(format!("{pos} positives and {neg} negatives")));
    }
    Ok((pos, neg))
}

/// ROC curve and trapezoidal AUC.
///
/// The area is accumulated in integer arithmetic, so it equals the
/// tie-adjusted pair statistic `(#concordant + #ties/2) / (n1 n0)` exactly
/// up to the final division.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    let (pos, neg) = check_labels(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = vec![f64::INFINITY];
    let mut tp_rate = vec![0.0];
    let mut fp_rate = vec![0.0];
    let (mut tp, mut fp) = (0u128, 0u128);
    let mut twice_area = 0u128;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += (fp - fp0) * (tp + tp0);
        thresholds.push(s);
        tp_rate.push(tp as f64 / pos as f64);
        fp_rate.push(fp as f64 / neg as f64);
    }
    let auc = twice_area as f64 / (2.0 * pos as f64 * neg as f64);
    Ok(RocCurve {
        thresholds,
        tp_rate,
        fp_rate,
        auc,
        positives: pos,
        negatives: neg,
    })
}

/// Estrella's pseudo-R²: `1 - (log L_u / log L_c)^(-(2/n) log L_c)`, where
/// `L_c` is the intercept-only likelihood.
pub fn pseudo_r2(loglik_unconstrained: f64, loglik_constrained: f64, n: usize) -> Result<f64> {
    let (lu, lc) = (loglik_unconstrained, loglik_constrained);
    if n == 0 {
        return invalid("pseudo R² needs n > 0");
    }
    if !lu.is_finite() || !lc.is_finite() || lu > 0.0 || lc > 0.0 {
        return invalid(format!("log-likelihoods must be finite and non-positive (got {lu}, {lc})"));
    }
    if lc == 0.0 {
        return Err(Error::UndefinedMeasure(
            "constrained log-likelihood is zero (constant outcome)".into(),
        ));
    }
    // Nested fits can differ by optimiser tolerance in the wrong direction.
    if lc > lu + 1e-8 * lc.abs().max(1.0) {
        return invalid(format!("constrained log-likelihood {lc} exceeds unconstrained {lu}"));
    }
    Ok(1.0 - (lu / lc).powf(-(2.0 / n as f64) * lc))
}

/// `beta° = diag(I_{p+1}, H^{-1}) beta`; `d` is taken from `h` and the
/// factor block is the trailing `d` entries of `beta`.
pub fn rotate_coefficients(beta_true: &[f64], h: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = h.nrows();
    if h.ncols() != d || d == 0 || beta_true.len() < d + 1 {
        return invalid(format!(
            "rotation is {}x{}, coefficient vector has length {}",
            h.nrows(),
            h.ncols(),
            beta_true.len()
        ));
    }
    let sv = h.clone().singular_values();
    if !(sv.max() > 0.0) || sv.min() <= 1e-12 * sv.max() || h.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularRotation("rotation matrix is not invertible".into()));
    }
    let lu = h.clone().lu();
    let split = beta_true.len() - d;
    let bf = DVector::from_column_slice(&beta_true[split..]);
    let rotated = lu
        .solve(&bf)
        .ok_or_else(|| Error::SingularRotation("rotation matrix is not invertible".into()))?;
    let mut out = beta_true[..split].to_vec();
    out.extend(rotated.iter());
    Ok(out)
}

/// Coefficient labels in estimation order: `cons, w1..wp, f1..fd`.
pub fn coefficient_names(p: usize, d: usize) -> Vec<String> {
    let mut names = vec!["cons".to_string()];
    names.extend((1..=p).map(|j| format!("w{j}")));
    names.extend((1..=d).map(|j| format!("f{j}")));
    names
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

/// Root mean squared error of estimates around each replication's rotated
/// truth. `per_coefficient` is ordered `cons, f1..fd, w1..wp`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub rmse_all: f64,
    pub per_coefficient: Vec<NamedValue>,
    pub replications: usize,
}

impl RmseReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.per_coefficient.iter().find(|v| v.name == name).map(|v| v.value)
    }
}

/// RMSE over `R` replications. Rows of both matrices are coefficient
/// vectors in estimation order `(cons, w, f)` with `p` observed regressors.
pub fn rmse(estimates: &DMatrix<f64>, beta_rotated: &DMatrix<f64>, p: usize) -> Result<RmseReport> {
    if estimates.shape() != beta_rotated.shape() {
        return invalid(format!(
            "estimates are {:?} but rotated truth is {:?}",
            estimates.shape(),
            beta_rotated.shape()
        ));
    }
    let (r, k) = estimates.shape();
    if r == 0 || k < 1 + p {
        return invalid(format!("cannot compute RMSE for {r} replications of {k} coefficients with p={p}"));
    }
    let diff = estimates - beta_rotated;
    let msq: Vec<f64> = diff
        .column_iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / r as f64)
        .collect();
    let names = coefficient_names(p, k - 1 - p);
    let mut order = vec![0];
    order.extend(1 + p..k);
    order.extend(1..1 + p);
    let per_coefficient = order
        .into_iter()
        .map(|j| NamedValue {
            name: names[j].clone(),
            value: msq[j].sqrt(),
        })
        .collect();
    Ok(RmseReport {
        rmse_all: msq.iter().sum::<f64>().sqrt(),
        per_coefficient,
        replications: r,
    })
}

/// Incremental explanatory power of each factor for each series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalR2 {
    pub series_ids: Vec<String>,
    /// `N x d` adjusted increments, `mR²_i(r) = R̄²_i(r) - R̄²_i(r-1)`.
    #[serde(serialize_with = "serialize_rows")]
    pub adjusted: DMatrix<f64>,
    /// `N x d` unadjusted increments.
    #[serde(serialize_with = "serialize_rows")]
    pub unadjusted: DMatrix<f64>,
    /// Per-factor cross-sectional averages of the adjusted increments.
    pub average: Vec<f64>,
}

fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::linalg::rows_of(m).serialize(s)
}

impl MarginalR2 {
    /// The `k` series with the largest adjusted increment for factor `r`
    /// (1-based), best first.
    pub fn top_series(&self, r: usize, k: usize) -> Vec<NamedValue> {
        if r == 0 || r > self.adjusted.ncols() {
            return Vec::new();
        }
        let col = self.adjusted.column(r - 1);
        let mut idx: Vec<usize> = (0..col.len()).collect();
        idx.sort_by(|&a, &b| col[b].total_cmp(&col[a]));
        idx.into_iter()
            .take(k)
            .map(|i| NamedValue {
                name: self.series_ids[i].clone(),
                value: col[i],
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.adjusted.ncols();
        let mut header = vec!["series".to_string()];
        header.extend((1..=d).map(|r| format!("f{r}")));
        w.write_record(&header)?;
        let mut avg = vec!["average".to_string()];
        avg.extend(self.average.iter().map(|v| v.to_string()));
        w.write_record(&avg)?;
        for (i, id) in self.series_ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend((0..d).map(|r| self.adjusted[(i, r)].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Regress every series on an intercept and the first `r` factors, for
/// `r = 1..d`, and report the R² increments.
///
/// The regressors `[1, f1, .., fd]` are orthonormalised once (Gram-Schmidt),
/// so the explained sum of squares of the nested regressions is cumulative.
/// Adjusted R² uses the `(T-1)/(T-r-1)` correction; negative increments
/// are kept.
pub fn marginal_r2(panel: &PanelMatrix, factors: &FactorEstimate) -> Result<MarginalR2> {
    let d = factors.d();
    let t = panel.t();
    if d == 0 {
        return invalid("marginal R² needs at least one factor");
    }
    if factors.factors.nrows() != t {
        return invalid(format!(
            "factors have {} rows, panel has {t}",
            factors.factors.nrows()
        ));
    }
    if t <= d + 1 {
        return invalid(format!("T={t} too short for {d} factors"));
    }
    let mut basis: Vec<DVector<f64>> = vec![DVector::from_element(t, 1.0 / (t as f64).sqrt())];
    for j in 0..d {
        let mut v = factors.factors.column(j).clone_owned();
        // Two passes keep the basis orthogonal to rounding precision.
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm <= 1e-10 * (t as f64).sqrt() {
            return Err(Error::NumericalFailure(format!("factor {} is collinear with earlier regressors", j + 1)));
        }
        basis.push(v / norm);
    }

    let x = panel.values();
    let n = panel.n();
    let mut adjusted = DMatrix::zeros(n, d);
    let mut unadjusted = DMatrix::zeros(n, d);
    for i in 0..n {
        let col = x.column(i);
        let mean = col.mean();
        let tss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
        if !(tss > 0.0) {
            return invalid(format!("series {} is constant", panel.series_ids()[i]));
        }
        let (mut explained, mut prev_r2, mut prev_adj) = (0.0, 0.0, 0.0);
        for r in 1..=d {
            explained += basis[r].dot(&col).powi(2);
            let r2 = explained / tss;
            let adj = 1.0 - (1.0 - r2) * (t as f64 - 1.0) / (t as f64 - r as f64 - 1.0);
            unadjusted[(i, r - 1)] = r2 - prev_r2;
            adjusted[(i, r - 1)] = adj - prev_adj;
            prev_r2 = r2;
            prev_adj = adj;
        }
    }
    let average = adjusted.column_iter().map(|c| c.mean()).collect();
    Ok(MarginalR2 {
        series_ids: panel.series_ids().to_vec(),
        adjusted,
        unadjusted,
        average,
    })
}
