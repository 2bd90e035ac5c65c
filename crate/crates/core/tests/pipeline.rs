//! End-to-end checks of the two-step estimator on simulated draws.

use binfar_core::glm::fitted_probabilities;
use binfar_core::inference::{moving_block_bootstrap, BootstrapSpec};
use binfar_core::simulate::{generate, run_cell, DgpConfig, StudyOptions};
use binfar_core::{estimate_factors, fit, select_num_factors, FitOptions, LinkFunction};

#[test]
fn probit_recovers_the_direction_of_true_coefficients() {
    let cfg = DgpConfig::preset(1, 1, 120, 400, 3).unwrap();
    let draw = generate(&cfg).unwrap();
    let est = estimate_factors(&draw.panel, 2).unwrap();
    let design = draw.design(&est.factors).unwrap();
    let f = fit(&design, LinkFunction::Probit, &FitOptions::default()).unwrap();
    assert!(f.converged);
    assert!((f.beta[0] + 2.0).abs() < 1.0, "intercept {}", f.beta[0]);
    assert!((f.beta[1] - 1.0).abs() < 0.6 && (f.beta[2] - 1.0).abs() < 0.4);
    let p = fitted_probabilities(&f, &design).unwrap();
    assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn information_criterion_finds_two_factors() {
    let draw = generate(&DgpConfig::preset(1, 1, 150, 200, 9).unwrap()).unwrap();
    assert_eq!(select_num_factors(&draw.panel, 10).unwrap().d_hat, 2);
}

#[test]
fn narrower_intervals_nest_inside_wider_ones() {
    let draw = generate(&DgpConfig::preset(1, 2, 60, 150, 4).unwrap()).unwrap();
    let est = estimate_factors(&draw.panel, 2).unwrap();
    let design = draw.design(&est.factors).unwrap();
    let spec = BootstrapSpec::default_for(design.n(), 80, 17).unwrap();
    let res = moving_block_bootstrap(&design, &draw.panel, 2, LinkFunction::Probit, &spec, 0.95).unwrap();
    let (lo90, hi90) = res.percentile_interval(0.90).unwrap();
    for j in 0..res.beta_hat.len() {
        assert!(res.ci_lower[j] <= lo90[j] && lo90[j] <= hi90[j] && hi90[j] <= res.ci_upper[j]);
        assert!(res.standard_errors[j] > 0.0);
    }
}

#[test]
fn study_cells_do_not_depend_on_thread_count() {
    let cfg = DgpConfig::preset(2, 3, 50, 80, 21).unwrap();
    let opts = StudyOptions::new(12);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_cell(&cfg, &opts)).unwrap();
    let b = four.install(|| run_cell(&cfg, &opts)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.replications + a.failures.len(), 12);
}
