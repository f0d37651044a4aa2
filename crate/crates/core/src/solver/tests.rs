use super::*;

fn params() -> ProblemParams {
    ProblemParams::new(3, 2.0, 2.5, 4.0, 1.0, 0.1).unwrap()
}

#[test]
fn multiplier_forms_agree_on_pohozaev_manifold_only_for_solutions() {
    let g = Arc::new(make_grid(20.0, 2000, 3).unwrap());
    let u = RadialFunction::from_fn(g, |r| (-r * r / 2.0).exp()).unwrap();
    let pr = params();
    let l1 = lagrange_multiplier(&u, &pr);
    let l2 = lagrange_multiplier_alt(&u, &pr);
    assert!(l1.is_finite() && l2.is_finite());
    assert!((l1 - l2).abs() > 1e-6);
}

#[test]
fn options_reject_nonpositive_tolerances() {
    let o = SolverOptions { grad_tol: 0.0, ..SolverOptions::default() };
    assert!(o.validate().is_err());
    let o = SolverOptions { max_iter: 0, ..SolverOptions::default() };
    assert!(o.validate().is_err());
}

#[test]
fn decay_rate_linear_case() {
    assert!((decay_rate(-4.0, 2.0) - 2.0).abs() < 1e-15);
}

#[test]
fn seeds_are_positive_inside() {
    let g = Arc::new(make_grid(10.0, 500, 3).unwrap());
    for s in seeds(&g, Branch::Plus, None) {
        assert!(s[..500].iter().all(|v| *v > 0.0));
    }
}

#[test]
fn ground_state_linear_diffusion() {
    let pr = params();
    let opts = SolverOptions { grid_n: 1500, ..SolverOptions::default() };
    let rec = minimize_ground(&pr, &opts).unwrap();
    assert!(rec.lambda < 0.0);
    // The discrete equation implies P = 0 only up to the O(h²) consistency error.
    assert!(rec.residuals.pohozaev < 1e-5, "{:?}", rec.residuals);
    assert!(rec.residuals.euler_lagrange < 1e-8, "{:?}", rec.residuals);
    assert!(rec.residuals.mass < 1e-12);
    assert!(rec.fiber_curvature > 0.0);
    assert!(rec.positivity_min > 0.0);
    assert!(rec.pohozaev_defect < 1e-5, "{}", rec.pohozaev_defect);
    let alt = lagrange_multiplier_alt(&rec.profile, &pr);
    assert!((alt - rec.lambda).abs() < 1e-5 * rec.lambda.abs());
}
