//! Fixtures shared by the kernel benchmarks.

use std::sync::Arc;

use pohozaev::{make_grid, ProblemParams, RadialFunction};

/// Gaussian profile on `[0, 20]` with `n` intervals in dimension 3.
pub fn gaussian(n: usize) -> RadialFunction {
    let grid = Arc::new(make_grid(20.0, n, 3).expect("valid grid"));
    RadialFunction::from_fn(grid, |r| (-r * r / 2.0).exp()).expect("finite profile")
}

/// Parameters `(N, p, q1, q2) = (3, 2.5, 3.5, 6)` at unit mass and coupling.
pub fn params() -> ProblemParams {
    ProblemParams::new(3, 2.5, 3.5, 6.0, 1.0, 1.0).expect("valid parameters")
}

/// Diagonally dominant symmetric tridiagonal test matrix with positive weights.
pub fn pencil(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let diag = (0..n).map(|i| 2.0 + (i as f64 * 0.37).sin().abs()).collect();
    let off = vec![-1.0; n - 1];
    let weight = (0..n).map(|i| 1.0 + 0.5 * (i as f64 * 0.11).cos()).collect();
    (diag, off, weight)
}
