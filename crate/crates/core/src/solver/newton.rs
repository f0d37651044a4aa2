//! Damped Newton iteration for nodal equations bordered by a few scalar
//! unknowns and constraints.
//!
//! Nodal unknowns are `u_0 .. u_{n-1}`; `u_n = 0` is the Dirichlet node. The
//! nodal equation at the origin is replaced by the symmetry condition
//! `u_0 = u_1`, which is what the weak equation there reduces to (the origin
//! carries no trapezoid weight) and which stays nondegenerate for `p > 2`.

use crate::error::{Error, Result};
use crate::linalg::{bordered_solve, Tridiag};
use crate::radial::RadialGrid;

use super::discrete::{grad_x, hess_lq, hess_x};

/// Nodal equation `(1/p) ∂X/∂u_i - Σ_j c_j w_i |u_i|^{e_j - 2} u_i` and its
/// Jacobian, restricted to the first `m = n` nodes.
pub(crate) struct NodalPart {
    pub f: Vec<f64>,
    pub jac: Tridiag,
    /// `(1/p) ∂X/∂u_i`, kept for scaling the residual.
    pub stiff: Vec<f64>,
}

pub(crate) fn nodal_part(g: &RadialGrid, u: &[f64], p: f64, terms: &[(f64, f64)]) -> NodalPart {
    let m = u.len() - 1;
    let gx = grad_x(g, u, p);
    let hx = hess_x(g, u, p);
    let w = g.weights();
    let stiff: Vec<f64> = gx[..m].iter().map(|v| v / p).collect();
    let mut f = stiff.clone();
    let mut diag: Vec<f64> = hx.diag[..m].iter().map(|v| v / p).collect();
    for &(c, e) in terms {
        let hq = hess_lq(g, &u[..m], e);
        for i in 0..m {
            f[i] -= c * w[i] * u[i].abs().powf(e - 1.0) * u[i].signum();
            diag[i] -= c * hq[i] / e;
        }
    }
    let lower: Vec<f64> = hx.lower[..m - 1].iter().map(|v| v / p).collect();
    let upper: Vec<f64> = hx.upper[..m - 1].iter().map(|v| v / p).collect();
    NodalPart { f, jac: Tridiag::new(lower, diag, upper), stiff }
}

/// A nodal system bordered by `k` scalar unknowns and `k` scalar equations.
pub(crate) trait Bordered {
    fn grid(&self) -> &RadialGrid;
    /// Nodal part at `(u, x)` (before the origin row is replaced).
    fn nodal(&self, u: &[f64], x: &[f64]) -> NodalPart;
    /// Derivatives of the nodal equations with respect to each extra unknown.
    fn nodal_extra_cols(&self, u: &[f64], x: &[f64]) -> Vec<Vec<f64>>;
    /// Extra equations, each divided by its natural scale.
    fn extra_eqs(&self, u: &[f64], x: &[f64]) -> Vec<f64>;
    /// Gradients of the scaled extra equations with respect to `u_0..u_{n-1}`
    /// and the extra unknowns.
    fn extra_jac(&self, u: &[f64], x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>);
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-11, max_iter: 60 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative strong-form residual of the nodal equations.
    pub residual: f64,
    /// Largest scaled extra-equation residual.
    pub extra_residual: f64,
    pub converged: bool,
}

struct Scales {
    stiff: f64,
    amp: f64,
}

fn strong_norm(g: &RadialGrid, f: &[f64]) -> f64 {
    let w = g.weights();
    f.iter().zip(w).skip(1).map(|(f, w)| f * f / w).sum::<f64>().sqrt()
}

fn merit<S: Bordered>(sys: &S, sc: &Scales, u: &[f64], x: &[f64]) -> (f64, f64, f64) {
    let np = sys.nodal(u, x);
    let el = strong_norm(sys.grid(), &np.f) / sc.stiff;
    let origin = (u[0] - u[1]) / sc.amp;
    let ex = sys.extra_eqs(u, x);
    let exm = ex.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let total = el * el + origin * origin + ex.iter().map(|v| v * v).sum::<f64>();
    (total, el, exm)
}

/// Runs damped Newton from `(u, x)`; `u` has full grid length with `u_n = 0`.
pub(crate) fn solve<S: Bordered>(sys: &S, mut u: Vec<f64>, mut x: Vec<f64>, opts: &NewtonOptions) -> Result<NewtonOutcome> {
    let g = sys.grid();
    let n = g.n();
    u[n] = 0.0;
    let np0 = sys.nodal(&u, &x);
    let sc = Scales {
        stiff: strong_norm(g, &np0.stiff).max(1e-300),
        amp: u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300),
    };
    let (mut m0, mut el, mut exm) = merit(sys, &sc, &u, &x);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if el < opts.tol && exm < opts.tol && ((u[0] - u[1]) / sc.amp).abs() < opts.tol {
            break;
        }
        iterations += 1;
        let mut np = sys.nodal(&u, &x);
        let mut cols = sys.nodal_extra_cols(&u, &x);
        // Origin row: s0 (u_0 - u_1) = 0.
        let s0 = np.jac.diag.get(1).copied().unwrap_or(1.0).abs().max(1e-300);
        np.f[0] = s0 * (u[0] - u[1]);
        np.jac.diag[0] = s0;
        np.jac.upper[0] = -s0;
        for c in &mut cols {
            c[0] = 0.0;
        }
        let (rows, c) = sys.extra_jac(&u, &x);
        let g_eq = sys.extra_eqs(&u, &x);
        let lu = match np.jac.factor() {
            Ok(lu) => lu,
            Err(e) => {
                return Err(Error::NonConvergence {
                    iterations,
                    reason: format!("Jacobian factorization failed: {e}"),
                    best: None,
                })
            }
        };
        let f_neg: Vec<f64> = np.f.iter().map(|v| -v).collect();
        let g_neg: Vec<f64> = g_eq.iter().map(|v| -v).collect();
        let (du, dx) = match bordered_solve(&lu, &cols, &rows, &c, &f_neg, &g_neg) {
            Ok(s) => s,
            Err(e) => {
                return Err(Error::NonConvergence { iterations, reason: format!("singular border: {e}"), best: None })
            }
        };
        let mut alpha = 1.0;
        let mut took = false;
        while alpha > 1e-6 {
            let mut ut = u.clone();
            for i in 0..n {
                ut[i] += alpha * du[i];
            }
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + alpha * b).collect();
            if ut.iter().all(|v| v.is_finite()) && xt.iter().all(|v| v.is_finite()) {
                let (mt, elt, ext) = merit(sys, &sc, &ut, &xt);
                if mt.is_finite() && mt <= (1.0 - 1e-4 * alpha) * m0 {
                    u = ut;
                    x = xt;
                    m0 = mt;
                    el = elt;
                    exm = ext;
                    took = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !took {
            break;
        }
    }
    let converged = el < opts.tol.max(1e-9) && exm < opts.tol.max(1e-9);
    Ok(NewtonOutcome { u, x, iterations, residual: el, extra_residual: exm, converged })
}
