//! Gradients and Hessians of the discrete functionals with respect to the
//! nodal values. All vectors have the full grid length; the last node is the
//! Dirichlet node and callers drop it.

use crate::linalg::Tridiag;
use crate::radial::{flux, flux_delta, flux_prime, RadialGrid};

/// `∂/∂u_i Σ W_k |D_k|^p`.
pub(crate) fn grad_x(g: &RadialGrid, u: &[f64], p: f64) -> Vec<f64> {
    let h = g.h();
    let wm = g.mid_weights();
    let d: Vec<f64> = u.windows(2).map(|s| (s[1] - s[0]) / h).collect();
    let delta = flux_delta(&d, p);
    let mut out = vec![0.0; u.len()];
    for (k, (&dk, &wk)) in d.iter().zip(wm).enumerate() {
        let f = p * wk * flux(dk, p, delta) / h;
        out[k] -= f;
        out[k + 1] += f;
    }
    out
}

/// Tridiagonal Hessian of `Σ W_k |D_k|^p`. For `p > 2` the diffusivity is
/// floored at `(1e-12 max|D|)^{p-2}` so flat cells keep a nonzero pivot.
pub(crate) fn hess_x(g: &RadialGrid, u: &[f64], p: f64) -> Tridiag {
    let h = g.h();
    let wm = g.mid_weights();
    let n1 = u.len();
    let mut d: Vec<f64> = u.windows(2).map(|s| (s[1] - s[0]) / h).collect();
    let delta = flux_delta(&d, p);
    if p > 2.0 {
        let floor = 1e-12 * d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in &mut d {
            if v.abs() < floor {
                *v = floor;
            }
        }
    }
    let mut diag = vec![0.0; n1];
    let mut off = vec![0.0; n1 - 1];
    for (k, (&dk, &wk)) in d.iter().zip(wm).enumerate() {
        let c = p * wk * flux_prime(dk, p, delta) / (h * h);
        diag[k] += c;
        diag[k + 1] += c;
        off[k] -= c;
    }
    Tridiag::symmetric(diag, off)
}

/// `∂/∂u_i Σ w_j |u_j|^q = q w_i |u_i|^{q-2} u_i`.
pub(crate) fn grad_lq(g: &RadialGrid, u: &[f64], q: f64) -> Vec<f64> {
    u.iter()
        .zip(g.weights())
        .map(|(&v, &w)| q * w * v.abs().powf(q - 1.0) * v.signum())
        .collect()
}

/// Diagonal of the Hessian of `Σ w |u|^q`, `q(q-1) w |u|^{q-2}`, with a
/// floor on `|u|` when `q < 2`.
pub(crate) fn hess_lq(g: &RadialGrid, u: &[f64], q: f64) -> Vec<f64> {
    let floor = if q < 2.0 { 1e-12 * u.iter().fold(0.0f64, |m, v| m.max(v.abs())) } else { 0.0 };
    u.iter()
        .zip(g.weights())
        .map(|(&v, &w)| q * (q - 1.0) * w * v.abs().max(floor).powf(q - 2.0))
        .collect()
}

/// Sobolev-type preconditioner
/// `scale * [(p-1) Σ W κ(D) (δv)²/h² + shift Σ w v²]` on the first `m` nodes,
/// with the diffusivity `κ = |D|^{p-2}` bounded away from 0 and ∞.
pub(crate) fn preconditioner(g: &RadialGrid, u: &[f64], p: f64, shift: f64, scale: f64, m: usize) -> Tridiag {
    let h = g.h();
    let wm = g.mid_weights();
    let w = g.weights();
    let d: Vec<f64> = u.windows(2).map(|s| (s[1] - s[0]) / h).collect();
    let dmax = d.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m - 1];
    for k in 0..m {
        let kap = if p == 2.0 {
            1.0
        } else {
            let dk = d[k].abs().max(1e-2 * dmax);
            dk.powf(p - 2.0)
        };
        let c = scale * (p - 1.0) * wm[k] * kap / (h * h);
        diag[k] += c;
        if k + 1 < m {
            diag[k + 1] += c;
            off[k] -= c;
        }
    }
    // The origin node carries no trapezoid weight; give it a cell volume so
    // the shift keeps the matrix definite.
    let v0 = g.cell_volumes()[0];
    for (i, di) in diag.iter_mut().enumerate() {
        let wi = if i == 0 { v0 } else { w[i] };
        *di += scale * shift * wi;
    }
    Tridiag::symmetric(diag, off)
}
