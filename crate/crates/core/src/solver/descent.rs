//! Preconditioned projected descent on the mass sphere `Σ w |u|^p = a^p`.
//!
//! Directions are Sobolev gradients: the weak gradient is mapped through a
//! tridiagonal preconditioner and made tangent to the sphere with the same
//! metric. Iterates are renormalized and replaced by `|u|` after each step.

use crate::error::{Error, Result};
use crate::linalg::{dot, Tridiag};
use crate::radial::RadialGrid;

use super::discrete::grad_lq;

pub(crate) trait SphereObjective {
    fn grid(&self) -> &RadialGrid;
    fn p(&self) -> f64;
    /// Objective value, or `None` when `u` is inadmissible.
    fn value(&self, u: &[f64]) -> Option<f64>;
    /// Weak gradient at an admissible `u` (full grid length).
    fn gradient(&self, u: &[f64]) -> Vec<f64>;
    /// Preconditioner on the free nodes `0..n`.
    fn precond(&self, u: &[f64]) -> Tridiag;
    /// Optional replacement of an accepted iterate by an equivalent one
    /// (a dilation along which the objective is invariant).
    fn regauge(&self, _u: &[f64]) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }
    /// Extra constraint gradients (besides the mass) the direction must be
    /// tangent to.
    fn constraint_grads(&self, _u: &[f64]) -> Vec<Vec<f64>> {
        Vec::new()
    }
    /// Restores extra constraints after a step; `None` rejects the step.
    fn restore(&self, u: Vec<f64>) -> Option<Vec<f64>> {
        Some(u)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DescentOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Cap on the relative growth of `max |u|` per step.
    pub growth_cap: Option<f64>,
    /// Profiles whose half-maximum radius shrinks below this many grid
    /// spacings are reported as concentrating.
    pub concentration_cells: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct DescentOutcome {
    pub u: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Scales `|u|` onto the sphere `Σ w |u|^p = a^p`.
pub(crate) fn normalize(g: &RadialGrid, u: &mut [f64], p: f64, mass_p: f64) -> bool {
    let n = u.len() - 1;
    u[n] = 0.0;
    for v in u.iter_mut() {
        *v = v.abs();
    }
    let m: f64 = u.iter().zip(g.weights()).map(|(v, w)| w * v.powf(p)).sum();
    if !(m > 0.0) || !m.is_finite() {
        return false;
    }
    let c = (mass_p / m).powf(1.0 / p);
    for v in u.iter_mut() {
        *v *= c;
    }
    true
}

fn half_max_radius(g: &RadialGrid, u: &[f64]) -> f64 {
    let mx = u.iter().fold(0.0f64, |m, v| m.max(*v));
    let i = u.iter().position(|&v| v < 0.5 * mx).unwrap_or(u.len() - 1);
    g.nodes()[i]
}

/// Tangent Sobolev direction: `-P⁻¹(G - Σ θ_j c_j)` with `θ` chosen so the
/// direction is orthogonal to every constraint gradient `c_j`.
pub(crate) fn tangent_direction(pre: &Tridiag, grad: &[f64], cons: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = pre.len();
    let lu = pre.factor()?;
    let z = lu.solve(&grad[..m]);
    let zc: Vec<Vec<f64>> = cons.iter().map(|c| lu.solve(&c[..m])).collect();
    let k = cons.len();
    let mut d: Vec<f64> = z.iter().map(|v| -v).collect();
    if k > 0 {
        let a: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| dot(&cons[i][..m], &zc[j])).collect()).collect();
        let b: Vec<f64> = (0..k).map(|i| dot(&cons[i][..m], &z)).collect();
        let theta = crate::linalg::dense_solve(a, b)?;
        for (j, zj) in zc.iter().enumerate() {
            for (di, v) in d.iter_mut().zip(zj) {
                *di += theta[j] * v;
            }
        }
    }
    Ok(d)
}

pub(crate) fn descend<O: SphereObjective>(
    obj: &O,
    u0: Vec<f64>,
    mass_p: f64,
    opts: &DescentOptions,
) -> Result<DescentOutcome> {
    let g = obj.grid();
    let p = obj.p();
    let n = g.n();
    let mut u = u0;
    if !normalize(g, &mut u, p, mass_p) {
        return Err(Error::DegenerateInput("initial profile has zero mass".into()));
    }
    if let Some(v) = obj.regauge(&u)? {
        u = v;
    }
    let mut f = obj
        .value(&u)
        .ok_or_else(|| Error::ProjectionUnavailable("initial profile is inadmissible".into()))?;
    let mut alpha: f64 = 1.0;
    let mut stall = 0;
    for it in 0..opts.max_iter {
        let grad = obj.gradient(&u);
        let mut cons = vec![grad_lq(g, &u, p)];
        cons.extend(obj.constraint_grads(&u));
        let pre = obj.precond(&u);
        let d = tangent_direction(&pre, &grad, &cons)?;
        let slope = dot(&grad[..n], &d);
        let grad_norm = (-slope).max(0.0).sqrt();
        if grad_norm < opts.tol * (1.0 + f.abs()) || stall >= 25 {
            return Ok(DescentOutcome { u, value: f, iterations: it, converged: true });
        }
        let umax = u.iter().fold(0.0f64, |m, v| m.max(*v));
        let mut accepted = None;
        let mut tries = 0;
        while tries < 60 {
            tries += 1;
            let mut ut: Vec<f64> = u.clone();
            for i in 0..n {
                ut[i] += alpha * d[i];
            }
            if !normalize(g, &mut ut, p, mass_p) {
                alpha *= 0.5;
                continue;
            }
            if let Some(cap) = opts.growth_cap {
                let mt = ut.iter().fold(0.0f64, |m, v| m.max(*v));
                if mt > (1.0 + cap) * umax {
                    alpha *= 0.5;
                    continue;
                }
            }
            let Some(ut) = obj.restore(ut) else {
                alpha *= 0.5;
                continue;
            };
            match obj.value(&ut) {
                Some(ft) if ft <= f + 1e-4 * alpha * slope => {
                    accepted = Some((ut, ft));
                    break;
                }
                Some(ft) if ft < f && alpha < 1e-8 => {
                    accepted = Some((ut, ft));
                    break;
                }
                _ => alpha *= 0.5,
            }
            if alpha < 1e-14 {
                break;
            }
        }
        let Some((ut, ft)) = accepted else {
            // No decrease along the direction: at the round-off floor.
            return Ok(DescentOutcome {
                u,
                value: f,
                iterations: it,
                converged: grad_norm < 1e3 * opts.tol * (1.0 + f.abs()),
            });
        };
        if (f - ft).abs() <= 1e-15 * (1.0 + f.abs()) {
            stall += 1;
        } else {
            stall = 0;
        }
        u = ut;
        f = ft;
        alpha = (alpha * 2.0).min(4.0);
        if let Some(v) = obj.regauge(&u)? {
            u = v;
            f = obj.value(&u).ok_or_else(|| Error::Numeric("regauged profile became inadmissible".into()))?;
        }
        if let Some(cells) = opts.concentration_cells {
            let rh = half_max_radius(g, &u);
            if rh < cells * g.h() {
                return Err(Error::Concentration(format!(
                    "iterate concentrates: half-maximum radius {rh:.3e} spans fewer than {cells} grid cells"
                )));
            }
        }
    }
    Ok(DescentOutcome { u, value: f, iterations: opts.max_iter, converged: false })
}
