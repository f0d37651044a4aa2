//! Minimization over the degenerate part of the Pohozaev manifold,
//! `{u : ‖u‖_p = a, μ(u) = μ, s(u) = 1}`.
//!
//! Both `μ(u)` and `J(u) = Φ_{μ,u}(s(u))` are dilation invariant, so the
//! search runs over `{‖u‖_p = a, μ(u) = μ}` with directions tangent to the
//! mass and to `∇ ln μ`; `μ(u) = μ` is restored after every step by secant
//! moves along the preconditioned `∇ ln μ`, and the result is dilated to
//! `s(u) = 1` at the end.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::{mu_star, threshold_exponents};
use crate::fibering::{mass_scale, triple, triple_of, Branch, FiberMap};
use crate::linalg::{dot, Tridiag};
use crate::params::ProblemParams;
use crate::radial::{make_grid, RadialFunction, RadialGrid};

use super::descent::{self, descend, tangent_direction, DescentOptions, SphereObjective};
use super::discrete::{grad_lq, grad_x, preconditioner};
use super::newton::nodal_part;
use super::{lagrange_multiplier, make_record, SolutionRecord, SolverOptions};

/// Relative distance to `μ_a*` within which the extremal witness itself is
/// returned.
const AT_EXTREMAL_TOL: f64 = 1e-6;

/// Residuals of the two defining equations of the degenerate manifold and of
/// the associated Euler–Lagrange equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegenerateDiagnostics {
    /// `|Φ'(1)| / X`.
    pub first_variation: f64,
    /// `|Φ''(1)| / X`.
    pub second_variation: f64,
    /// Relative residual of `-pΔ_p u = Λu^{p-1} + μ q1γ1 u^{q1-1} + q2γ2 u^{q2-1}`
    /// with the least-squares `Λ`.
    pub equation: f64,
    pub multiplier: f64,
}

struct OnLevel<'a> {
    g: &'a Arc<RadialGrid>,
    params: ProblemParams,
    a_exp: f64,
    b_exp: f64,
}

impl OnLevel<'_> {
    fn mass_p(&self) -> f64 {
        self.params.a.powf(self.params.p)
    }

    fn log_mu(&self, u: &[f64]) -> Option<f64> {
        let t = triple_of(u, self.g, &self.params);
        (t.x > 0.0 && t.y > 0.0 && t.z > 0.0).then(|| FiberMap::new(t, &self.params).mu_threshold().ln())
    }

    fn grad_log_mu(&self, u: &[f64]) -> Vec<f64> {
        let pr = &self.params;
        let t = triple_of(u, self.g, pr);
        let gx = grad_x(self.g, u, pr.p);
        let gy = grad_lq(self.g, u, pr.q1);
        let gz = grad_lq(self.g, u, pr.q2);
        gx.iter()
            .zip(&gy)
            .zip(&gz)
            .map(|((a, b), c)| self.a_exp * a / t.x - b / t.y - self.b_exp * c / t.z)
            .collect()
    }

    fn mu_precond(&self, u: &[f64]) -> Tridiag {
        let t = triple_of(u, self.g, &self.params);
        preconditioner(self.g, u, self.params.p, t.x / self.mass_p(), self.a_exp * self.params.p / t.x, self.g.n())
    }

    /// Ascent (`sign = 1`) or descent direction for `ln μ`, tangent to the mass.
    fn mu_direction(&self, u: &[f64], sign: f64) -> Result<Vec<f64>> {
        let gr: Vec<f64> = self.grad_log_mu(u).iter().map(|v| -sign * v).collect();
        tangent_direction(&self.mu_precond(u), &gr, &[grad_lq(self.g, u, self.params.p)])
    }

    /// Moves `u` along the `ln μ` gradient until `μ(u) = target`.
    fn restore_level(&self, mut u: Vec<f64>, target: f64) -> Option<Vec<f64>> {
        let n = self.g.n();
        let goal = target.ln();
        for _ in 0..30 {
            let lm = self.log_mu(&u)?;
            let err = goal - lm;
            if err.abs() < 1e-13 {
                return Some(u);
            }
            let d = self.mu_direction(&u, 1.0).ok()?;
            let slope = dot(&self.grad_log_mu(&u)[..n], &d);
            if !(slope > 0.0) {
                return None;
            }
            let mut beta = err / slope;
            let mut ok = false;
            for _ in 0..30 {
                let mut v = u.clone();
                for i in 0..n {
                    v[i] += beta * d[i];
                }
                if descent::normalize(self.g, &mut v, self.params.p, self.mass_p()) {
                    if let Some(l) = self.log_mu(&v) {
                        if (goal - l).abs() < err.abs() {
                            u = v;
                            ok = true;
                            break;
                        }
                    }
                }
                beta *= 0.5;
            }
            if !ok {
                return None;
            }
        }
        let lm = self.log_mu(&u)?;
        ((goal - lm).abs() < 1e-10).then_some(u)
    }
}

impl SphereObjective for OnLevel<'_> {
    fn grid(&self) -> &RadialGrid {
        self.g
    }
    fn p(&self) -> f64 {
        self.params.p
    }
    fn value(&self, u: &[f64]) -> Option<f64> {
        let t = triple_of(u, self.g, &self.params);
        let f = FiberMap::new(t, &self.params);
        let lm = self.log_mu(u)?;
        ((lm - self.params.mu.ln()).abs() < 1e-9).then(|| f.phi(f.s_star()))
    }
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let pr = &self.params;
        let s = FiberMap::new(triple_of(u, self.g, pr), pr).s_star();
        let gx = grad_x(self.g, u, pr.p);
        let gy = grad_lq(self.g, u, pr.q1);
        let gz = grad_lq(self.g, u, pr.q2);
        let (cx, cy, cz) = (
            s.powf(pr.p) / pr.p,
            pr.mu / pr.q1 * s.powf(pr.q1 * pr.gamma1()),
            s.powf(pr.q2 * pr.gamma2()) / pr.q2,
        );
        gx.iter().zip(&gy).zip(&gz).map(|((a, b), c)| cx * a - cy * b - cz * c).collect()
    }
    fn precond(&self, u: &[f64]) -> Tridiag {
        let pr = &self.params;
        let t = triple_of(u, self.g, pr);
        let s = FiberMap::new(t, pr).s_star();
        preconditioner(self.g, u, pr.p, t.x / self.mass_p(), s.powf(pr.p), self.g.n())
    }
    fn constraint_grads(&self, u: &[f64]) -> Vec<Vec<f64>> {
        vec![self.grad_log_mu(u)]
    }
    fn restore(&self, u: Vec<f64>) -> Option<Vec<f64>> {
        self.restore_level(u, self.params.mu)
    }
    fn regauge(&self, u: &[f64]) -> Result<Option<Vec<f64>>> {
        let s = FiberMap::new(triple_of(u, self.g, &self.params), &self.params).s_star();
        if (s - 1.0).abs() <= 0.1 {
            return Ok(None);
        }
        let rf = RadialFunction::from_parts(self.g.clone(), u.to_vec());
        let mut v = mass_scale(&rf, s, &self.params)?.into_values();
        descent::normalize(self.g, &mut v, self.params.p, self.mass_p());
        Ok(self.restore_level(v, self.params.mu))
    }
}

/// Diagnostics of a candidate point of the degenerate manifold.
pub fn degenerate_diagnostics(u: &RadialFunction, params: &ProblemParams) -> DegenerateDiagnostics {
    let pr = params;
    let t = triple(u, pr);
    let f = FiberMap::new(t, pr);
    let g = u.grid();
    let b1 = pr.q1 * pr.gamma1();
    let b2 = pr.q2 * pr.gamma2();
    // Residual is linear in Λ: F = F0 - (Λ/p) e.
    let np = nodal_part(g, u.values(), pr.p, &[(pr.mu * b1 / pr.p, pr.q1), (b2 / pr.p, pr.q2)]);
    let w = g.weights();
    let m = np.f.len();
    let e: Vec<f64> = (0..m).map(|i| w[i] * u.values()[i].abs().powf(pr.p - 1.0)).collect();
    let (mut fe, mut ee) = (0.0, 0.0);
    for i in 1..m {
        fe += np.f[i] * e[i] / w[i];
        ee += e[i] * e[i] / w[i];
    }
    let lam_p = fe / ee;
    let num: f64 = (1..m).map(|i| (np.f[i] - lam_p * e[i]).powi(2) / w[i]).sum();
    let den: f64 = (1..m).map(|i| np.stiff[i].powi(2) / w[i]).sum();
    DegenerateDiagnostics {
        first_variation: f.dphi(1.0).abs() / t.x,
        second_variation: f.d2phi(1.0).abs() / t.x,
        equation: (num / den).sqrt(),
        multiplier: lam_p * pr.p,
    }
}

/// Dilates to `s(u) = 1` and restores `μ(u) = μ` until both hold to round-off.
fn settle(obj: &OnLevel<'_>, mut u: Vec<f64>) -> Result<Vec<f64>> {
    for _ in 0..8 {
        let s = FiberMap::new(triple_of(&u, obj.g, &obj.params), &obj.params).s_star();
        if (s - 1.0).abs() < 1e-12 {
            break;
        }
        let rf = RadialFunction::from_parts(obj.g.clone(), u.clone());
        let mut v = mass_scale(&rf, s, &obj.params)?.into_values();
        descent::normalize(obj.g, &mut v, obj.params.p, obj.mass_p());
        u = obj
            .restore_level(v, obj.params.mu)
            .ok_or_else(|| Error::Numeric("lost the level set mu(u) = mu while dilating".into()))?;
    }
    Ok(u)
}

/// Minimizer of the energy over the degenerate manifold at `params.mu`.
///
/// Fails with an empty-manifold error below `μ_a*`. At `μ_a*` the manifold is
/// the dilation orbit of the extremal witness and that point is returned.
pub fn minimize_degenerate(params: &ProblemParams, opts: &SolverOptions) -> Result<SolutionRecord> {
    params.validate()?;
    opts.validate()?;
    let rep = match &opts.extremal {
        Some(r) => r.clone(),
        None => Arc::new(mu_star(params, opts)?),
    };
    let ms = rep.mu_star;
    let rel = (params.mu - ms) / ms;
    if rel < -AT_EXTREMAL_TOL {
        return Err(Error::EmptyManifold(format!(
            "mu = {} is below the first extremal value {ms}: the degenerate manifold is empty",
            params.mu
        )));
    }
    let dg = rep.degenerate_point.grid();
    let same_grid = dg.n() == opts.grid_n && opts.grid_r.map_or(true, |r| r == dg.radius());
    let g = if same_grid { dg.clone() } else { Arc::new(make_grid(opts.grid_r.unwrap_or(dg.radius()), opts.grid_n, params.dim)?) };
    let (a_exp, b_exp) = threshold_exponents(params);
    let obj = OnLevel { g: &g, params: *params, a_exp, b_exp };
    let mass_p = obj.mass_p();
    let mut witness = rep.degenerate_point.resample(g.clone())?.into_values();
    descent::normalize(&g, &mut witness, params.p, mass_p);

    let mut iterations = 0;
    let mut converged = true;
    let u = if rel.abs() <= AT_EXTREMAL_TOL && same_grid {
        rep.degenerate_point.values().to_vec()
    } else if rel.abs() <= AT_EXTREMAL_TOL {
        let target = ProblemParams { mu: obj.log_mu(&witness).map(f64::exp).unwrap_or(ms), ..*params };
        let o2 = OnLevel { params: target, ..obj };
        settle(&o2, witness)?
    } else {
        let start = reach_level(&obj, &witness)?;
        let start = settle(&obj, start)?;
        let dopts = DescentOptions {
            max_iter: opts.max_iter.min(400),
            tol: opts.grad_tol,
            growth_cap: params.is_critical().then_some(0.05),
            concentration_cells: Some(6.0),
        };
        match descend(&obj, start.clone(), mass_p, &dopts) {
            Ok(out) => {
                iterations = out.iterations;
                converged = out.converged;
                settle(&obj, out.u)?
            }
            Err(Error::Concentration(_)) => {
                converged = false;
                start
            }
            Err(e) => return Err(e),
        }
    };
    let u = RadialFunction::new(g.clone(), u)?;
    let lambda = lagrange_multiplier(&u, params);
    let mut rec = make_record(u, lambda, Branch::Zero, params, (iterations, converged), 0)?;
    let diag = degenerate_diagnostics(&rec.profile, params);
    rec.residuals.euler_lagrange = diag.equation;
    rec.degenerate = Some(diag);
    Ok(rec)
}

/// Finds a mass-normalized profile with `μ(u) = μ` on the segment between the
/// witness (`μ(u) = μ_a* < μ`) and a profile with `μ(v) > μ`.
fn reach_level(obj: &OnLevel<'_>, witness: &[f64]) -> Result<Vec<f64>> {
    let g = obj.g;
    let target = obj.params.mu.ln();
    let p = obj.params.p;
    let mass_p = obj.mass_p();
    let r = g.nodes();
    let mut cands: Vec<Vec<f64>> = vec![
        r.iter().map(|x| (-x * x / 2.0).exp()).collect(),
        r.iter().map(|x| (-x * x / 2.0).exp() + 0.5 * (-(x - 3.0).powi(2)).exp()).collect(),
        r.iter().map(|x| (-x * x / 2.0).exp() + 0.3 * (-(x - 6.0).powi(2)).exp()).collect(),
    ];
    for c in &mut cands {
        descent::normalize(g, c, p, mass_p);
    }
    let mut high = cands.into_iter().find(|c| obj.log_mu(c).is_some_and(|l| l > target));
    if high.is_none() {
        // Climb ln μ from the witness side until the level is exceeded.
        let mut u = witness.to_vec();
        let n = g.n();
        for k in 0..2000 {
            let d = obj.mu_direction(&u, 1.0)?;
            let mut v = u.clone();
            let bump = if k == 0 { 1e-3 } else { 0.5 };
            for i in 0..n {
                v[i] += bump * d[i];
            }
            if k == 0 {
                // The witness is stationary for ln μ; perturb it first.
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi += 1e-3 * (-r[i] * r[i] / 8.0).exp() * vi.abs().max(1e-3);
                }
            }
            descent::normalize(g, &mut v, p, mass_p);
            u = v;
            if obj.log_mu(&u).is_some_and(|l| l > target) {
                high = Some(u.clone());
                break;
            }
        }
    }
    let high = high.ok_or_else(|| Error::NonConvergence {
        iterations: 2000,
        reason: "could not find a profile with mu(u) above the requested level".into(),
        best: None,
    })?;
    let mix = |th: f64| -> Vec<f64> {
        let mut v: Vec<f64> = witness.iter().zip(&high).map(|(a, b)| (1.0 - th) * a + th * b).collect();
        descent::normalize(g, &mut v, p, mass_p);
        v
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if obj.log_mu(&mix(mid)).is_some_and(|l| l > target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    obj.restore_level(mix(hi), obj.params.mu)
        .ok_or_else(|| Error::Numeric("restoration onto the level set failed".into()))
}
