//! The first extremal value `μ_a* = inf_{‖u‖_p = a} μ(u)`.
//!
//! `μ(u)` is invariant under the mass-preserving dilation, so the minimizer is
//! a one-parameter family. The descent works on `ln μ` with a gauge that keeps
//! `‖∇u‖_p^p` near 1; the best descent output is polished by Newton on the
//! critical-point equation of `ln μ` and then dilated exactly (by rescaling
//! the grid) to `s(u) = 1`. There it lies on the degenerate part of the
//! Pohozaev manifold at `μ = μ_a*` and solves
//!
//! `-p Δ_p u = Λ u^{p-1} + μ_a* q1γ1 u^{q1-1} + q2γ2 u^{q2-1}`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibering::{dilate_exact, mass_scale, triple, triple_of, FiberMap};
use crate::linalg::Tridiag;
use crate::params::ProblemParams;
use crate::radial::{make_grid, RadialFunction, RadialGrid};
use crate::solver::descent::{self, descend, DescentOptions, SphereObjective};
use crate::solver::discrete::{grad_lq, grad_x, preconditioner};
use crate::solver::newton::{self, nodal_part, Bordered, NewtonOptions, NodalPart};
use crate::solver::{degenerate_diagnostics, minimize_degenerate, minimize_ground, minimize_mountain, SolverOptions};

/// Result of the extremal-value computation.
#[derive(Debug, Clone)]
pub struct ExtremalReport {
    pub mu_star: f64,
    /// Minimizer normalized to `‖∇u‖_p = 1`.
    pub witness: RadialFunction,
    /// The same minimizer dilated to its degenerate point `s(u) = 1`.
    pub degenerate_point: RadialFunction,
    /// Multiplier `Λ` of the degenerate equation at `degenerate_point`.
    pub degenerate_multiplier: f64,
    /// Relative residual of the degenerate equation.
    pub degenerate_residual: f64,
    pub kappa: f64,
    /// `ln μ` reached by each seed after descent, in seed order.
    pub seed_values: Vec<f64>,
}

/// JSON form of an [`ExtremalReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremalSummary {
    pub mu_star: f64,
    pub kappa_exponent: f64,
    pub scaling_defect: Option<f64>,
    pub witness_path: String,
}

impl ExtremalReport {
    pub fn summary(&self, scaling_defect: Option<f64>, witness_path: impl Into<String>) -> ExtremalSummary {
        ExtremalSummary {
            mu_star: self.mu_star,
            kappa_exponent: self.kappa,
            scaling_defect,
            witness_path: witness_path.into(),
        }
    }
}

/// Exponents `A`, `B` of `μ(u) = C X^A / (Y Z^B)`.
pub fn threshold_exponents(params: &ProblemParams) -> (f64, f64) {
    let p = params.p;
    let b1 = params.q1 * params.gamma1();
    let b2 = params.q2 * params.gamma2();
    ((b2 - b1) / (b2 - p), (p - b1) / (b2 - p))
}

struct LogMu<'a> {
    g: &'a Arc<RadialGrid>,
    params: ProblemParams,
    a_exp: f64,
    b_exp: f64,
}

impl SphereObjective for LogMu<'_> {
    fn grid(&self) -> &RadialGrid {
        self.g
    }
    fn p(&self) -> f64 {
        self.params.p
    }
    fn value(&self, u: &[f64]) -> Option<f64> {
        let t = triple_of(u, self.g, &self.params);
        if !(t.x > 0.0 && t.y > 0.0 && t.z > 0.0) {
            return None;
        }
        Some(FiberMap::new(t, &self.params).mu_threshold().ln())
    }
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
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
    fn precond(&self, u: &[f64]) -> Tridiag {
        let pr = &self.params;
        let t = triple_of(u, self.g, pr);
        let m = pr.a.powf(pr.p);
        preconditioner(self.g, u, pr.p, t.x / m, self.a_exp * pr.p / t.x, self.g.n())
    }
    fn regauge(&self, u: &[f64]) -> Result<Option<Vec<f64>>> {
        let t = triple_of(u, self.g, &self.params);
        let s = t.x.powf(-1.0 / self.params.p);
        if (s - 1.0).abs() <= 0.05 {
            return Ok(None);
        }
        let rf = RadialFunction::from_parts(self.g.clone(), u.to_vec());
        let mut v = mass_scale(&rf, s, &self.params)?.into_values();
        descent::normalize(self.g, &mut v, self.params.p, self.params.a.powf(self.params.p));
        Ok(Some(v))
    }
}

/// Critical-point equation of `ln μ` on `{‖u‖_p^p = a^p, ‖∇u‖_p^p = X0}`:
/// `(A/X)∇X - (1/Y)∇Y - (B/Z)∇Z = θ∇M + η∇X`, rescaled into
/// `-Δ_p u = c0 u^{p-1} + c1 u^{q1-1} + c2 u^{q2-1}`. Without the gauge the
/// discrete problem is nearly singular along the dilation direction; the
/// coefficients obey `c1 Y / q1 = c2 Z / (B q2)`.
struct ThresholdSystem<'a> {
    g: &'a RadialGrid,
    params: ProblemParams,
    mass_p: f64,
    x_target: f64,
    b_exp: f64,
}

impl Bordered for ThresholdSystem<'_> {
    fn grid(&self) -> &RadialGrid {
        self.g
    }
    fn nodal(&self, u: &[f64], x: &[f64]) -> NodalPart {
        let pr = &self.params;
        nodal_part(self.g, u, pr.p, &[(x[0], pr.p), (x[1], pr.q1), (x[2], pr.q2)])
    }
    fn nodal_extra_cols(&self, u: &[f64], _x: &[f64]) -> Vec<Vec<f64>> {
        let m = u.len() - 1;
        let pr = &self.params;
        let w = self.g.weights();
        let pow = |e: f64| -> Vec<f64> { u[..m].iter().zip(w).map(|(v, w)| -w * v.abs().powf(e - 1.0) * v.signum()).collect() };
        vec![pow(pr.p), pow(pr.q1), pow(pr.q2)]
    }
    fn extra_eqs(&self, u: &[f64], x: &[f64]) -> Vec<f64> {
        let pr = &self.params;
        let t = triple_of(u, self.g, pr);
        let m: f64 = u.iter().zip(self.g.weights()).map(|(v, w)| w * v.abs().powf(pr.p)).sum();
        let sc = pr.q1 * self.x_target;
        vec![
            (m - self.mass_p) / self.mass_p,
            (t.x - self.x_target) / self.x_target,
            (self.b_exp * pr.q2 * x[1] * t.y - pr.q1 * x[2] * t.z) / sc,
        ]
    }
    fn extra_jac(&self, u: &[f64], x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let pr = &self.params;
        let m = u.len() - 1;
        let t = triple_of(u, self.g, pr);
        let gm: Vec<f64> = grad_lq(self.g, &u[..m], pr.p).iter().map(|v| v / self.mass_p).collect();
        let gx: Vec<f64> = grad_x(self.g, u, pr.p)[..m].iter().map(|v| v / self.x_target).collect();
        let gy = grad_lq(self.g, u, pr.q1);
        let gz = grad_lq(self.g, u, pr.q2);
        let sc = pr.q1 * self.x_target;
        let bq = self.b_exp * pr.q2;
        let r3: Vec<f64> = (0..m).map(|i| (bq * x[1] * gy[i] - pr.q1 * x[2] * gz[i]) / sc).collect();
        let c = vec![vec![0.0; 3], vec![0.0; 3], vec![0.0, bq * t.y / sc, -pr.q1 * t.z / sc]];
        (vec![gm, gx, r3], c)
    }
}

pub(crate) struct WitnessSolution {
    /// Critical point of `μ` dilated exactly to `s(u) = 1`.
    pub u: RadialFunction,
    pub mu: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Newton polish of a near-minimizer of `μ` on its own grid, followed by the
/// exact dilation to the degenerate point of its fiber.
pub(crate) fn polish_witness(u: &RadialFunction, params: &ProblemParams, tol: f64) -> Result<WitnessSolution> {
    let pr = *params;
    let (a_exp, b_exp) = threshold_exponents(&pr);
    let mass_p = pr.a.powf(pr.p);
    let t = triple(u, &pr);
    let c1 = pr.q1 * t.x / (a_exp * pr.p * t.y);
    let c2 = b_exp * pr.q2 * t.x / (a_exp * pr.p * t.z);
    let c0 = (t.x - c1 * t.y - c2 * t.z) / mass_p;
    let sys = ThresholdSystem { g: u.grid(), params: pr, mass_p, x_target: t.x, b_exp };
    let out = newton::solve(&sys, u.values().to_vec(), vec![c0, c1, c2], &NewtonOptions { tol, max_iter: 60 })?;
    let v = RadialFunction::new(u.grid().clone(), out.u)?;
    let f = FiberMap::of(&v, &pr);
    let deg = dilate_exact(&v, f.s_star(), &pr)?;
    Ok(WitnessSolution {
        u: deg,
        mu: f.mu_threshold(),
        residual: out.residual.max(out.extra_residual),
        converged: out.converged,
    })
}

/// Seed profiles: Gaussians of width 0.5, 1, 2 and two two-bump mixtures.
fn mu_seeds(g: &Arc<RadialGrid>) -> Vec<Vec<f64>> {
    let r = g.nodes();
    let gauss = |s: f64| -> Vec<f64> { r.iter().map(|x| (-x * x / (2.0 * s * s)).exp()).collect() };
    vec![
        gauss(0.5),
        gauss(1.0),
        gauss(2.0),
        r.iter().map(|x| (-x * x).exp() + 0.4 * (-(x - 2.0).powi(2)).exp()).collect(),
        r.iter().map(|x| (-x * x / 2.0).exp() + 0.8 * (-2.0 * (x - 1.0).powi(2)).exp()).collect(),
    ]
}

/// Computes `μ_a*` (ignoring `params.mu`) by multi-start descent on `ln μ`
/// followed by Newton on the degenerate system from the best seed.
pub fn mu_star(params: &ProblemParams, opts: &SolverOptions) -> Result<ExtremalReport> {
    params.validate_exponents()?;
    if !(params.a > 0.0) {
        return Err(Error::InvalidRegime(format!("mass a must be positive, got {}", params.a)));
    }
    let pr = ProblemParams { mu: 1.0, ..*params };
    let g = Arc::new(make_grid(opts.grid_r.unwrap_or(20.0), opts.grid_n, pr.dim)?);
    let (a_exp, b_exp) = threshold_exponents(&pr);
    let obj = LogMu { g: &g, params: pr, a_exp, b_exp };
    let mass_p = pr.a.powf(pr.p);
    let dopts = DescentOptions { max_iter: opts.max_iter, tol: opts.grad_tol, growth_cap: None, concentration_cells: Some(4.0) };
    let outcomes: Vec<Result<descent::DescentOutcome>> =
        mu_seeds(&g).into_par_iter().map(|s| descend(&obj, s, mass_p, &dopts)).collect();
    let seed_values: Vec<f64> = outcomes.iter().map(|o| o.as_ref().map(|o| o.value).unwrap_or(f64::NAN)).collect();
    let mut ranked: Vec<&descent::DescentOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    ranked.sort_by(|a, b| a.value.total_cmp(&b.value));
    let Some(best) = ranked.first() else {
        return Err(Error::NonConvergence {
            iterations: opts.max_iter,
            reason: "every seed failed during descent on mu(u)".into(),
            best: None,
        });
    };
    let mut last_err = None;
    for cand in ranked.iter().take(3) {
        let u = RadialFunction::new(g.clone(), cand.u.clone())?;
        match polish_witness(&u, &pr, opts.newton_tol) {
            Ok(w) if w.converged && w.mu > 0.0 && w.mu <= cand.value.exp() * (1.0 + 1e-6) => {
                let deg = w.u;
                let x = triple(&deg, &pr).x;
                let witness = dilate_exact(&deg, x.powf(-1.0 / pr.p), &pr)?;
                let diag = degenerate_diagnostics(&deg, &pr.with_mu(w.mu));
                return Ok(ExtremalReport {
                    mu_star: w.mu,
                    witness,
                    degenerate_point: deg,
                    degenerate_multiplier: diag.multiplier,
                    degenerate_residual: diag.equation,
                    kappa: pr.kappa(),
                    seed_values,
                });
            }
            Ok(w) => last_err = Some(format!("Newton polish ended at residual {:.3e}, mu {}", w.residual, w.mu)),
            Err(e) => last_err = Some(e.to_string()),
        }
    }
    let u = RadialFunction::new(g.clone(), best.u.clone())?;
    Err(Error::NonConvergence {
        iterations: best.iterations,
        reason: format!(
            "degenerate-system polish failed ({}); best descent value mu = {}",
            last_err.unwrap_or_default(),
            best.value.exp()
        ),
        best: Some(Box::new((u, best.value.exp()))),
    })
}

/// Result of [`scaling_law_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub mu_star_a1: f64,
    pub mu_star_a2: f64,
    pub kappa: f64,
    pub defect: f64,
}

/// Independent `μ*` at two masses compared with `μ*(a2) = μ*(a1)(a2/a1)^{-κ}`.
pub fn scaling_law_check(a1: f64, a2: f64, params: &ProblemParams, opts: &SolverOptions) -> Result<ScalingCheck> {
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(Error::invalid("masses must be positive"));
    }
    let m1 = mu_star(&params.with_mass(a1), opts)?.mu_star;
    let m2 = if a1 == a2 { m1 } else { mu_star(&params.with_mass(a2), opts)?.mu_star };
    let kappa = params.kappa();
    let predicted = m1 * (a2 / a1).powf(-kappa);
    Ok(ScalingCheck { mu_star_a1: m1, mu_star_a2: m2, kappa, defect: (m2 - predicted).abs() / m2 })
}

/// Ordered levels around `μ_a*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGap {
    pub mu: f64,
    pub mu_star: f64,
    pub m_plus: Option<f64>,
    pub m_minus: Option<f64>,
    pub m_zero: f64,
    pub plus_below_minus: Option<bool>,
    pub plus_below_zero: Option<bool>,
    pub minus_below_zero: Option<bool>,
}

/// Runs the three minimizations at `μ ∈ [μ_a*, 1.2 μ_a*]`. The degenerate
/// level must exist; the plus and minus levels are reported when their
/// minimizers converge and recorded as `None` otherwise, since attainment
/// above `μ_a*` depends on conditions this solver cannot verify.
pub fn energy_gap_report(params: &ProblemParams, opts: &SolverOptions) -> Result<EnergyGap> {
    let rep = match &opts.extremal {
        Some(r) => r.clone(),
        None => Arc::new(mu_star(params, opts)?),
    };
    let ms = rep.mu_star;
    if params.mu < ms * (1.0 - 1e-9) || params.mu > 1.2 * ms {
        return Err(Error::invalid(format!("mu = {} outside [mu*, 1.2 mu*] = [{ms}, {}]", params.mu, 1.2 * ms)));
    }
    let o = SolverOptions { extremal: Some(rep), ..opts.clone() };
    let zero = minimize_degenerate(params, &o)?.energy;
    let m_plus = minimize_ground(params, &o).ok().map(|r| r.energy);
    let m_minus = minimize_mountain(params, &o).ok().map(|r| r.energy);
    Ok(EnergyGap {
        mu: params.mu,
        mu_star: ms,
        m_plus,
        m_minus,
        m_zero: zero,
        plus_below_minus: m_plus.zip(m_minus).map(|(p, m)| p <= m),
        plus_below_zero: m_plus.map(|p| p < zero),
        minus_below_zero: m_minus.map(|m| m < zero),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibering::{classify_fibering, FiberingCase};
    use crate::solver::degenerate_diagnostics;

    fn sub() -> ProblemParams {
        ProblemParams::new(3, 2.0, 2.5, 4.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn exponents_reproduce_threshold_ratios() {
        let pr = sub();
        let (a, b) = threshold_exponents(&pr);
        let g = Arc::new(make_grid(15.0, 1500, 3).unwrap());
        let u1 = RadialFunction::from_fn(g.clone(), |r| (-r * r).exp()).unwrap();
        let u2 = RadialFunction::from_fn(g, |r| 1.0 / (1.0 + r * r).powi(3)).unwrap();
        let (t1, t2) = (triple(&u1, &pr), triple(&u2, &pr));
        let ratio = FiberMap::new(t1, &pr).mu_threshold() / FiberMap::new(t2, &pr).mu_threshold();
        let pred = (t1.x / t2.x).powf(a) * (t2.y / t1.y) * (t2.z / t1.z).powf(b);
        assert!((ratio / pred - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extremal_value_and_witness() {
        let pr = sub();
        let opts = SolverOptions { grid_n: 1500, grid_r: Some(20.0), ..SolverOptions::default() };
        let rep = mu_star(&pr, &opts).unwrap();
        assert!(rep.mu_star > 0.0 && rep.mu_star.is_finite());
        assert!((triple(&rep.witness, &pr).x - 1.0).abs() < 1e-12);
        assert!((rep.kappa - 3.0).abs() < 1e-12);
        let at = |f: f64| classify_fibering(&rep.witness, &pr.with_mu(f * rep.mu_star)).unwrap().case;
        assert_eq!(at(0.99), FiberingCase::TwoRoots);
        assert_eq!(at(1.01), FiberingCase::NoRoots);
        assert_eq!(at(1.0), FiberingCase::Degenerate);
        let diag = degenerate_diagnostics(&rep.degenerate_point, &pr.with_mu(rep.mu_star));
        assert!(diag.first_variation < 1e-12 && diag.second_variation < 1e-12, "{diag:?}");
        assert!(rep.degenerate_residual < 1e-4);
        // Infimum property against a few admissible profiles on the same grid.
        let g = rep.witness.grid().clone();
        for (c, r0) in [(0.0, 0.0), (0.5, 2.0), (2.0, 1.0)] {
            let u = RadialFunction::from_fn(g.clone(), |r| (-r * r / 2.0).exp() + c * (-(r - r0).powi(2)).exp()).unwrap();
            let u = u.scaled(pr.a / crate::radial::lq_norm(&u, pr.p).unwrap());
            let m = crate::fibering::mu_of_u(&u, &pr).unwrap();
            assert!(m >= rep.mu_star, "{m} < {} on R = {}", rep.mu_star, g.radius());
        }
    }

    #[test]
    fn scaling_check_identical_masses() {
        let pr = sub();
        let opts = SolverOptions { grid_n: 800, grid_r: Some(20.0), ..SolverOptions::default() };
        let chk = scaling_law_check(1.0, 1.0, &pr, &opts).unwrap();
        assert_eq!(chk.defect, 0.0);
    }
}
