//! Minimizers on the Pohozaev manifold and Newton refinement of the
//! constrained Euler–Lagrange equation.
//!
//! The ground state (`plus`) and mountain-pass (`minus`) levels are computed
//! as minima over the mass sphere of the reduced functional
//! `g(u) = Φ_{μ,u}(t_±(u))`, whose weak gradient follows from the envelope
//! identity `Φ'(t_±) = 0`. The descent output is handed to a bordered Newton
//! iteration on `(u, λ)`.

pub(crate) mod descent;
pub(crate) mod discrete;
pub(crate) mod newton;
mod degenerate;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibering::{classify_fibering, mass_scale, triple, Branch, FiberMap, FiberingCase, Triple};
use crate::linalg::Tridiag;
use crate::params::ProblemParams;
use crate::radial::{lq_power, make_grid, RadialFunction, RadialGrid};

use descent::{descend, DescentOptions, SphereObjective};
use discrete::{grad_lq, grad_x, preconditioner};
use newton::{nodal_part, Bordered, NewtonOptions, NewtonOutcome, NodalPart};

pub use degenerate::{degenerate_diagnostics, minimize_degenerate, DegenerateDiagnostics};

/// Knobs shared by the minimizers.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Initial descent step (relative to the preconditioned gradient).
    pub step: f64,
    /// Descent iteration limit.
    pub max_iter: usize,
    /// Relative tolerance on the preconditioned gradient norm.
    pub grad_tol: f64,
    /// Number of grid intervals.
    pub grid_n: usize,
    /// Truncation radius; `None` starts at 20 and switches to `R = 20/k`,
    /// `k = (|λ|/(p-1))^{1/p}`, once `λ` is estimated (the node count is kept).
    pub grid_r: Option<f64>,
    /// Width of the Gaussian seed; defaults to 1 (plus) or 0.2 (minus).
    pub seed_sigma: Option<f64>,
    /// Warm start, resampled onto the solver grid.
    pub initial: Option<RadialFunction>,
    /// Relative residual at which Newton stops.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Previously computed first extremal value and witness, reused instead
    /// of recomputed.
    pub extremal: Option<Arc<crate::extremal::ExtremalReport>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iter: 4000,
            grad_tol: 1e-7,
            grid_n: 4000,
            grid_r: None,
            seed_sigma: None,
            initial: None,
            newton_tol: 1e-11,
            newton_max_iter: 60,
            extremal: None,
        }
    }
}

impl SolverOptions {
    pub fn with_grid(mut self, n: usize, r: f64) -> Self {
        self.grid_n = n;
        self.grid_r = Some(r);
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.grad_tol > 0.0) || !(self.newton_tol > 0.0) {
            return Err(Error::invalid("solver tolerances and step must be positive"));
        }
        if self.max_iter == 0 || self.newton_max_iter == 0 {
            return Err(Error::invalid("iteration limits must be at least 1"));
        }
        Ok(())
    }
}

/// Diagnostics attached to a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `|P(u)| / ‖∇u‖_p^p`.
    pub pohozaev: f64,
    /// Relative weighted `L²` residual of the Euler–Lagrange equation.
    pub euler_lagrange: f64,
    /// `|‖u‖_p - a| / a`.
    pub mass: f64,
}

/// A converged (or best available) critical point.
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub params: ProblemParams,
    pub branch: Branch,
    pub profile: RadialFunction,
    pub lambda: f64,
    pub energy: f64,
    pub residuals: Residuals,
    /// Relative defect of the integrated Pohozaev identity.
    pub pohozaev_defect: f64,
    /// Smallest value over interior nodes.
    pub positivity_min: f64,
    /// `Φ''_{μ,u}(1)`: positive on the plus branch, negative on the minus branch.
    pub fiber_curvature: f64,
    pub morse_index: Option<usize>,
    /// Defining-equation residuals, set on the degenerate branch.
    pub degenerate: Option<DegenerateDiagnostics>,
    pub descent_iterations: usize,
    /// Whether the descent met its gradient tolerance before the Newton stage.
    pub descent_converged: bool,
    pub newton_iterations: usize,
}

/// JSON form of a [`SolutionRecord`], with the profile stored separately.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub params: ProblemParams,
    pub branch: Branch,
    pub lambda: f64,
    pub energy: f64,
    pub residuals: Residuals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub morse_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<DegenerateDiagnostics>,
    pub profile_path: String,
}

impl SolutionRecord {
    pub fn summary(&self, profile_path: impl Into<String>) -> SolutionSummary {
        SolutionSummary {
            params: self.params,
            branch: self.branch,
            lambda: self.lambda,
            energy: self.energy,
            residuals: self.residuals,
            morse_index: self.morse_index,
            degenerate: self.degenerate,
            profile_path: profile_path.into(),
        }
    }

    pub fn triple(&self) -> Triple {
        triple(&self.profile, &self.params)
    }
}

/// `λ = (‖∇u‖_p^p - μ‖u‖_{q1}^{q1} - ‖u‖_{q2}^{q2}) / a^p`.
pub fn lagrange_multiplier(u: &RadialFunction, params: &ProblemParams) -> f64 {
    let t = triple(u, params);
    (t.x - params.mu * t.y - t.z) / params.a.powf(params.p)
}

/// `λ a^p = μ(γ1 - 1)‖u‖_{q1}^{q1} + (γ2 - 1)‖u‖_{q2}^{q2}`, valid on solutions.
pub fn lagrange_multiplier_alt(u: &RadialFunction, params: &ProblemParams) -> f64 {
    let t = triple(u, params);
    (params.mu * (params.gamma1() - 1.0) * t.y + (params.gamma2() - 1.0) * t.z) / params.a.powf(params.p)
}

/// Relative defect of
/// `(N-p)X = λ N a^p + (μ N p/q1) Y + (N p/q2) Z`, divided by `(N-p)X`.
pub fn pohozaev_identity_check(u: &RadialFunction, lambda: f64, params: &ProblemParams) -> f64 {
    let t = triple(u, params);
    let n = params.dim as f64;
    let p = params.p;
    let lhs = (n - p) * t.x;
    let rhs = lambda * n * params.a.powf(p) + params.mu * n * p / params.q1 * t.y + n * p / params.q2 * t.z;
    (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE)
}

/// Euler–Lagrange system in `(u, λ)` with the mass constraint.
struct ElSystem<'a> {
    g: &'a RadialGrid,
    params: ProblemParams,
    mass_p: f64,
}

impl Bordered for ElSystem<'_> {
    fn grid(&self) -> &RadialGrid {
        self.g
    }
    fn nodal(&self, u: &[f64], x: &[f64]) -> NodalPart {
        let pr = &self.params;
        nodal_part(self.g, u, pr.p, &[(x[0], pr.p), (pr.mu, pr.q1), (1.0, pr.q2)])
    }
    fn nodal_extra_cols(&self, u: &[f64], _x: &[f64]) -> Vec<Vec<f64>> {
        let m = u.len() - 1;
        let p = self.params.p;
        vec![u[..m].iter().zip(self.g.weights()).map(|(v, w)| -w * v.abs().powf(p - 1.0) * v.signum()).collect()]
    }
    fn extra_eqs(&self, u: &[f64], _x: &[f64]) -> Vec<f64> {
        let p = self.params.p;
        let m: f64 = u.iter().zip(self.g.weights()).map(|(v, w)| w * v.abs().powf(p)).sum();
        vec![(m - self.mass_p) / self.mass_p]
    }
    fn extra_jac(&self, u: &[f64], _x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let m = u.len() - 1;
        let row: Vec<f64> = grad_lq(self.g, &u[..m], self.params.p).iter().map(|v| v / self.mass_p).collect();
        (vec![row], vec![vec![0.0]])
    }
}

fn run_el_newton(u: &RadialFunction, lambda: f64, params: &ProblemParams, opts: &SolverOptions) -> Result<NewtonOutcome> {
    let sys = ElSystem { g: u.grid(), params: *params, mass_p: params.a.powf(params.p) };
    let nopts = NewtonOptions { tol: opts.newton_tol, max_iter: opts.newton_max_iter };
    newton::solve(&sys, u.values().to_vec(), vec![lambda], &nopts)
}

/// Damped Newton on the discrete equation plus the mass constraint. Returns
/// the refined profile and multiplier; fails with the best iterate attached
/// when the residual cannot be driven below tolerance.
pub fn refine_euler_lagrange(
    u: &RadialFunction,
    lambda: f64,
    params: &ProblemParams,
    opts: &SolverOptions,
) -> Result<(RadialFunction, f64)> {
    params.validate()?;
    let out = run_el_newton(u, lambda, params, opts)?;
    let v = RadialFunction::new(u.grid().clone(), out.u)?;
    if !out.converged {
        let e = crate::fibering::energy(&v, params);
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            reason: format!("Euler-Lagrange residual stalled at {:.3e}", out.residual),
            best: Some(Box::new((v, e))),
        });
    }
    Ok((v, out.x[0]))
}

/// Relative strong-form residual of the Euler–Lagrange equation at `(u, λ)`.
pub fn euler_lagrange_residual(u: &RadialFunction, lambda: f64, params: &ProblemParams) -> f64 {
    let g = u.grid();
    let np = nodal_part(g, u.values(), params.p, &[(lambda, params.p), (params.mu, params.q1), (1.0, params.q2)]);
    let w = g.weights();
    let num: f64 = np.f.iter().zip(w).skip(1).map(|(f, w)| f * f / w).sum();
    let den: f64 = np.stiff.iter().zip(w).skip(1).map(|(f, w)| f * f / w).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Reduced functional `u ↦ Φ_{μ,u}(t_branch(u))` on the mass sphere.
struct Reduced<'a> {
    g: &'a Arc<RadialGrid>,
    params: ProblemParams,
    branch: Branch,
}

impl Reduced<'_> {
    fn root(&self, u: &[f64]) -> Option<(f64, FiberMap)> {
        let t = crate::fibering::triple_of(u, self.g, &self.params);
        let f = FiberMap::new(t, &self.params);
        let rep = f.classify().ok()?;
        (rep.case == FiberingCase::TwoRoots).then(|| (rep.root(self.branch).unwrap_or(f64::NAN), f))
    }
}

impl SphereObjective for Reduced<'_> {
    fn grid(&self) -> &RadialGrid {
        self.g
    }
    fn p(&self) -> f64 {
        self.params.p
    }
    fn value(&self, u: &[f64]) -> Option<f64> {
        let (t, f) = self.root(u)?;
        Some(f.phi(t))
    }
    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let pr = &self.params;
        let (t, _) = self.root(u).expect("gradient at an admissible point");
        let gx = grad_x(self.g, u, pr.p);
        let gy = grad_lq(self.g, u, pr.q1);
        let gz = grad_lq(self.g, u, pr.q2);
        let (cx, cy, cz) = (
            t.powf(pr.p) / pr.p,
            pr.mu / pr.q1 * t.powf(pr.q1 * pr.gamma1()),
            t.powf(pr.q2 * pr.gamma2()) / pr.q2,
        );
        gx.iter().zip(&gy).zip(&gz).map(|((a, b), c)| cx * a - cy * b - cz * c).collect()
    }
    fn precond(&self, u: &[f64]) -> Tridiag {
        let pr = &self.params;
        let (t, f) = self.root(u).expect("preconditioner at an admissible point");
        let m = pr.a.powf(pr.p);
        preconditioner(self.g, u, pr.p, f.t.x / m, t.powf(pr.p), self.g.n())
    }
    fn regauge(&self, u: &[f64]) -> Result<Option<Vec<f64>>> {
        let Some((t, _)) = self.root(u) else { return Ok(None) };
        if (t - 1.0).abs() <= 0.1 {
            return Ok(None);
        }
        let rf = RadialFunction::from_parts(self.g.clone(), u.to_vec());
        let mut v = mass_scale(&rf, t, &self.params)?.into_values();
        descent::normalize(self.g, &mut v, self.params.p, self.params.a.powf(self.params.p));
        Ok(Some(v))
    }
}

fn gaussian_seed(g: &Arc<RadialGrid>, sigma: f64) -> Vec<f64> {
    g.nodes().iter().map(|r| (-r * r / (2.0 * sigma * sigma)).exp()).collect()
}

/// Seeds tried in order until one is admissible for the branch projection.
fn seeds(g: &Arc<RadialGrid>, branch: Branch, sigma: Option<f64>) -> Vec<Vec<f64>> {
    let s0 = sigma.unwrap_or(if branch == Branch::Minus { 0.2 } else { 1.0 });
    let mut out = vec![gaussian_seed(g, s0)];
    for (c, r0) in [(0.5, 1.5), (0.3, 3.0), (1.0, 0.8)] {
        out.push(g.nodes().iter().map(|r| (-r * r / 2.0).exp() + c * (-(r - r0) * (r - r0)).exp()).collect());
    }
    out.push(g.nodes().iter().map(|r| 1.0 / (1.0 + r * r).powi(2) * (-0.1 * r * r).exp()).collect());
    out
}

/// Truncation radius in units of the decay length `1/k` when it is chosen
/// automatically.
const DECAY_SPAN: f64 = 20.0;
/// Descent iterations spent before the grid is matched to the decay length.
const PILOT_ITERATIONS: usize = 300;

fn solver_grid(opts: &SolverOptions, dim: usize) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(make_grid(opts.grid_r.unwrap_or(20.0), opts.grid_n, dim)?))
}

/// Builds the record with all diagnostics for a converged `(u, λ)`.
pub(crate) fn make_record(
    u: RadialFunction,
    lambda: f64,
    branch: Branch,
    params: &ProblemParams,
    descent: (usize, bool),
    newton_iterations: usize,
) -> Result<SolutionRecord> {
    let t = triple(&u, params);
    let mass = lq_power(&u, params.p)?.powf(1.0 / params.p);
    let n = u.grid().n();
    let positivity_min = u.values()[..n].iter().copied().fold(f64::INFINITY, f64::min);
    let el = euler_lagrange_residual(&u, lambda, params);
    Ok(SolutionRecord {
        params: *params,
        branch,
        lambda,
        energy: crate::fibering::energy_of(t, params),
        residuals: Residuals {
            pohozaev: crate::fibering::pohozaev_of(t, params).abs() / t.x,
            euler_lagrange: el,
            mass: (mass - params.a).abs() / params.a,
        },
        pohozaev_defect: pohozaev_identity_check(&u, lambda, params),
        positivity_min,
        fiber_curvature: FiberMap::new(t, params).d2phi(1.0),
        morse_index: None,
        degenerate: None,
        descent_iterations: descent.0,
        descent_converged: descent.1,
        newton_iterations,
        profile: u,
    })
}

/// Decay rate `(|λ|/(p-1))^{1/p}` of solutions.
pub fn decay_rate(lambda: f64, p: f64) -> f64 {
    (lambda.abs() / (p - 1.0)).powf(1.0 / p)
}

fn minimize_branch(params: &ProblemParams, opts: &SolverOptions, branch: Branch) -> Result<SolutionRecord> {
    params.validate()?;
    opts.validate()?;
    let g = solver_grid(opts, params.dim)?;
    let mass_p = params.a.powf(params.p);
    let obj = Reduced { g: &g, params: *params, branch };
    let mut candidates = Vec::new();
    if let Some(init) = &opts.initial {
        candidates.push(init.resample(g.clone())?.into_values());
    }
    candidates.extend(seeds(&g, branch, opts.seed_sigma));
    let mut start = None;
    for mut c in candidates {
        if descent::normalize(&g, &mut c, params.p, mass_p) && obj.value(&c).is_some() {
            start = Some(c);
            break;
        }
    }
    let start = match start {
        Some(s) => s,
        None => {
            let rep = match &opts.extremal {
                Some(r) => r.clone(),
                None => Arc::new(crate::extremal::mu_star(
                    params,
                    &SolverOptions { grid_r: Some(g.radius()), grid_n: g.n(), ..SolverOptions::default() },
                )?),
            };
            if params.mu >= rep.mu_star {
                return Err(Error::ProjectionUnavailable(format!(
                    "mu = {} is not below the first extremal value {}; no profile seed is admissible",
                    params.mu, rep.mu_star
                )));
            }
            rep.witness.resample(g.clone())?.into_values()
        }
    };
    let dopts = DescentOptions {
        max_iter: opts.max_iter,
        tol: opts.grad_tol,
        growth_cap: params.is_critical().then_some(0.05),
        concentration_cells: (params.is_critical() && branch == Branch::Minus).then_some(6.0),
    };
    let (g, start) = if opts.grid_r.is_none() {
        // Dilating by the fiber root rescales the radius and keeps the nodal
        // values, so the seed starts on its branch without interpolation.
        let t = obj.root(&start).map(|(t, _)| t).filter(|t| t.is_finite() && *t > 0.0).unwrap_or(1.0);
        let g0 = Arc::new(make_grid(g.radius() / t, g.n(), params.dim)?);
        let mut v = start;
        descent::normalize(&g0, &mut v, params.p, mass_p);
        (g0, v)
    } else {
        (g, start)
    };
    let obj = Reduced { g: &g, params: *params, branch };
    let (g, start, mut iterations) = if opts.grid_r.is_none() {
        // Short descent to estimate λ, then a grid matched to the decay length.
        let pre = DescentOptions { max_iter: opts.max_iter.min(PILOT_ITERATIONS), ..dopts.clone() };
        let out = descend(&obj, start, mass_p, &pre)?;
        let u = RadialFunction::new(g.clone(), out.u)?;
        let k = decay_rate(lagrange_multiplier(&u, params), params.p);
        let g2 = Arc::new(make_grid(DECAY_SPAN / k, opts.grid_n, params.dim)?);
        let mut v = u.resample(g2.clone())?.into_values();
        descent::normalize(&g2, &mut v, params.p, mass_p);
        (g2, v, out.iterations)
    } else {
        (g, start, 0)
    };
    let obj = Reduced { g: &g, params: *params, branch };
    let out = descend(&obj, start, mass_p, &dopts)?;
    iterations += out.iterations;
    let u = RadialFunction::new(g.clone(), out.u)?;
    let u = crate::fibering::project_to_manifold(&u, branch, params)?;
    let lambda0 = lagrange_multiplier(&u, params);
    let (mut u, mut lambda, mut newton_its) = finish_newton(&u, lambda0, params, opts, branch, out.value)?;
    if opts.grid_r.is_none() {
        let kr = decay_rate(lambda, params.p) * u.grid().radius();
        if !(0.6 * DECAY_SPAN..=2.0 * DECAY_SPAN).contains(&kr) {
            let g2 = Arc::new(make_grid(DECAY_SPAN / decay_rate(lambda, params.p), opts.grid_n, params.dim)?);
            let v = u.resample(g2)?;
            let (v, l, its) = finish_newton(&v, lambda, params, opts, branch, out.value)?;
            u = v;
            lambda = l;
            newton_its += its;
        }
    }
    make_record(u, lambda, branch, params, (iterations, out.converged), newton_its)
}

fn finish_newton(
    u: &RadialFunction,
    lambda0: f64,
    params: &ProblemParams,
    opts: &SolverOptions,
    branch: Branch,
    descent_value: f64,
) -> Result<(RadialFunction, f64, usize)> {
    let out = run_el_newton(u, lambda0, params, opts)?;
    let v = RadialFunction::new(u.grid().clone(), out.u)?;
    let e = crate::fibering::energy(&v, params);
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            reason: format!("Euler-Lagrange residual stalled at {:.3e}", out.residual),
            best: Some(Box::new((u.clone(), descent_value))),
        });
    }
    let rep = classify_fibering(&v, params)?;
    let on_branch = rep.case == FiberingCase::TwoRoots && rep.root(branch).is_some_and(|t| (t - 1.0).abs() < 1e-4);
    if !on_branch {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            reason: format!("Newton left the {branch} branch (fiber case {:?})", rep.case),
            best: Some(Box::new((v, e))),
        });
    }
    Ok((v, out.x[0], out.iterations))
}

/// Ground state: minimizer of the energy over the plus part of the Pohozaev
/// manifold.
pub fn minimize_ground(params: &ProblemParams, opts: &SolverOptions) -> Result<SolutionRecord> {
    minimize_branch(params, opts, Branch::Plus)
}

/// Mountain-pass solution: minimizer of the energy over the minus part.
pub fn minimize_mountain(params: &ProblemParams, opts: &SolverOptions) -> Result<SolutionRecord> {
    minimize_branch(params, opts, Branch::Minus)
}

#[cfg(test)]
mod tests;
