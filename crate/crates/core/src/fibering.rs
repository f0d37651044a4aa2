//! Mass-preserving dilations and the fibering maps along them.
//!
//! For `(u)_s(r) = s^{N/p} u(s r)` the three functionals scale exactly:
//! `‖∇(u)_s‖_p^p = s^p X`, `‖(u)_s‖_q^q = s^{qγ_q} ‖u‖_q^q`. Everything about
//! the fiber `s ↦ Ψ((u)_s)` therefore depends on the triple
//! `(X, Y, Z) = (‖∇u‖_p^p, ‖u‖_{q1}^{q1}, ‖u‖_{q2}^{q2})` only, and this module
//! works with that triple through [`FiberMap`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::radial::{grad_power_unchecked, lq_power, lq_power_unchecked, make_grid, RadialFunction};

/// Relative tolerance on `|μ - μ(u)|/μ(u)` that decides the degenerate case.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Which critical point of the fiber a profile is projected to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Local minimum of the fiber (ground state).
    Plus,
    /// Local maximum of the fiber (mountain pass).
    Minus,
    /// Degenerate critical point.
    Zero,
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(Branch::Plus),
            "minus" => Ok(Branch::Minus),
            "zero" => Ok(Branch::Zero),
            other => Err(Error::invalid(format!("unknown branch `{other}` (expected plus, minus or zero)"))),
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
            Branch::Zero => "zero",
        })
    }
}

/// `(‖∇u‖_p^p, ‖u‖_{q1}^{q1}, ‖u‖_{q2}^{q2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub fn triple(u: &RadialFunction, params: &ProblemParams) -> Triple {
    triple_of(u.values(), u.grid(), params)
}

pub(crate) fn triple_of(u: &[f64], g: &crate::radial::RadialGrid, params: &ProblemParams) -> Triple {
    Triple {
        x: grad_power_unchecked(u, g.h(), g.mid_weights(), params.p),
        y: lq_power_unchecked(u, g.weights(), params.q1),
        z: lq_power_unchecked(u, g.weights(), params.q2),
    }
}

/// The fiber `Φ(s) = s^p X/p - (μ/q1) s^{q1γ1} Y - (1/q2) s^{q2γ2} Z`.
#[derive(Debug, Clone, Copy)]
pub struct FiberMap {
    pub t: Triple,
    p: f64,
    q1: f64,
    q2: f64,
    g1: f64,
    g2: f64,
    mu: f64,
}

impl FiberMap {
    pub fn new(t: Triple, params: &ProblemParams) -> Self {
        Self { t, p: params.p, q1: params.q1, q2: params.q2, g1: params.gamma1(), g2: params.gamma2(), mu: params.mu }
    }

    pub fn of(u: &RadialFunction, params: &ProblemParams) -> Self {
        Self::new(triple(u, params), params)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    fn b1(&self) -> f64 {
        self.q1 * self.g1
    }
    fn b2(&self) -> f64 {
        self.q2 * self.g2
    }

    pub fn phi(&self, s: f64) -> f64 {
        let Triple { x, y, z } = self.t;
        s.powf(self.p) * x / self.p - self.mu / self.q1 * s.powf(self.b1()) * y - s.powf(self.b2()) * z / self.q2
    }

    pub fn dphi(&self, s: f64) -> f64 {
        let Triple { x, y, z } = self.t;
        s.powf(self.p - 1.0) * x - self.mu * self.g1 * s.powf(self.b1() - 1.0) * y - self.g2 * s.powf(self.b2() - 1.0) * z
    }

    pub fn d2phi(&self, s: f64) -> f64 {
        let Triple { x, y, z } = self.t;
        let (b1, b2) = (self.b1(), self.b2());
        (self.p - 1.0) * s.powf(self.p - 2.0) * x
            - self.mu * self.g1 * (b1 - 1.0) * s.powf(b1 - 2.0) * y
            - self.g2 * (b2 - 1.0) * s.powf(b2 - 2.0) * z
    }

    /// `h(s) = X s^{p - q1γ1} - γ2 Z s^{q2γ2 - q1γ1}`; `Φ'(s) = s^{q1γ1-1}(h(s) - μγ1 Y)`.
    pub fn h(&self, s: f64) -> f64 {
        let Triple { x, z, .. } = self.t;
        x * s.powf(self.p - self.b1()) - self.g2 * z * s.powf(self.b2() - self.b1())
    }

    /// `s^{1 - q1γ1} Φ'(s)`.
    pub fn reduced(&self, s: f64) -> f64 {
        self.h(s) - self.mu * self.g1 * self.t.y
    }

    fn reduced_prime(&self, s: f64) -> f64 {
        let Triple { x, z, .. } = self.t;
        let (b1, b2, p) = (self.b1(), self.b2(), self.p);
        (p - b1) * x * s.powf(p - b1 - 1.0) - self.g2 * (b2 - b1) * z * s.powf(b2 - b1 - 1.0)
    }

    /// Unique maximizer of `h`.
    pub fn s_star(&self) -> f64 {
        let Triple { x, z, .. } = self.t;
        let (b1, b2, p) = (self.b1(), self.b2(), self.p);
        ((p - b1) * x / (self.g2 * (b2 - b1) * z)).powf(1.0 / (b2 - p))
    }

    /// `μ(u) = max_s h(s) / (γ1 Y)`.
    pub fn mu_threshold(&self) -> f64 {
        self.h(self.s_star()) / (self.g1 * self.t.y)
    }

    fn degenerate_input(&self) -> Option<String> {
        let Triple { x, y, z } = self.t;
        if !(x > 0.0 && y > 0.0 && z > 0.0) || !(x.is_finite() && y.is_finite() && z.is_finite()) {
            Some(format!("profile has vanishing or non-finite norms (X={x}, Y={y}, Z={z})"))
        } else {
            None
        }
    }

    /// Root of the reduced derivative on the side of `s*` given by `upper`.
    fn root(&self, upper: bool) -> f64 {
        let ss = self.s_star();
        let ls = ss.ln();
        let f = |tau: f64| self.reduced(tau.exp());
        let mut step = 1.0;
        let (mut a, mut b) = if upper {
            let mut hi = ls + step;
            while f(hi) > 0.0 && step < 1e3 {
                step *= 2.0;
                hi = ls + step;
            }
            (ls, hi)
        } else {
            let mut lo = ls - step;
            while f(lo) > 0.0 && step < 1e3 {
                step *= 2.0;
                lo = ls - step;
            }
            (lo, ls)
        };
        // f(a) and f(b) have opposite signs; keep `a` on the negative side.
        if f(a) > 0.0 {
            std::mem::swap(&mut a, &mut b);
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m == a || m == b || (a - b).abs() < 1e-15 {
                break;
            }
            if f(m) > 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let mut t = (0.5 * (a + b)).exp();
        // One Newton polish on the reduced derivative.
        let d = self.reduced_prime(t);
        if d != 0.0 {
            let tn = t - self.reduced(t) / d;
            let (lo, hi) = (a.min(b).exp(), a.max(b).exp());
            if tn >= lo * (1.0 - 1e-12) && tn <= hi * (1.0 + 1e-12) {
                t = tn;
            }
        }
        t
    }

    /// Classification of the fiber at the map's `μ`.
    pub fn classify(&self) -> Result<FiberingReport> {
        if let Some(msg) = self.degenerate_input() {
            return Err(Error::DegenerateInput(msg));
        }
        let mu_u = self.mu_threshold();
        let s_star = self.s_star();
        let mut rep = FiberingReport {
            mu_threshold: mu_u,
            s_star,
            case: FiberingCase::NoRoots,
            t_plus: None,
            t_minus: None,
            t_zero: None,
            phi_plus: None,
            phi_minus: None,
        };
        if ((self.mu - mu_u) / mu_u).abs() <= DEGENERACY_TOL {
            rep.case = FiberingCase::Degenerate;
            rep.t_zero = Some(s_star);
        } else if self.mu < mu_u {
            let tp = self.root(false);
            let tm = self.root(true);
            rep.case = FiberingCase::TwoRoots;
            rep.t_plus = Some(tp);
            rep.t_minus = Some(tm);
            rep.phi_plus = Some(self.phi(tp));
            rep.phi_minus = Some(self.phi(tm));
        }
        Ok(rep)
    }
}

/// Case label of the fiber classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberingCase {
    /// `μ < μ(u)`: a local minimum `t_plus` and a local maximum `t_minus`.
    TwoRoots,
    /// `μ = μ(u)`: one degenerate critical point at `s(u)`.
    Degenerate,
    /// `μ > μ(u)`: the fiber is strictly decreasing.
    NoRoots,
}

/// Critical points of the fiber through a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberingReport {
    pub mu_threshold: f64,
    pub s_star: f64,
    pub case: FiberingCase,
    pub t_plus: Option<f64>,
    pub t_minus: Option<f64>,
    pub t_zero: Option<f64>,
    pub phi_plus: Option<f64>,
    pub phi_minus: Option<f64>,
}

impl FiberingReport {
    pub fn root(&self, branch: Branch) -> Option<f64> {
        match branch {
            Branch::Plus => self.t_plus,
            Branch::Minus => self.t_minus,
            Branch::Zero => self.t_zero,
        }
    }
}

/// `(u)_s = s^{N/p} u(s r)` resampled on the grid of `u` by monotone cubic
/// interpolation. Values at `s r > R` are zero.
pub fn mass_scale(u: &RadialFunction, s: f64, params: &ProblemParams) -> Result<RadialFunction> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!("dilation factor must be positive, got {s}")));
    }
    let g = u.grid();
    if s == 1.0 {
        return Ok(u.clone());
    }
    let support = u
        .values()
        .iter()
        .rposition(|&v| v != 0.0)
        .map(|i| g.nodes()[(i + 1).min(g.n())])
        .unwrap_or(0.0);
    if support / s < 3.0 * g.h() {
        return Err(Error::ResolutionLoss(format!(
            "dilation by {s} squeezes the support (r <= {support}) below 4 grid nodes (h = {})",
            g.h()
        )));
    }
    let amp = s.powf(g.dim() as f64 / params.p);
    let it = u.interpolant();
    let values = g.nodes().iter().map(|&r| amp * it.eval(s * r)).collect();
    RadialFunction::new(g.clone(), values)
}

/// Mass-preserving dilation realized on the grid of radius `R/s` with the
/// same node count: the nodal values are multiplied by `s^{N/p}` and no
/// interpolation takes place, so every discrete functional scales exactly
/// (`X → s^p X`, `‖u‖_q^q → s^{qγ_q} ‖u‖_q^q`, mass unchanged).
pub fn dilate_exact(u: &RadialFunction, s: f64, params: &ProblemParams) -> Result<RadialFunction> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!("dilation factor must be positive, got {s}")));
    }
    let g = u.grid();
    let g2 = Arc::new(make_grid(g.radius() / s, g.n(), g.dim())?);
    let amp = s.powf(g.dim() as f64 / params.p);
    RadialFunction::new(g2, u.values().iter().map(|v| amp * v).collect())
}

/// `Ψ_μ(u) = X/p - μY/q1 - Z/q2`.
pub fn energy(u: &RadialFunction, params: &ProblemParams) -> f64 {
    energy_of(triple(u, params), params)
}

pub fn energy_of(t: Triple, params: &ProblemParams) -> f64 {
    t.x / params.p - params.mu * t.y / params.q1 - t.z / params.q2
}

/// `P(u) = X - μγ1 Y - γ2 Z`.
pub fn pohozaev(u: &RadialFunction, params: &ProblemParams) -> f64 {
    pohozaev_of(triple(u, params), params)
}

pub fn pohozaev_of(t: Triple, params: &ProblemParams) -> f64 {
    t.x - params.mu * params.gamma1() * t.y - params.gamma2() * t.z
}

/// `Φ_{μ,u}(s) = Ψ_μ((u)_s)` from the exact scaling of the triple.
pub fn fibering_value(u: &RadialFunction, s: f64, params: &ProblemParams) -> f64 {
    FiberMap::of(u, params).phi(s)
}

/// Threshold `μ(u)` above which the fiber through `u` has no critical point.
pub fn mu_of_u(u: &RadialFunction, params: &ProblemParams) -> Result<f64> {
    let f = FiberMap::of(u, params);
    if let Some(msg) = f.degenerate_input() {
        return Err(Error::DegenerateInput(msg));
    }
    Ok(f.mu_threshold())
}

/// Maximizer `s(u)` of the reduced fiber derivative.
pub fn s_star(u: &RadialFunction, params: &ProblemParams) -> Result<f64> {
    let f = FiberMap::of(u, params);
    if let Some(msg) = f.degenerate_input() {
        return Err(Error::DegenerateInput(msg));
    }
    Ok(f.s_star())
}

pub fn classify_fibering(u: &RadialFunction, params: &ProblemParams) -> Result<FiberingReport> {
    FiberMap::of(u, params).classify()
}

/// Dilates `u` onto the requested branch of the Pohozaev manifold.
pub fn project_to_manifold(u: &RadialFunction, branch: Branch, params: &ProblemParams) -> Result<RadialFunction> {
    project_with_scale(u, branch, params).map(|(v, _)| v)
}

/// As [`project_to_manifold`], also returning the accumulated dilation factor.
///
/// The closed-form root is computed from the triple of `u`; since the resampled
/// profile has a slightly different discrete triple, the dilation is corrected
/// from the resampled profile until the discrete root sits at `t = 1`, and the
/// `L^p` mass is restored after each resampling.
pub fn project_with_scale(
    u: &RadialFunction,
    branch: Branch,
    params: &ProblemParams,
) -> Result<(RadialFunction, f64)> {
    if branch == Branch::Zero {
        return Err(Error::invalid("projection is defined for the plus and minus branches"));
    }
    let rep = classify_fibering(u, params)?;
    let mut t = match (rep.case, rep.root(branch)) {
        (FiberingCase::TwoRoots, Some(t)) => t,
        _ => {
            return Err(Error::ProjectionUnavailable(format!(
                "fiber has {:?} at mu = {} (mu(u) = {})",
                rep.case, params.mu, rep.mu_threshold
            )))
        }
    };
    if (t - 1.0).abs() < 1e-13 {
        return Ok((u.clone(), 1.0));
    }
    let mass = lq_power(u, params.p)?;
    let mut v = u.clone();
    for _ in 0..12 {
        v = mass_scale(u, t, params)?;
        let m = lq_power(&v, params.p)?;
        v = v.scaled((mass / m).powf(1.0 / params.p));
        let r = classify_fibering(&v, params)?;
        let tv = match (r.case, r.root(branch)) {
            (FiberingCase::TwoRoots, Some(tv)) => tv,
            _ => {
                return Err(Error::ProjectionUnavailable(format!(
                    "resampled fiber lost its {branch} critical point ({:?})",
                    r.case
                )))
            }
        };
        if (tv - 1.0).abs() < 1e-13 {
            break;
        }
        t *= tv;
    }
    Ok((v, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{grad_power, lq_norm, make_grid};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn sub() -> ProblemParams {
        ProblemParams::new(3, 2.0, 2.5, 4.0, 1.0, 1.0).unwrap()
    }

    fn gaussian(r: f64, n: usize, sigma: f64) -> RadialFunction {
        let g = Arc::new(make_grid(r, n, 3).unwrap());
        RadialFunction::from_fn(g, |x| (-x * x / (2.0 * sigma * sigma)).exp()).unwrap()
    }

    /// Grid fine enough that the second-order gradient error stays below
    /// 1e-8 at every dilation in [0.1, 10].
    const FINE: usize = 1 << 22;

    fn bump(n: usize, rho: f64) -> RadialFunction {
        let g = Arc::new(make_grid(20.0, n, 3).unwrap());
        RadialFunction::from_fn(g, |x| if x < rho { (1.0 - (x / rho).powi(2)).powi(4) } else { 0.0 }).unwrap()
    }

    #[test]
    fn exact_dilation_scales_every_functional() {
        let pr = sub();
        let u = gaussian(10.0, 800, 1.3);
        let t = triple(&u, &pr);
        for s in [0.25, 0.9, 3.0, 17.0] {
            let v = dilate_exact(&u, s, &pr).unwrap();
            let tv = triple(&v, &pr);
            assert!((tv.x / (s.powf(pr.p) * t.x) - 1.0).abs() < 1e-13);
            assert!((tv.y / (s.powf(pr.q1 * pr.gamma1()) * t.y) - 1.0).abs() < 1e-13);
            assert!((tv.z / (s.powf(pr.q2 * pr.gamma2()) * t.z) - 1.0).abs() < 1e-13);
            let (m0, m1) = (lq_power(&u, pr.p).unwrap(), lq_power(&v, pr.p).unwrap());
            assert!((m1 / m0 - 1.0).abs() < 1e-13);
            assert!((mu_of_u(&v, &pr).unwrap() / mu_of_u(&u, &pr).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(dilate_exact(&u, 0.0, &pr).is_err());
    }

    #[test]
    fn identity_dilation() {
        let u = gaussian(10.0, 500, 1.0);
        assert_eq!(mass_scale(&u, 1.0, &sub()).unwrap(), u);
    }

    #[test]
    fn gradient_scales_like_s_to_the_p() {
        let pr = sub();
        let u = gaussian(12.0, 4000, 1.0);
        let v = mass_scale(&u, 2.0, &pr).unwrap();
        let ratio = grad_power(&v, 2.0).unwrap() / grad_power(&u, 2.0).unwrap();
        assert!((ratio / 4.0 - 1.0).abs() < 1e-4, "{ratio}");
        assert!((lq_norm(&v, 2.0).unwrap() / lq_norm(&u, 2.0).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lebesgue_scaling_against_refined_oracle() {
        let pr = sub();
        let s = 0.5;
        let q = pr.q1;
        let u = gaussian(20.0, 2000, 1.0);
        let v = mass_scale(&u, s, &pr).unwrap();
        let fine = gaussian(20.0, 16000, 1.0);
        let rhs = s.powf(q * pr.gamma(q)) * lq_power(&fine, q).unwrap();
        let lhs = lq_power(&v, q).unwrap();
        assert!((lhs / rhs - 1.0).abs() < 1e-6, "{lhs} vs {rhs}");
    }

    #[test]
    fn resolution_loss() {
        let u = bump(200, 1.0);
        assert!(matches!(mass_scale(&u, 100.0, &sub()), Err(Error::ResolutionLoss(_))));
        assert!(mass_scale(&u, 0.0, &sub()).is_err());
    }

    #[test]
    fn zero_profile_values() {
        let g = Arc::new(make_grid(5.0, 100, 3).unwrap());
        let z = RadialFunction::zeros(g);
        assert_eq!(energy(&z, &sub()), 0.0);
        assert_eq!(pohozaev(&z, &sub()), 0.0);
        assert!(matches!(mu_of_u(&z, &sub()), Err(Error::DegenerateInput(_))));
        assert!(classify_fibering(&z, &sub()).is_err());
    }

    #[test]
    fn energy_along_fiber() {
        let pr = sub();
        let u = gaussian(30.0, 24000, 1.0);
        for s in [0.5, 1.0, 2.0] {
            let e = energy(&mass_scale(&u, s, &pr).unwrap(), &pr);
            let f = fibering_value(&u, s, &pr);
            assert!((e - f).abs() < 1e-6 * f.abs().max(1.0), "s={s}: {e} vs {f}");
        }
    }

    #[test]
    fn mu_homogeneous_under_dilation() {
        let pr = sub();
        let u = bump(FINE, 1.5);
        let m = mu_of_u(&u, &pr).unwrap();
        for s in [0.3, 3.0] {
            let ms = mu_of_u(&mass_scale(&u, s, &pr).unwrap(), &pr).unwrap();
            assert!((ms / m - 1.0).abs() < 1e-8, "s={s}: {ms} vs {m}");
        }
    }

    #[test]
    fn mu_matches_dense_scan_of_h() {
        let pr = sub();
        let u = gaussian(15.0, 3000, 1.0);
        let f = FiberMap::of(&u, &pr);
        let best = (0..200_000)
            .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 200_000.0))
            .map(|s| f.h(s))
            .fold(f64::NEG_INFINITY, f64::max);
        let oracle = best / (pr.gamma1() * f.t.y);
        assert!((mu_of_u(&u, &pr).unwrap() / oracle - 1.0).abs() < 1e-8);
    }

    #[test]
    fn trichotomy() {
        let pr = sub();
        let u = gaussian(15.0, 3000, 1.0);
        let m = mu_of_u(&u, &pr).unwrap();
        let r = classify_fibering(&u, &pr.with_mu(0.5 * m)).unwrap();
        assert_eq!(r.case, FiberingCase::TwoRoots);
        let (tp, tm) = (r.t_plus.unwrap(), r.t_minus.unwrap());
        assert!(0.0 < tp && tp < r.s_star && r.s_star < tm);
        assert!(r.phi_plus.unwrap() < 0.0f64.min(r.phi_minus.unwrap()));
        let r = classify_fibering(&u, &pr.with_mu(m)).unwrap();
        assert_eq!(r.case, FiberingCase::Degenerate);
        assert_eq!(r.t_zero, Some(r.s_star));
        for k in [1.0001, 2.0] {
            assert_eq!(classify_fibering(&u, &pr.with_mu(k * m)).unwrap().case, FiberingCase::NoRoots);
        }
    }

    #[test]
    fn derivative_consistency() {
        let pr = sub();
        let f = FiberMap::of(&gaussian(15.0, 3000, 1.0), &pr);
        for s in [0.3, 1.0, 2.5] {
            let h = 1e-4 * s;
            let fd = (f.phi(s + h) - f.phi(s - h)) / (2.0 * h);
            assert!((fd - f.dphi(s)).abs() < 1e-7 * (1.0 + f.dphi(s).abs()));
            let fd2 = (f.dphi(s + h) - f.dphi(s - h)) / (2.0 * h);
            assert!((fd2 - f.d2phi(s)).abs() < 1e-6 * (1.0 + f.d2phi(s).abs()));
            assert!((f.dphi(s) - s.powf(pr.q1 * pr.gamma1() - 1.0) * f.reduced(s)).abs() < 1e-12);
        }
    }

    #[test]
    fn projections_land_on_each_branch() {
        let g = Arc::new(make_grid(20.0, 8000, 3).unwrap());
        let u = RadialFunction::from_fn(g, |r| (-r * r / 2.0).exp() + 0.5 * (-(r - 1.5).powi(2)).exp()).unwrap();
        let m = mu_of_u(&u, &sub()).unwrap();
        let pr = sub().with_mu(0.5 * m);
        let plus = project_to_manifold(&u, Branch::Plus, &pr).unwrap();
        let minus = project_to_manifold(&u, Branch::Minus, &pr).unwrap();
        for v in [&plus, &minus] {
            let x = grad_power(v, pr.p).unwrap();
            assert!(pohozaev(v, &pr).abs() < 1e-8 * x);
            assert!((lq_norm(v, 2.0).unwrap() / lq_norm(&u, 2.0).unwrap() - 1.0).abs() < 1e-12);
        }
        let fp = FiberMap::of(&plus, &pr);
        let fm = FiberMap::of(&minus, &pr);
        assert!(fp.d2phi(1.0) > 0.0);
        assert!(fm.d2phi(1.0) < 0.0);
        // finite-difference second derivative at the minus root
        let h = 1e-4;
        let fd2 = (fm.phi(1.0 + h) - 2.0 * fm.phi(1.0) + fm.phi(1.0 - h)) / (h * h);
        assert!(fd2 < 0.0);
        assert!(energy(&plus, &pr) < 0.0);
        let again = project_to_manifold(&plus, Branch::Plus, &pr).unwrap();
        assert_eq!(again, plus);
        assert!(matches!(
            project_to_manifold(&u, Branch::Plus, &sub().with_mu(2.0 * m)),
            Err(Error::ProjectionUnavailable(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn mu_is_dilation_invariant(log_s in -2.302f64..2.302, rho in 1.0f64..1.8) {
            let pr = sub();
            let u = bump(FINE, rho);
            let s = log_s.exp();
            let m = mu_of_u(&u, &pr).unwrap();
            let ms = mu_of_u(&mass_scale(&u, s, &pr).unwrap(), &pr).unwrap();
            prop_assert!((ms / m - 1.0).abs() < 1e-8, "s={} {} {}", s, ms, m);
        }

        #[test]
        fn root_ordering(w in 0.2f64..3.0, frac in 0.01f64..0.99) {
            let pr = sub();
            let f = FiberMap::new(Triple { x: 1.0, y: w, z: 1.0 / w }, &pr);
            let f = f.with_mu(frac * f.mu_threshold());
            let r = f.classify().unwrap();
            prop_assert_eq!(r.case, FiberingCase::TwoRoots);
            let (tp, tm) = (r.t_plus.unwrap(), r.t_minus.unwrap());
            prop_assert!(0.0 < tp && tp < r.s_star && r.s_star < tm);
            prop_assert!(f.dphi(tp).abs() < 1e-10 * (1.0 + tp.powf(pr.p - 1.0)));
            prop_assert!(f.d2phi(tp) > 0.0 && f.d2phi(tm) < 0.0);
        }
    }
}
