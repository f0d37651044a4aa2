//! Talenti bubbles, cutoff bubbles and their norm asymptotics, the Sobolev
//! constant, Gagliardo–Nirenberg optimizers and the mountain-pass energy
//! certificate of the Sobolev-critical case.
//!
//! The bubble
//! `U_ε(r) = d ε^{(N-p)/(p(p-1))} (ε^{p/(p-1)} + r^{p/(p-1)})^{(p-N)/p}`
//! solves `-Δ_p U = U^{p*-1}`. Its norms are integrated from the closed form
//! with Gauss panels; grid samples are provided for the discrete checks.

mod asymptotics;
mod gn;
mod path;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quad::GaussRule;
use crate::radial::{p_laplacian_apply, sphere_area, RadialFunction, RadialGrid};

pub use asymptotics::{bubble_asymptotics_fit, log_spaced, AsymptoticsFit, NormBranch, NormKind};
pub use gn::{gn_profile_and_constant, gn_quotient, GnOptions, GnReport};
pub use path::{
    mountain_pass_path, strict_inequality_certificate, CertificateOptions, EnergyCertificate, LatticePoint,
    PathCurve,
};

/// Concentration scale, cutoff exponent and normalization of a bubble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleSpec {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub eps: f64,
    /// Cutoff exponent; the cutoff bridge lives on `[ε^α, 2ε^α]`.
    pub alpha: f64,
    /// Normalization `d` making `U` solve `-Δ_p U = U^{p*-1}`.
    pub d: f64,
}

impl BubbleSpec {
    /// Validates `1 < p < N`, `ε > 0` and the admissible cutoff window, and
    /// computes the normalization.
    pub fn new(dim: usize, p: f64, eps: f64, alpha: f64) -> Result<Self> {
        check_dim_p(dim, p)?;
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::invalid(format!("bubble scale must be positive, got {eps}")));
        }
        let win = AlphaWindow::new(dim, p);
        if !win.contains(alpha) {
            return Err(Error::invalid(format!(
                "cutoff exponent {alpha} outside the admissible window {win} for N = {dim}, p = {p}"
            )));
        }
        Ok(Self { dim, p, eps, alpha, d: talenti_constant(dim, p)? })
    }

    /// Bubble for the `(N, p)` of `params` with the default cutoff exponent.
    pub fn for_params(params: &ProblemParams, eps: f64) -> Result<Self> {
        Self::new(params.dim, params.p, eps, AlphaWindow::new(params.dim, params.p).default_alpha())
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.dim, self.p, eps, self.alpha)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.dim, self.p, self.eps, alpha)
    }

    pub fn p_star(&self) -> f64 {
        let n = self.dim as f64;
        n * self.p / (n - self.p)
    }

    /// Inner radius `ε^α` of the cutoff bridge.
    pub fn cutoff_radius(&self) -> f64 {
        self.eps.powf(self.alpha)
    }

    /// `U_ε(r)`.
    pub fn value(&self, r: f64) -> f64 {
        let (n, p, e) = (self.dim as f64, self.p, self.eps);
        let b = p / (p - 1.0);
        self.d * e.powf((n - p) / (p * (p - 1.0))) * (e.powf(b) + r.powf(b)).powf((p - n) / p)
    }

    /// `U_ε'(r)`.
    pub fn derivative(&self, r: f64) -> f64 {
        let (n, p, e) = (self.dim as f64, self.p, self.eps);
        let b = p / (p - 1.0);
        -self.d * e.powf((n - p) / (p * (p - 1.0))) * (n - p) / (p - 1.0)
            * r.powf(1.0 / (p - 1.0))
            * (e.powf(b) + r.powf(b)).powf((p - n) / p - 1.0)
    }

    /// Cutoff `φ_ε(r)`: 1 up to `ε^α`, 0 beyond `2ε^α`, quintic smoothstep in
    /// between.
    pub fn cutoff(&self, r: f64) -> f64 {
        let rho = self.cutoff_radius();
        let t = ((r - rho) / rho).clamp(0.0, 1.0);
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }

    pub fn cutoff_derivative(&self, r: f64) -> f64 {
        let rho = self.cutoff_radius();
        if r <= rho || r >= 2.0 * rho {
            return 0.0;
        }
        let t = (r - rho) / rho;
        -30.0 * t * t * (1.0 - t) * (1.0 - t) / rho
    }

    /// `u_ε = φ_ε U_ε`.
    pub fn cutoff_value(&self, r: f64) -> f64 {
        self.cutoff(r) * self.value(r)
    }

    pub fn cutoff_value_derivative(&self, r: f64) -> f64 {
        self.cutoff_derivative(r) * self.value(r) + self.cutoff(r) * self.derivative(r)
    }
}

fn check_dim_p(dim: usize, p: f64) -> Result<()> {
    if dim < 2 || !(p > 1.0 && p < dim as f64) {
        return Err(Error::InvalidRegime(format!("bubbles need N >= 2 and 1 < p < N, got N = {dim}, p = {p}")));
    }
    Ok(())
}

/// Admissible cutoff exponents: `[0, 1/p)` for `p < 3`, and
/// `((N-p)(p-3)/(p(Np-3N+2)), 1/p)` for `p >= 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaWindow {
    pub lo: f64,
    pub hi: f64,
    pub lo_inclusive: bool,
}

impl AlphaWindow {
    pub fn new(dim: usize, p: f64) -> Self {
        let n = dim as f64;
        if p < 3.0 {
            Self { lo: 0.0, hi: 1.0 / p, lo_inclusive: true }
        } else {
            let lo = (n - p) * (p - 3.0) / (p * (n * p - 3.0 * n + 2.0));
            Self { lo, hi: 1.0 / p, lo_inclusive: false }
        }
    }

    pub fn contains(&self, alpha: f64) -> bool {
        let above = if self.lo_inclusive { alpha >= self.lo } else { alpha > self.lo };
        above && alpha < self.hi
    }

    pub fn default_alpha(&self) -> f64 {
        let a = 0.8 * self.hi;
        if self.contains(a) {
            a
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    /// `k` exponents spread evenly over the window, starting at a closed
    /// lower end.
    pub fn lattice(&self, k: usize) -> Vec<f64> {
        let k = k.max(1);
        (0..k)
            .map(|j| {
                let t = if self.lo_inclusive { j as f64 / k as f64 } else { (j as f64 + 1.0) / (k as f64 + 1.0) };
                self.lo + t * (self.hi - self.lo)
            })
            .collect()
    }
}

impl std::fmt::Display for AlphaWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let open = if self.lo_inclusive { '[' } else { '(' };
        write!(f, "{open}{}, {})", self.lo, self.hi)
    }
}

/// Radial flux `r^{N-1}|V'|^{p-2}V'` of the unnormalized unit bubble.
fn unit_flux(dim: usize, p: f64, r: f64) -> f64 {
    let spec = BubbleSpec { dim, p, eps: 1.0, alpha: 0.0, d: 1.0 };
    let dv = spec.derivative(r);
    r.powi(dim as i32 - 1) * dv.abs().powf(p - 2.0) * dv
}

/// `d^{p*-p}` from `-Δ_p V(r) = d^{p*-p} V(r)^{p*-1}` at one radius, with the
/// divergence taken by a fourth-order central difference of the flux.
fn normalization_power_at(dim: usize, p: f64, r: f64) -> f64 {
    let spec = BubbleSpec { dim, p, eps: 1.0, alpha: 0.0, d: 1.0 };
    let h = 1e-3 * r;
    let f = |x: f64| unit_flux(dim, p, x);
    let df = (8.0 * (f(r + h) - f(r - h)) - (f(r + 2.0 * h) - f(r - 2.0 * h))) / (12.0 * h);
    let lap = -df / r.powi(dim as i32 - 1);
    lap / spec.value(r).powf(spec.p_star() - 1.0)
}

/// Normalization `d_{N,p}` of the Talenti bubble, found by substituting the
/// profile into the radial equation at `r = 1` and confirmed at three more
/// radii.
pub fn talenti_constant(dim: usize, p: f64) -> Result<f64> {
    check_dim_p(dim, p)?;
    let ps = dim as f64 * p / (dim as f64 - p);
    let k = normalization_power_at(dim, p, 1.0);
    for r in [0.3, 2.0, 5.0] {
        let kr = normalization_power_at(dim, p, r);
        if ((kr - k) / k).abs() > 1e-7 {
            return Err(Error::Numeric(format!(
                "bubble ansatz inconsistent: normalization {kr} at r = {r} vs {k} at r = 1"
            )));
        }
    }
    if !(k > 0.0) {
        return Err(Error::Numeric(format!("bubble normalization power is not positive: {k}")));
    }
    Ok(k.powf(1.0 / (ps - p)))
}

/// Talenti bubble sampled on `grid`.
pub fn talenti_bubble(spec: &BubbleSpec, grid: Arc<RadialGrid>) -> Result<RadialFunction> {
    check_grid_dim(spec, &grid)?;
    RadialFunction::from_fn(grid, |r| spec.value(r))
}

/// Cutoff bubble `φ_ε U_ε` sampled on `grid`.
pub fn cutoff_bubble(spec: &BubbleSpec, grid: Arc<RadialGrid>) -> Result<RadialFunction> {
    check_grid_dim(spec, &grid)?;
    let support = 2.0 * spec.cutoff_radius();
    if support >= grid.radius() {
        return Err(Error::invalid(format!(
            "cutoff support 2ε^α = {support} does not fit in the grid radius {}",
            grid.radius()
        )));
    }
    RadialFunction::from_fn(grid, |r| spec.cutoff_value(r))
}

fn check_grid_dim(spec: &BubbleSpec, grid: &RadialGrid) -> Result<()> {
    if grid.dim() != spec.dim {
        return Err(Error::invalid(format!("grid dimension {} differs from bubble dimension {}", grid.dim(), spec.dim)));
    }
    Ok(())
}

/// Largest residual of the discrete `-Δ_p U - U^{p*-1}` over nodes with
/// `r_min <= r <= r_max`, relative to `max U^{p*-1}`.
///
/// For `p != 2` the finite-volume flux is only first-order accurate in the
/// few cells next to the origin, where `U'` behaves like `r^{1/(p-1)}`.
pub fn bubble_pde_residual(u: &RadialFunction, spec: &BubbleSpec, r_min: f64, r_max: f64) -> Result<f64> {
    let lap = p_laplacian_apply(u, spec.p)?;
    let e = spec.p_star() - 1.0;
    let scale = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs().powf(e)));
    let worst = u
        .grid()
        .nodes()
        .iter()
        .zip(u.values().iter().zip(lap.values()))
        .filter(|(r, _)| **r >= r_min && **r <= r_max)
        .fold(0.0f64, |m, (_, (v, l))| m.max((l - v.powf(e)).abs()));
    Ok(worst / scale)
}

fn rule() -> GaussRule {
    GaussRule::new(20)
}

/// Exact norms of `U_ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleNorms {
    /// `‖∇U_ε‖_p^p`.
    pub grad_power: f64,
    /// `‖U_ε‖_{p*}^{p*}`.
    pub critical_power: f64,
}

/// Gradient and critical norms of `U_ε` by quadrature of the closed form.
pub fn bubble_norms(spec: &BubbleSpec) -> BubbleNorms {
    let g = rule();
    let omega = sphere_area(spec.dim);
    let m = spec.dim as i32 - 1;
    let ps = spec.p_star();
    let grad = omega * g.integrate_half_line(spec.eps, |r| spec.derivative(r).abs().powf(spec.p) * r.powi(m));
    let crit = omega * g.integrate_half_line(spec.eps, |r| spec.value(r).powf(ps) * r.powi(m));
    BubbleNorms { grad_power: grad, critical_power: crit }
}

/// Sobolev constant and its consistency data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    /// `S = ‖∇U‖_p^p / ‖U‖_{p*}^p` at `ε = 1`.
    pub s: f64,
    /// The same quotient at `ε = 0.5` and `ε = 2`.
    pub s_half: f64,
    pub s_double: f64,
    /// `S^{N/p}`.
    pub s_np: f64,
    pub norms: BubbleNorms,
}

fn sobolev_quotient(spec: &BubbleSpec) -> f64 {
    let nm = bubble_norms(spec);
    nm.grad_power / nm.critical_power.powf(spec.p / spec.p_star())
}

/// Best Sobolev constant from the quotient of the reference bubble.
pub fn sobolev_constant(dim: usize, p: f64) -> Result<SobolevReport> {
    let alpha = AlphaWindow::new(dim, p).default_alpha();
    let spec = BubbleSpec::new(dim, p, 1.0, alpha)?;
    let norms = bubble_norms(&spec);
    let s = norms.grad_power / norms.critical_power.powf(p / spec.p_star());
    Ok(SobolevReport {
        dim,
        p,
        s,
        s_half: sobolev_quotient(&spec.with_eps(0.5)?),
        s_double: sobolev_quotient(&spec.with_eps(2.0)?),
        s_np: s.powf(dim as f64 / p),
        norms,
    })
}

/// `‖u_ε‖_q^q` and `‖∇u_ε‖_q^q` of the cutoff bubble by quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffNorms {
    pub q: f64,
    pub lebesgue: f64,
    pub gradient: f64,
}

/// Panels on `[0, 2ε^α]`: geometric around `ε`, then uniform on the bridge.
fn cutoff_breaks(spec: &BubbleSpec) -> Vec<f64> {
    let rho = spec.cutoff_radius();
    let mut b = vec![0.0];
    let mut r = 1e-6 * spec.eps;
    while r < rho {
        b.push(r);
        r *= 2.0;
    }
    for k in 0..=16 {
        b.push(rho * (1.0 + k as f64 / 16.0));
    }
    b
}

pub fn cutoff_norms(spec: &BubbleSpec, q: f64) -> Result<CutoffNorms> {
    if !(q > 0.0) {
        return Err(Error::invalid(format!("norm exponent must be positive, got {q}")));
    }
    let g = rule();
    let omega = sphere_area(spec.dim);
    let m = spec.dim as i32 - 1;
    let b = cutoff_breaks(spec);
    let lebesgue = omega * g.integrate_panels(&b, |r| spec.cutoff_value(r).abs().powf(q) * r.powi(m));
    let gradient = omega * g.integrate_panels(&b, |r| spec.cutoff_value_derivative(r).abs().powf(q) * r.powi(m));
    Ok(CutoffNorms { q, lebesgue, gradient })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{gamma_fn, make_grid};
    use proptest::prelude::*;

    const CASES: [(usize, f64); 3] = [(3, 2.0), (4, 2.5), (5, 3.0)];

    fn closed_form_normalization(dim: usize, p: f64) -> f64 {
        let n = dim as f64;
        let ps = n * p / (n - p);
        (n * ((n - p) / (p - 1.0)).powf(p - 1.0)).powf(1.0 / (ps - p))
    }

    /// `S = π N (N-2) (Γ(N/2)/Γ(N))^{2/N}` for `p = 2`.
    fn closed_form_sobolev_p2(dim: usize) -> f64 {
        let n = dim as f64;
        std::f64::consts::PI * n * (n - 2.0) * (gamma_fn(n / 2.0) / gamma_fn(n)).powf(2.0 / n)
    }

    #[test]
    fn normalization_matches_hand_derived_value() {
        for (n, p) in CASES {
            let d = talenti_constant(n, p).unwrap();
            let exact = closed_form_normalization(n, p);
            assert!((d / exact - 1.0).abs() < 1e-9, "N={n} p={p}: {d} vs {exact}");
        }
        assert!(talenti_constant(3, 3.0).is_err());
    }

    #[test]
    fn peak_scales_like_eps_power() {
        for (n, p) in CASES {
            let s1 = BubbleSpec::new(n, p, 1.0, AlphaWindow::new(n, p).default_alpha()).unwrap();
            for eps in [0.01, 0.3, 4.0] {
                let s = s1.with_eps(eps).unwrap();
                let expected = s1.d * eps.powf(-(n as f64 - p) / p);
                assert!((s.value(0.0) / expected - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let s = BubbleSpec::new(4, 2.5, 0.7, 0.1).unwrap();
        for r in [0.05, 0.5, 2.0, 9.0] {
            let h = 1e-5 * r;
            let fd = (s.value(r + h) - s.value(r - h)) / (2.0 * h);
            assert!((s.derivative(r) / fd - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn energy_identity_and_sobolev_constant() {
        for (n, p) in CASES {
            let rep = sobolev_constant(n, p).unwrap();
            let nm = rep.norms;
            assert!((nm.grad_power / nm.critical_power - 1.0).abs() < 1e-4, "N={n} p={p}: {nm:?}");
            assert!((rep.s_np / nm.grad_power - 1.0).abs() < 1e-4);
            assert!(((rep.s_half - rep.s_double) / rep.s).abs() < 1e-3);
        }
        for n in [3, 4, 5] {
            let s = sobolev_constant(n, 2.0).unwrap().s;
            let exact = closed_form_sobolev_p2(n);
            assert!((s / exact - 1.0).abs() < 1e-3, "N={n}: {s} vs {exact}");
        }
    }

    #[test]
    fn discrete_bubble_solves_the_critical_equation() {
        for (n, p) in CASES {
            let spec = BubbleSpec::new(n, p, 1.0, AlphaWindow::new(n, p).default_alpha()).unwrap();
            let g = Arc::new(make_grid(20.0, 16000, n).unwrap());
            let u = talenti_bubble(&spec, g).unwrap();
            let res = bubble_pde_residual(&u, &spec, 0.1, 10.0).unwrap();
            assert!(res < 1e-4, "N={n} p={p}: residual {res}");
        }
    }

    #[test]
    fn alpha_window_bounds() {
        let w = AlphaWindow::new(3, 2.0);
        assert!(w.contains(0.0) && w.contains(0.49) && !w.contains(0.5));
        assert!((w.default_alpha() - 0.4).abs() < 1e-15);
        let w = AlphaWindow::new(5, 3.5);
        let lo = 1.5 * 0.5 / (3.5 * (17.5 - 15.0 + 2.0));
        assert!((w.lo - lo).abs() < 1e-15 && !w.contains(lo) && w.contains(0.2));
        assert!(BubbleSpec::new(3, 2.0, 0.1, 0.6).is_err());
        assert_eq!(AlphaWindow::new(3, 2.0).lattice(4), vec![0.0, 0.125, 0.25, 0.375]);
    }

    #[test]
    fn cutoff_profile_shape() {
        let spec = BubbleSpec::new(3, 2.0, 0.01, 0.4).unwrap();
        let rho = spec.cutoff_radius();
        let g = Arc::new(make_grid(1.0, 4000, 3).unwrap());
        let u = cutoff_bubble(&spec, g.clone()).unwrap();
        for (r, v) in g.nodes().iter().zip(u.values()) {
            if *r <= rho {
                assert_eq!(*v, spec.value(*r));
            }
            if *r >= 2.0 * rho {
                assert_eq!(*v, 0.0);
            }
        }
        let mut prev = f64::INFINITY;
        for k in 0..=100 {
            let r = rho * (1.0 + k as f64 / 100.0);
            let phi = spec.cutoff(r);
            assert!(phi <= prev && (0.0..=1.0).contains(&phi));
            assert!(spec.cutoff_derivative(r).abs() <= 1.875 / rho + 1e-12);
            prev = phi;
        }
        let small = Arc::new(make_grid(0.3, 100, 3).unwrap());
        assert!(cutoff_bubble(&spec, small).is_err());
    }

    #[test]
    fn cutoff_critical_norm_defect() {
        for alpha in [0.0, 0.4] {
            let spec = BubbleSpec::new(3, 2.0, 1e-2, alpha).unwrap();
            let s_np = sobolev_constant(3, 2.0).unwrap().s_np;
            let nm = cutoff_norms(&spec, spec.p_star()).unwrap();
            let defect = (s_np - nm.lebesgue) / s_np;
            let scale = spec.eps.powf(3.0 * (1.0 - alpha));
            assert!(defect > 0.0 && defect < 2.0 * scale, "alpha={alpha}: {defect} vs {scale}");
        }
    }

    #[test]
    fn cutoff_norms_increase_as_the_cutoff_widens() {
        let base = BubbleSpec::new(3, 2.0, 0.05, 0.0).unwrap();
        let mut prev = 0.0;
        for alpha in [0.4, 0.3, 0.2, 0.1, 0.0] {
            let v = cutoff_norms(&base.with_alpha(alpha).unwrap(), 2.0).unwrap().lebesgue;
            assert!(v > prev);
            prev = v;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn cutoff_quotients_respect_sobolev(eps in 1e-3f64..0.3, alpha in 0.0f64..0.49) {
            let spec = BubbleSpec::new(3, 2.0, eps, alpha).unwrap();
            let s = sobolev_constant(3, 2.0).unwrap().s;
            let grad = cutoff_norms(&spec, 2.0).unwrap().gradient;
            let crit = cutoff_norms(&spec, spec.p_star()).unwrap().lebesgue;
            prop_assert!(grad / crit.powf(2.0 / spec.p_star()) >= s - 1e-3);
        }
    }
}
