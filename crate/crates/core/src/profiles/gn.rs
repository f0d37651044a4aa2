//! Optimizers of the Gagliardo–Nirenberg inequality
//! `‖u‖_q <= C ‖∇u‖_p^γ ‖u‖_p^{1-γ}` through the ground state of
//! `-Δ_p W + W^{p-1} = W^{q-1}`.
//!
//! The radial ground state is located by shooting on `W(0)`, spliced onto
//! its exponential tail where the bracketing trajectories separate, and
//! polished by Newton on the discrete equation.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radial::{grad_power, lq_power, make_grid, RadialFunction};
use crate::solver::newton::{self, nodal_part, Bordered, NewtonOptions, NodalPart};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnOptions {
    /// Grid spacing of both the shooting integrator and the discrete profile.
    pub step: f64,
    /// Grid radius in decay lengths `(p-1)^{1/p}`.
    pub span: f64,
    /// Bisection stops when the bracket on `W(0)` is this narrow.
    pub shooting_tol: f64,
}

impl Default for GnOptions {
    fn default() -> Self {
        Self { step: 0.005, span: 40.0, shooting_tol: 1e-13 }
    }
}

/// Ground state and the constant it induces.
#[derive(Debug, Clone, Serialize)]
pub struct GnReport {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    /// `γ_q = N(q-p)/(pq)`.
    pub gamma: f64,
    #[serde(skip)]
    pub profile: RadialFunction,
    /// Shooting value `W(0)` and the polished discrete value.
    pub shooting_w0: f64,
    pub w0: f64,
    /// Constant from `∫ W^q` through the scaling identity.
    pub constant: f64,
    /// Gagliardo–Nirenberg quotient evaluated directly on the profile.
    pub quotient: f64,
    /// Relative strong-form residual of the discrete profile equation.
    pub residual: f64,
    pub positive_decreasing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    Overshoot,
    Undershoot,
}

#[derive(Debug, Clone, Copy)]
struct Ode {
    dim: usize,
    p: f64,
    q: f64,
}

impl Ode {
    /// `(W, ψ)' ` with `ψ = |W'|^{p-2} W'`.
    fn rhs(&self, r: f64, w: f64, psi: f64) -> (f64, f64) {
        let dw = psi.signum() * psi.abs().powf(1.0 / (self.p - 1.0));
        let s = w.signum();
        let a = w.abs();
        let dpsi = -(self.dim as f64 - 1.0) / r * psi + s * (a.powf(self.p - 1.0) - a.powf(self.q - 1.0));
        (dw, dpsi)
    }

    /// RK4 on the nodes `i h` from the series start at `r = h`; stops at the
    /// first zero crossing or upturn. Returns the classification and `W` at
    /// the nodes reached.
    fn shoot(&self, w0: f64, h: f64, nodes: usize) -> (Shot, Vec<f64>) {
        let (n, p) = (self.dim as f64, self.p);
        let c = w0.powf(p - 1.0) - w0.powf(self.q - 1.0);
        let mut w = w0 + c.signum() * (c.abs() / n).powf(1.0 / (p - 1.0)) * (p - 1.0) / p * h.powf(p / (p - 1.0));
        let mut psi = c * h / n;
        let mut out = Vec::with_capacity(nodes);
        out.push(w0);
        out.push(w);
        for i in 1..nodes - 1 {
            let r = i as f64 * h;
            let (k1w, k1p) = self.rhs(r, w, psi);
            let (k2w, k2p) = self.rhs(r + 0.5 * h, w + 0.5 * h * k1w, psi + 0.5 * h * k1p);
            let (k3w, k3p) = self.rhs(r + 0.5 * h, w + 0.5 * h * k2w, psi + 0.5 * h * k2p);
            let (k4w, k4p) = self.rhs(r + h, w + h * k3w, psi + h * k3p);
            w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            psi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            if w < 0.0 || !w.is_finite() {
                return (Shot::Overshoot, out);
            }
            out.push(w);
            if psi > 0.0 {
                return (Shot::Undershoot, out);
            }
            if w < 1e-12 {
                return (Shot::Overshoot, out);
            }
        }
        (Shot::Overshoot, out)
    }
}

struct GnSystem<'a> {
    g: &'a crate::radial::RadialGrid,
    p: f64,
    q: f64,
}

impl Bordered for GnSystem<'_> {
    fn grid(&self) -> &crate::radial::RadialGrid {
        self.g
    }
    fn nodal(&self, u: &[f64], _x: &[f64]) -> NodalPart {
        nodal_part(self.g, u, self.p, &[(-1.0, self.p), (1.0, self.q)])
    }
    fn nodal_extra_cols(&self, _u: &[f64], _x: &[f64]) -> Vec<Vec<f64>> {
        Vec::new()
    }
    fn extra_eqs(&self, _u: &[f64], _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    fn extra_jac(&self, _u: &[f64], _x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (Vec::new(), Vec::new())
    }
}

/// `‖u‖_q / (‖∇u‖_p^γ ‖u‖_p^{1-γ})` with `γ = N(q-p)/(pq)`.
pub fn gn_quotient(u: &RadialFunction, p: f64, q: f64) -> Result<f64> {
    let gamma = u.grid().dim() as f64 * (q - p) / (p * q);
    let lq = lq_power(u, q)?.powf(1.0 / q);
    let grad = grad_power(u, p)?.powf(1.0 / p);
    let lp = lq_power(u, p)?.powf(1.0 / p);
    Ok(lq / (grad.powf(gamma) * lp.powf(1.0 - gamma)))
}

/// Constant from `(C^q)^{p/(q-p)} = γ^{-N/p} (q/(q-qγ))^{q/(q-p)-N/p} / ∫W^q`.
fn constant_from_profile(dim: usize, p: f64, q: f64, int_wq: f64) -> f64 {
    let n = dim as f64;
    let gamma = n * (q - p) / (p * q);
    let lhs = gamma.powf(-n / p) * (q / (q - q * gamma)).powf(q / (q - p) - n / p) / int_wq;
    lhs.powf((q - p) / (p * q))
}

/// Ground state `W_{1,q}` of `-Δ_p W + W^{p-1} = W^{q-1}` and the optimal
/// Gagliardo–Nirenberg constant `C_{N,p,q}`.
pub fn gn_profile_and_constant(dim: usize, p: f64, q: f64, opts: &GnOptions) -> Result<GnReport> {
    let n = dim as f64;
    if dim < 2 || !(p > 1.0 && p < n) {
        return Err(Error::InvalidRegime(format!("need N >= 2 and 1 < p < N, got N = {dim}, p = {p}")));
    }
    let ps = n * p / (n - p);
    if !(q > p && q < ps) {
        return Err(Error::InvalidRegime(format!("q must lie in (p, p*) = ({p}, {ps}), got {q}")));
    }
    if !(opts.step > 0.0) || !(opts.span > 0.0) {
        return Err(Error::invalid("shooting step and span must be positive"));
    }
    let k = (1.0 / (p - 1.0)).powf(1.0 / p);
    let radius = opts.span / k;
    let cells = (radius / opts.step).ceil() as usize;
    let grid = Arc::new(make_grid(radius, cells, dim)?);
    let h = grid.h();
    let ode = Ode { dim, p, q };

    let mut lo = 1.0 + 1e-3;
    if ode.shoot(lo, h, cells + 1).0 != Shot::Undershoot {
        return Err(Error::InvalidRegime("shooting bracket not found: small W(0) does not undershoot".into()));
    }
    let mut hi = 2.0;
    let mut found = false;
    for _ in 0..60 {
        if ode.shoot(hi, h, cells + 1).0 == Shot::Overshoot {
            found = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !found {
        return Err(Error::InvalidRegime("shooting bracket not found: no overshoot".into()));
    }
    while hi - lo > opts.shooting_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match ode.shoot(mid, h, cells + 1).0 {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot => lo = mid,
        }
    }
    let (_, wl) = ode.shoot(lo, h, cells + 1);
    let (_, wh) = ode.shoot(hi, h, cells + 1);
    // Trust the trajectory until the brackets separate.
    let m = wl.len().min(wh.len());
    let cut = (1..m).find(|&i| (wh[i] - wl[i]).abs() > 1e-3 * wl[i]).unwrap_or(m - 1);
    let rc = cut as f64 * h;
    let wc = wl[cut];
    let alg = (n - 1.0) / (p * (p - 1.0));
    let mut u = vec![0.0; cells + 1];
    for (i, ui) in u.iter_mut().enumerate().take(cells) {
        *ui = if i <= cut {
            wl[i]
        } else {
            let r = i as f64 * h;
            wc * (-k * (r - rc)).exp() * (rc / r).powf(alg)
        };
    }

    let sys = GnSystem { g: &grid, p, q };
    let out = newton::solve(&sys, u, Vec::new(), &NewtonOptions { tol: 1e-11, max_iter: 60 })?;
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            reason: format!("profile equation residual stalled at {:.3e}", out.residual),
            best: None,
        });
    }
    let profile = RadialFunction::new(grid.clone(), out.u)?;
    let v = profile.values();
    let floor = 1e-10 * v[0];
    let positive_decreasing = v[..cells].iter().take_while(|&&x| x > floor).count() > 0
        && v.windows(2).take_while(|s| s[1] > floor).all(|s| s[1] <= s[0] && s[1] > 0.0);
    let int_wq = lq_power(&profile, q)?;
    Ok(GnReport {
        dim,
        p,
        q,
        gamma: n * (q - p) / (p * q),
        shooting_w0: 0.5 * (lo + hi),
        w0: v[0],
        constant: constant_from_profile(dim, p, q, int_wq),
        quotient: gn_quotient(&profile, p, q)?,
        residual: out.residual,
        positive_decreasing,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cubic_ground_state_in_three_dimensions() {
        let r = gn_profile_and_constant(3, 2.0, 4.0, &GnOptions::default()).unwrap();
        // Peak of the ground state of -ΔQ + Q = Q^3 in R^3.
        assert!((r.shooting_w0 - 4.3374).abs() < 2e-4, "{}", r.shooting_w0);
        assert!(r.residual < 1e-6);
        assert!(r.positive_decreasing);
        assert!((r.quotient / r.constant - 1.0).abs() < 1e-4, "{} vs {}", r.quotient, r.constant);
    }

    #[test]
    fn random_profiles_stay_below_the_constant() {
        let r = gn_profile_and_constant(3, 2.0, 4.0, &GnOptions::default()).unwrap();
        let g = r.profile.grid().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let terms: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..4))
                .map(|_| (rng.gen_range(0.1..2.0), rng.gen_range(0.3..4.0), rng.gen_range(1.0..2.5)))
                .collect();
            let u = RadialFunction::from_fn(g.clone(), |x| {
                terms.iter().map(|(a, s, b)| a * (-(x / s).powf(*b)).exp()).sum::<f64>()
            })
            .unwrap();
            let qv = gn_quotient(&u, 2.0, 4.0).unwrap();
            assert!(qv <= r.constant * (1.0 + 1e-6), "{qv} > {}", r.constant);
        }
    }

    #[test]
    fn degenerate_diffusion_profile() {
        let r = gn_profile_and_constant(3, 2.5, 4.0, &GnOptions::default()).unwrap();
        assert!(r.residual < 1e-6 && r.positive_decreasing);
        assert!((r.quotient / r.constant - 1.0).abs() < 1e-4);
    }

    #[test]
    fn exponent_gate() {
        let o = GnOptions::default();
        assert!(matches!(gn_profile_and_constant(3, 2.0, 2.0, &o), Err(Error::InvalidRegime(_))));
        assert!(matches!(gn_profile_and_constant(3, 2.0, 6.0, &o), Err(Error::InvalidRegime(_))));
        assert!(matches!(gn_profile_and_constant(2, 2.0, 4.0, &o), Err(Error::InvalidRegime(_))));
    }
}
