//! Radial discretization of functions on `R^N`.
//!
//! A [`RadialGrid`] is a uniform grid `r_i = i h` on `[0, R]` carrying two
//! quadrature rules for the measure `ω_{N-1} r^{N-1} dr`:
//!
//! * nodal trapezoid weights `w_i`, used for every Lebesgue integral;
//! * midpoint weights `W_{i+1/2}`, used for gradient integrals, paired with the
//!   staggered differences `D_{i+1/2} = (u_{i+1} - u_i)/h`.
//!
//! The strong-form p-Laplacian of [`p_laplacian_apply`] is a finite-volume
//! operator on the cells `[r_{i-1/2}, r_{i+1/2}]`; paired with the exact cell
//! measures `V_i` it is the adjoint of the discrete Dirichlet energy
//! `Σ W |D|^p`, so `Σ V_i (-Δ_p u)_i u_i = ‖∇u‖_p^p` holds to round-off for
//! any `u` vanishing at `R`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Surface measure of the unit sphere `S^{N-1}`.
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(n / 2.0) / gamma_fn(n / 2.0)
}

/// Gamma function on half-integers and integers, which is all the radial
/// measure needs; falls back to Lanczos for other positive arguments.
pub(crate) fn gamma_fn(x: f64) -> f64 {
    if x > 0.0 && (2.0 * x).fract() == 0.0 && x < 170.0 {
        let mut acc = if x.fract() == 0.0 { 1.0 } else { PI.sqrt() };
        let mut y = if x.fract() == 0.0 { 1.0 } else { 0.5 };
        while y < x {
            acc *= y;
            y += 1.0;
        }
        return acc;
    }
    lanczos_gamma(x)
}

fn lanczos_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * lanczos_gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Uniform radial grid with quadrature weights for `ω_{N-1} r^{N-1} dr`.
#[derive(Clone, PartialEq)]
pub struct RadialGrid {
    r: Vec<f64>,
    h: f64,
    dim: usize,
    omega: f64,
    w: Vec<f64>,
    wm: Vec<f64>,
    cells: Vec<f64>,
}

impl RadialGrid {
    /// Number of intervals; the grid has `n + 1` nodes.
    pub fn n(&self) -> usize {
        self.r.len() - 1
    }
    pub fn len(&self) -> usize {
        self.r.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn radius(&self) -> f64 {
        self.r[self.n()]
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn nodes(&self) -> &[f64] {
        &self.r
    }
    /// Nodal trapezoid weights.
    pub fn weights(&self) -> &[f64] {
        &self.w
    }
    /// Midpoint weights, one per interval.
    pub fn mid_weights(&self) -> &[f64] {
        &self.wm
    }
    /// Exact measure of the finite-volume cell around each node.
    pub fn cell_volumes(&self) -> &[f64] {
        &self.cells
    }

    /// Integrates nodal samples against the radial measure.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.w.iter().zip(f).map(|(w, f)| w * f).sum()
    }

    /// Same grid with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Result<RadialGrid> {
        make_grid(self.radius(), self.n() * factor, self.dim)
    }
}

/// Builds a uniform grid on `[0, R]` with `n` intervals in dimension `N`.
pub fn make_grid(radius: f64, n: usize, dim: usize) -> Result<RadialGrid> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!("grid radius must be positive, got {radius}")));
    }
    if n < 64 {
        return Err(Error::invalid(format!("grid needs at least 64 intervals, got {n}")));
    }
    if dim < 2 {
        return Err(Error::invalid(format!("dimension must be at least 2, got {dim}")));
    }
    let h = radius / n as f64;
    let omega = sphere_area(dim);
    let e = (dim - 1) as i32;
    let mut r: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    r[n] = radius;
    let mut w: Vec<f64> = r.iter().map(|&ri| omega * ri.powi(e) * h).collect();
    w[n] *= 0.5;
    let wm = (0..n)
        .map(|i| omega * ((i as f64 + 0.5) * h).powi(e) * h)
        .collect();
    let ball = |x: f64| omega * x.powi(dim as i32) / dim as f64;
    let cells = (0..=n)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
            let hi = if i == n { radius } else { (i as f64 + 0.5) * h };
            ball(hi) - ball(lo)
        })
        .collect();
    Ok(RadialGrid { r, h, dim, omega, w, wm, cells })
}

impl fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGrid").field("R", &self.radius()).field("n", &self.n()).field("N", &self.dim).finish()
    }
}

/// Samples of a radial function on a shared grid.
#[derive(Clone, PartialEq)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFunction")
            .field("grid", &self.grid)
            .field("u0", &self.values[0])
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl RadialFunction {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at node {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(r)` at the grid nodes.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub(crate) fn from_parts(grid: Arc<RadialGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RadialFunction {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self::from_parts(self.grid.clone(), values)
    }

    pub fn scaled(&self, c: f64) -> RadialFunction {
        self.map(|v| c * v)
    }

    /// Staggered differences `(u_{i+1} - u_i)/h`, one per interval.
    pub fn staggered_diff(&self) -> Vec<f64> {
        let h = self.grid.h();
        self.values.windows(2).map(|w| (w[1] - w[0]) / h).collect()
    }

    /// Nodal derivative samples: centered in the interior, zero at the origin,
    /// one-sided second order at `R`.
    pub fn derivative(&self) -> Vec<f64> {
        let u = &self.values;
        let n = u.len() - 1;
        let h = self.grid.h();
        let mut du = vec![0.0; n + 1];
        for i in 1..n {
            du[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
        }
        du[n] = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h);
        du
    }

    /// Monotone cubic Hermite interpolant evaluated at `r`; zero beyond `R`.
    pub fn eval(&self, r: f64) -> f64 {
        self.interpolant().eval(r)
    }

    pub(crate) fn interpolant(&self) -> MonotoneCubic<'_> {
        MonotoneCubic::new(self.grid.h(), &self.values)
    }

    /// Resamples onto another grid (same dimension) by monotone interpolation.
    pub fn resample(&self, grid: Arc<RadialGrid>) -> Result<RadialFunction> {
        if grid.dim() != self.grid.dim() {
            return Err(Error::invalid("cannot resample across dimensions"));
        }
        let it = self.interpolant();
        let values = grid.nodes().iter().map(|&r| it.eval(r)).collect();
        RadialFunction::new(grid, values)
    }

    /// Writes the profile as CSV with header `r,u,du`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn write_csv_to(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "r,u,du")?;
        let du = self.derivative();
        for ((r, u), d) in self.grid.nodes().iter().zip(&self.values).zip(&du) {
            writeln!(out, "{r:.16e},{u:.16e},{d:.16e}")?;
        }
        Ok(())
    }

    /// Reads a profile written by [`RadialFunction::write_csv`]. The nodes must
    /// form a uniform grid starting at 0.
    pub fn read_csv(path: &Path, dim: usize) -> Result<RadialFunction> {
        let f = std::fs::File::open(path)?;
        Self::read_csv_from(std::io::BufReader::new(f), dim)
    }

    pub fn read_csv_from(input: impl BufRead, dim: usize) -> Result<RadialFunction> {
        let mut r = Vec::new();
        let mut u = Vec::new();
        for (k, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if k == 0 {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols.len() < 2 || cols[0] != "r" || cols[1] != "u" {
                    return Err(Error::Parse(format!("bad header `{line}`, expected `r,u,du`")));
                }
                continue;
            }
            let mut it = line.split(',');
            let mut next = |name: &str| -> Result<f64> {
                it.next()
                    .ok_or_else(|| Error::Parse(format!("line {}: missing {name}", k + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {name}: {e}", k + 1)))
            };
            r.push(next("r")?);
            u.push(next("u")?);
        }
        if r.len() < 65 {
            return Err(Error::Parse(format!("profile has {} rows, need at least 65", r.len())));
        }
        let n = r.len() - 1;
        let radius = r[n];
        let grid = make_grid(radius, n, dim).map_err(|e| Error::Parse(e.to_string()))?;
        let h = grid.h();
        for (i, (&a, &b)) in r.iter().zip(grid.nodes()).enumerate() {
            if (a - b).abs() > 1e-9 * radius.max(h) {
                return Err(Error::Parse(format!("node {i} at r={a} is off the uniform grid")));
            }
        }
        RadialFunction::new(Arc::new(grid), u).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Piecewise cubic Hermite interpolant on a uniform grid with
/// Fritsch–Carlson limited slopes. Symmetric (zero slope) at the origin.
pub(crate) struct MonotoneCubic<'a> {
    h: f64,
    y: &'a [f64],
    m: Vec<f64>,
}

impl<'a> MonotoneCubic<'a> {
    pub(crate) fn new(h: f64, y: &'a [f64]) -> Self {
        let n = y.len() - 1;
        let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut m = vec![0.0; n + 1];
        for i in 1..n {
            let (dl, dr) = (delta[i - 1], delta[i]);
            if dl * dr <= 0.0 {
                m[i] = 0.0;
                continue;
            }
            let c = 0.5 * (dl + dr);
            let lim = 3.0 * dl.abs().min(dr.abs());
            m[i] = c.signum() * c.abs().min(lim);
        }
        m[n] = delta[n - 1];
        Self { h, y, m }
    }

    pub(crate) fn eval(&self, r: f64) -> f64 {
        let n = self.y.len() - 1;
        let x = r / self.h;
        if !(x >= 0.0) {
            return self.y[0];
        }
        if x > n as f64 * (1.0 + 1e-14) {
            return 0.0;
        }
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * self.h * self.m[i] + h01 * self.y[i + 1] + h11 * self.h * self.m[i + 1]
    }
}

/// `Σ w_i |u_i|^q`.
pub fn lq_power(u: &RadialFunction, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::invalid(format!("Lebesgue exponent must be positive, got {q}")));
    }
    Ok(lq_power_unchecked(u.values(), u.grid().weights(), q))
}

pub(crate) fn lq_power_unchecked(u: &[f64], w: &[f64], q: f64) -> f64 {
    u.iter().zip(w).map(|(u, w)| w * u.abs().powf(q)).sum()
}

/// `‖u‖_q`.
pub fn lq_norm(u: &RadialFunction, q: f64) -> Result<f64> {
    Ok(lq_power(u, q)?.powf(1.0 / q))
}

/// `‖∇u‖_p^p` by the midpoint rule on staggered differences.
pub fn grad_power(u: &RadialFunction, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::invalid(format!("gradient exponent must exceed 1, got {p}")));
    }
    Ok(grad_power_unchecked(u.values(), u.grid().h(), u.grid().mid_weights(), p))
}

pub(crate) fn grad_power_unchecked(u: &[f64], h: f64, wm: &[f64], p: f64) -> f64 {
    u.windows(2)
        .zip(wm)
        .map(|(s, w)| w * ((s[1] - s[0]) / h).abs().powf(p))
        .sum()
}

/// `‖∇u‖_p`.
pub fn grad_lp_norm(u: &RadialFunction, p: f64) -> Result<f64> {
    Ok(grad_power(u, p)?.powf(1.0 / p))
}

/// Flux function `|D|^{p-2} D`, regularized by `δ` when `p < 2`.
#[inline]
pub(crate) fn flux(d: f64, p: f64, delta: f64) -> f64 {
    if p == 2.0 {
        d
    } else if p > 2.0 {
        d.abs().powf(p - 2.0) * d
    } else {
        (d * d + delta * delta).powf(0.5 * (p - 2.0)) * d
    }
}

/// Derivative of [`flux`] with respect to `D`.
#[inline]
pub(crate) fn flux_prime(d: f64, p: f64, delta: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if p > 2.0 {
        (p - 1.0) * d.abs().powf(p - 2.0)
    } else {
        let s = d * d + delta * delta;
        s.powf(0.5 * (p - 2.0)) * (1.0 + (p - 2.0) * d * d / s)
    }
}

/// Regularization scale for the degenerate diffusivity.
pub(crate) fn flux_delta(diffs: &[f64], p: f64) -> f64 {
    if p >= 2.0 {
        0.0
    } else {
        1e-10 * diffs.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE)
    }
}

/// Discrete `-Δ_p u` in finite-volume form:
/// `(-Δ_p u)_i = (W_{i-1/2} φ(D_{i-1/2}) - W_{i+1/2} φ(D_{i+1/2})) / (h V_i)`,
/// which reduces to `-2N φ(D_{1/2})/h` at the origin; the outward boundary
/// flux closes the last cell at `R`.
pub fn p_laplacian_apply(u: &RadialFunction, p: f64) -> Result<RadialFunction> {
    if !(p > 1.0) {
        return Err(Error::invalid(format!("p must exceed 1, got {p}")));
    }
    let g = u.grid();
    let d = u.staggered_diff();
    let delta = flux_delta(&d, p);
    let phi: Vec<f64> = d.iter().map(|&x| flux(x, p, delta)).collect();
    let n = g.n();
    let h = g.h();
    let wm = g.mid_weights();
    let v = g.cell_volumes();
    let mut out = vec![0.0; n + 1];
    out[0] = -wm[0] * phi[0] / (h * v[0]);
    for i in 1..n {
        out[i] = (wm[i - 1] * phi[i - 1] - wm[i] * phi[i]) / (h * v[i]);
    }
    let rn = g.radius();
    out[n] = (wm[n - 1] * phi[n - 1] / h - g.omega() * rn.powi(g.dim() as i32 - 1) * phi[n - 1]) / v[n];
    Ok(RadialFunction::from_parts(g.clone(), out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(r: f64, n: usize, dim: usize) -> Arc<RadialGrid> {
        Arc::new(make_grid(r, n, dim).unwrap())
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((lanczos_gamma(4.3) / 8.85534336045403 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(make_grid(0.0, 100, 3).is_err());
        assert!(make_grid(-1.0, 100, 3).is_err());
        assert!(make_grid(1.0, 63, 3).is_err());
        assert!(make_grid(1.0, 64, 1).is_err());
    }

    #[test]
    fn ball_volume() {
        let g = make_grid(1.0, 64, 3).unwrap();
        let vol = g.integrate(&vec![1.0; g.len()]);
        let exact = 4.0 * PI / 3.0;
        assert!((vol / exact - 1.0).abs() < 1e-3);
        assert!((vol / exact - 1.0).abs() < 10.0 * (1.0 / 64.0f64).powi(2));
    }

    #[test]
    fn endpoint_is_exact() {
        let g = make_grid(20.0, 4000, 3).unwrap();
        assert_eq!(g.radius(), 20.0);
        assert_eq!(g.weights()[0], 0.0);
        assert!(g.weights().iter().all(|&w| w >= 0.0));
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn gaussian_integral_in_four_dimensions() {
        let g = grid(10.0, 2000, 4);
        let f: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
        let val = g.integrate(&f);
        assert!((val / (PI * PI) - 1.0).abs() < 1e-6, "{val}");
    }

    #[test]
    fn gaussian_l2_norm() {
        let g = grid(12.0, 1200, 3);
        let u = RadialFunction::from_fn(g, |r| (-r * r / 2.0).exp()).unwrap();
        let v = lq_norm(&u, 2.0).unwrap();
        assert!((v - PI.powf(0.75)).abs() < 1e-6);
        assert_eq!(lq_norm(&RadialFunction::zeros(u.grid().clone()), 3.0).unwrap(), 0.0);
        assert!(lq_norm(&u, 0.0).is_err());
    }

    #[test]
    fn gradient_norm_converges_under_refinement() {
        let coarse = grid(12.0, 4000, 3);
        let fine = grid(12.0, 32000, 3);
        let f = |r: f64| (-r * r / 2.0).exp();
        let a = grad_lp_norm(&RadialFunction::from_fn(coarse, f).unwrap(), 2.0).unwrap();
        let b = grad_lp_norm(&RadialFunction::from_fn(fine, f).unwrap(), 2.0).unwrap();
        assert!((a / b - 1.0).abs() < 1e-6);
        // exact value: ∫ r^2 e^{-r^2} dx = 3 π^{3/2} / 2
        let exact = (1.5 * PI.powf(1.5)).sqrt();
        assert!((b / exact - 1.0).abs() < 1e-8);
    }

    #[test]
    fn constant_has_zero_gradient_and_laplacian() {
        let g = grid(5.0, 200, 3);
        let u = RadialFunction::from_fn(g, |_| 2.0).unwrap();
        assert_eq!(grad_lp_norm(&u, 2.5).unwrap(), 0.0);
        let l = p_laplacian_apply(&u, 2.5).unwrap();
        assert!(l.values().iter().all(|&v| v == 0.0));
        assert!(grad_lp_norm(&u, 1.0).is_err());
    }

    #[test]
    fn laplacian_of_gaussian() {
        let g = grid(10.0, 2000, 3);
        let h = g.h();
        let u = RadialFunction::from_fn(g.clone(), |r| (-r * r / 2.0).exp()).unwrap();
        let l = p_laplacian_apply(&u, 2.0).unwrap();
        let n = g.n();
        for (i, (&r, &v)) in g.nodes().iter().zip(l.values()).enumerate().take(n - 1) {
            let exact = (3.0 - r * r) * (-r * r / 2.0).exp();
            assert!((v - exact).abs() < 2.0 * h * h + 1e-12, "node {i}: {v} vs {exact}");
        }
    }

    #[test]
    fn integration_by_parts_is_exact() {
        let g = grid(8.0, 500, 3);
        for &p in &[1.5, 2.0, 3.0] {
            let u = RadialFunction::from_fn(g.clone(), |r| (1.0 - r / 8.0) * (-r).exp()).unwrap();
            let l = p_laplacian_apply(&u, p).unwrap();
            let pair: f64 = l.values().iter().zip(u.values()).zip(g.cell_volumes()).map(|((a, b), w)| a * b * w).sum();
            let x = grad_power(&u, p).unwrap();
            assert!((pair / x - 1.0).abs() < 1e-8, "p={p}: {pair} vs {x}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = grid(4.0, 100, 3);
        let u = RadialFunction::from_fn(g, |r| (-r).exp()).unwrap();
        let mut buf = Vec::new();
        u.write_csv_to(&mut buf).unwrap();
        buf.extend_from_slice(b"\n");
        let v = RadialFunction::read_csv_from(&buf[..], 3).unwrap();
        assert_eq!(v.grid().n(), 100);
        for (a, b) in u.values().iter().zip(v.values()) {
            assert!((a - b).abs() <= 1e-15 * a.abs());
        }
        assert!(RadialFunction::read_csv_from(&b"x,y\n1,2\n"[..], 3).is_err());
    }

    #[test]
    fn monotone_interpolation_preserves_sign_and_nodes() {
        let g = grid(4.0, 100, 3);
        let u = RadialFunction::from_fn(g.clone(), |r| if r < 1.0 { 1.0 - r } else { 0.0 }).unwrap();
        for k in 0..4000 {
            let r = k as f64 * 1e-3;
            assert!(u.eval(r) >= 0.0);
        }
        for (i, &r) in g.nodes().iter().enumerate() {
            assert!((u.eval(r) - u.values()[i]).abs() < 1e-14);
        }
        assert_eq!(u.eval(4.5), 0.0);
    }
}
