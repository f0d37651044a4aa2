//! The path `τ ↦ W_{ε,τ}` from the ground state towards a concentrating
//! bubble, and the certificate `sup_τ Ψ_μ(W_{ε,τ}) < m^+ + S^{N/p}/N`.
//!
//! `V = u^+ + τ u_ε` is renormalized to the mass of `u^+` by the dilation
//! `W(x) = t^{(N-p)/p} V(t x)`, `t = ‖V‖_p / a`, which keeps `‖∇V‖_p` and
//! multiplies `‖V‖_q^q` by `(a/‖V‖_p)^{q(1-γ_q)}`. Only the norms of `V` are
//! needed. Outside the support of `u_ε` they are those of `u^+`, so each norm
//! is the stored norm of `u^+` plus a correction over `[0, 2ε^α]` computed by
//! Gauss panels; at `τ = 0` the correction vanishes identically.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sobolev_constant, AlphaWindow, BubbleSpec};
use crate::error::{Error, Result};
use crate::extremal::mu_star;
use crate::fibering::{energy_of, triple, Branch, Triple};
use crate::params::ProblemParams;
use crate::quad::gauss_legendre;
use crate::radial::{lq_power, sphere_area};
use crate::solver::{minimize_ground, minimize_mountain, SolutionRecord, SolverOptions};

/// Energy along the path for one `(ε, α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCurve {
    pub eps: f64,
    pub alpha: f64,
    pub taus: Vec<f64>,
    pub energies: Vec<f64>,
    /// Supremum over the path, refined between the neighbours of the best
    /// sample.
    pub sup: f64,
    pub tau_at_sup: f64,
    /// Whether the last sample has negative energy.
    pub escapes: bool,
}

impl PathCurve {
    /// CSV `tau,energy` with 17 significant digits.
    pub fn write_csv_to(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "tau,energy")?;
        for (t, e) in self.taus.iter().zip(&self.energies) {
            writeln!(out, "{t:.16e},{e:.16e}")?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv_to(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// Quadrature samples of `u^+`, `u_ε` and their derivatives on `[0, 2ε^α]`.
struct InnerSamples {
    weight: Vec<f64>,
    base: Vec<f64>,
    base_d: Vec<f64>,
    bump: Vec<f64>,
    bump_d: Vec<f64>,
}

/// Norms of `V` entering the energy of `W`.
#[derive(Debug, Clone, Copy)]
struct Norms {
    grad: f64,
    mass: f64,
    low: f64,
    high: f64,
}

impl Norms {
    fn plus(self, o: Norms, sign: f64) -> Norms {
        Norms {
            grad: self.grad + sign * o.grad,
            mass: self.mass + sign * o.mass,
            low: self.low + sign * o.low,
            high: self.high + sign * o.high,
        }
    }
}

struct PathEvaluator {
    params: ProblemParams,
    /// Norms of `u^+` as stored in the record.
    total: Norms,
    /// Norms of `u^+` restricted to `[0, 2ε^α]` by the panel rule.
    inner_base: Norms,
    samples: InnerSamples,
}

impl PathEvaluator {
    fn new(u_plus: &SolutionRecord, spec: &BubbleSpec) -> Result<Self> {
        let params = u_plus.params;
        let u = &u_plus.profile;
        let g = u.grid();
        let support = 2.0 * spec.cutoff_radius();
        if support >= g.radius() {
            return Err(Error::invalid(format!(
                "cutoff support {support} does not fit in the profile grid radius {}",
                g.radius()
            )));
        }
        let t = triple(u, &params);
        let total = Norms { grad: t.x, mass: lq_power(u, params.p)?, low: t.y, high: t.z };

        let mut breaks: Vec<f64> = g.nodes().iter().copied().take_while(|&r| r < support).collect();
        let mut r = 1e-4 * spec.eps;
        while r < support {
            breaks.push(r);
            r *= 2.0;
        }
        for k in 0..=16 {
            breaks.push(spec.cutoff_radius() * (1.0 + k as f64 / 16.0));
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * support);

        let (x, w) = gauss_legendre(10);
        let du = u.derivative();
        let h = g.h();
        let omega = sphere_area(params.dim);
        let m = params.dim as i32 - 1;
        let mut s = InnerSamples { weight: vec![], base: vec![], base_d: vec![], bump: vec![], bump_d: vec![] };
        for ab in breaks.windows(2) {
            let (c, half) = (0.5 * (ab[0] + ab[1]), 0.5 * (ab[1] - ab[0]));
            for (xi, wi) in x.iter().zip(&w) {
                let r = c + half * xi;
                let j = ((r / h).floor() as usize).min(g.n() - 1);
                let th = r / h - j as f64;
                s.weight.push(omega * half * wi * r.powi(m));
                s.base.push(u.eval(r));
                s.base_d.push((1.0 - th) * du[j] + th * du[j + 1]);
                s.bump.push(spec.cutoff_value(r));
                s.bump_d.push(spec.cutoff_value_derivative(r));
            }
        }
        let mut ev = Self { params, total, inner_base: total, samples: s };
        ev.inner_base = ev.inner(0.0);
        Ok(ev)
    }

    fn inner(&self, tau: f64) -> Norms {
        let s = &self.samples;
        let pr = &self.params;
        let mut n = Norms { grad: 0.0, mass: 0.0, low: 0.0, high: 0.0 };
        for i in 0..s.weight.len() {
            let v = (s.base[i] + tau * s.bump[i]).abs();
            let dv = (s.base_d[i] + tau * s.bump_d[i]).abs();
            let w = s.weight[i];
            n.grad += w * dv.powf(pr.p);
            n.mass += w * v.powf(pr.p);
            n.low += w * v.powf(pr.q1);
            n.high += w * v.powf(pr.q2);
        }
        n
    }

    /// `Ψ_μ(W_{ε,τ})`.
    fn energy(&self, tau: f64) -> f64 {
        let pr = &self.params;
        let nv = if tau == 0.0 { self.total } else { self.total.plus(self.inner(tau), 1.0).plus(self.inner_base, -1.0) };
        let ratio = self.total.mass / nv.mass;
        let f1 = ratio.powf(pr.q1 * (1.0 - pr.gamma1()) / pr.p);
        let f2 = ratio.powf(pr.q2 * (1.0 - pr.gamma2()) / pr.p);
        energy_of(Triple { x: nv.grad, y: nv.low * f1, z: nv.high * f2 }, pr)
    }
}

/// Energy `Ψ_μ(W_{ε,τ})` along `taus` for the ground state `u_plus`.
pub fn mountain_pass_path(u_plus: &SolutionRecord, spec: &BubbleSpec, taus: &[f64]) -> Result<PathCurve> {
    if u_plus.branch != Branch::Plus {
        return Err(Error::invalid("the path starts at a ground state on the plus branch"));
    }
    if spec.dim != u_plus.params.dim || spec.p != u_plus.params.p {
        return Err(Error::invalid("bubble (N, p) differs from the ground state's"));
    }
    if taus.len() < 2 || taus.iter().any(|t| !(*t >= 0.0)) || taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("τ grid must be increasing, nonnegative and have at least two points"));
    }
    let ev = PathEvaluator::new(u_plus, spec)?;
    let energies: Vec<f64> = taus.iter().map(|&t| ev.energy(t)).collect();
    let (imax, _) = energies
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::invalid("empty τ grid"))?;
    let (mut sup, mut tau_at_sup) = (energies[imax], taus[imax]);
    if imax > 0 && imax + 1 < taus.len() {
        let (t, e) = golden_max(|t| ev.energy(t), taus[imax - 1], taus[imax + 1]);
        if e > sup {
            sup = e;
            tau_at_sup = t;
        }
    }
    Ok(PathCurve {
        eps: spec.eps,
        alpha: spec.alpha,
        taus: taus.to_vec(),
        escapes: *energies.last().unwrap_or(&0.0) < 0.0,
        energies,
        sup,
        tau_at_sup,
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Debug, Clone)]
pub struct CertificateOptions {
    pub solver: SolverOptions,
    pub eps: Vec<f64>,
    /// Cutoff exponents; `None` spreads four over the admissible window.
    pub alphas: Option<Vec<f64>>,
    pub taus: Vec<f64>,
    /// Also compute `m^-` and compare it with the path supremum and the bound.
    pub cross_check: bool,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            eps: vec![3e-2, 1e-2, 3e-3],
            alphas: None,
            taus: (0..=200).map(|i| i as f64 * 0.02).collect(),
            cross_check: true,
        }
    }
}

/// One lattice point of the certificate search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub eps: f64,
    pub alpha: f64,
    pub sup: f64,
    pub margin: f64,
}

/// Best lattice point with `margin = m^+ + S^{N/p}/N - sup_τ Ψ_μ(W_{ε,τ})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCertificate {
    pub sup: f64,
    pub m_plus: f64,
    #[serde(rename = "S_Np")]
    pub s_np: f64,
    pub margin: f64,
    pub eps: f64,
    pub alpha: f64,
    pub mu: f64,
    pub mu_star: f64,
    /// `m^-` from the mountain-pass minimizer, when computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_minus: Option<f64>,
    pub lattice: Vec<LatticePoint>,
}

impl EnergyCertificate {
    /// `m^+ + S^{N/p}/N`.
    pub fn bound(&self, dim: usize) -> f64 {
        self.m_plus + self.s_np / dim as f64
    }
}

/// Searches an `(ε, α)` lattice for a path whose energy stays below
/// `m^+ + S^{N/p}/N`. Requires `q2 = p*` and `μ < μ_a*`.
pub fn strict_inequality_certificate(params: &ProblemParams, opts: &CertificateOptions) -> Result<EnergyCertificate> {
    params.validate()?;
    if !params.is_critical() {
        return Err(Error::InvalidRegime(format!(
            "the certificate is defined only for q2 = p* = {}, got q2 = {}",
            params.p_star(),
            params.q2
        )));
    }
    let extremal = match &opts.solver.extremal {
        Some(r) => r.clone(),
        None => Arc::new(mu_star(params, &opts.solver)?),
    };
    if !(params.mu < extremal.mu_star) {
        return Err(Error::InvalidRegime(format!(
            "the certificate needs mu < mu* = {}, got mu = {}",
            extremal.mu_star, params.mu
        )));
    }
    let mut sopts = opts.solver.clone();
    sopts.extremal = Some(extremal.clone());
    let plus = minimize_ground(params, &sopts)?;
    let sob = sobolev_constant(params.dim, params.p)?;
    let window = AlphaWindow::new(params.dim, params.p);
    let alphas = opts.alphas.clone().unwrap_or_else(|| window.lattice(4));
    let pairs: Vec<(f64, f64)> = opts.eps.iter().flat_map(|&e| alphas.iter().map(move |&a| (e, a))).collect();
    let bound = plus.energy + sob.s_np / params.dim as f64;
    let lattice: Vec<LatticePoint> = pairs
        .par_iter()
        .map(|&(eps, alpha)| {
            let spec = BubbleSpec::new(params.dim, params.p, eps, alpha)?;
            let curve = mountain_pass_path(&plus, &spec, &opts.taus)?;
            Ok(LatticePoint { eps, alpha, sup: curve.sup, margin: bound - curve.sup })
        })
        .collect::<Result<_>>()?;
    let best = lattice
        .iter()
        .max_by(|a, b| a.margin.total_cmp(&b.margin))
        .cloned()
        .ok_or_else(|| Error::invalid("empty (ε, α) lattice"))?;
    if !(best.margin > 0.0) {
        return Err(Error::CertificateUnavailable(format!(
            "no positive margin on the lattice; best {:.6e} at eps = {}, alpha = {}",
            best.margin, best.eps, best.alpha
        )));
    }
    let m_minus = if opts.cross_check { Some(minimize_mountain(params, &sopts)?.energy) } else { None };
    Ok(EnergyCertificate {
        sup: best.sup,
        m_plus: plus.energy,
        s_np: sob.s_np,
        margin: best.margin,
        eps: best.eps,
        alpha: best.alpha,
        mu: params.mu,
        mu_star: extremal.mu_star,
        m_minus,
        lattice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    /// Ground state at `(3, 2, 3, 6, a = 1)`, `μ = 4.8 ≈ 0.3 μ*`, on a coarse grid.
    fn plus_record() -> &'static SolutionRecord {
        static REC: OnceLock<SolutionRecord> = OnceLock::new();
        REC.get_or_init(|| {
            let params = ProblemParams::new(3, 2.0, 3.0, 6.0, 1.0, 4.8).unwrap();
            let opts = SolverOptions { grid_n: 1500, ..SolverOptions::default() };
            minimize_ground(&params, &opts).unwrap()
        })
    }

    fn taus() -> Vec<f64> {
        (0..=150).map(|i| i as f64 * 0.02).collect()
    }

    #[test]
    fn path_starts_at_the_ground_state_and_escapes() {
        let rec = plus_record();
        let spec = BubbleSpec::new(3, 2.0, 1e-2, 0.0).unwrap();
        let c = mountain_pass_path(rec, &spec, &taus()).unwrap();
        assert_eq!(c.energies[0], rec.energy);
        assert!(c.escapes);
        assert!(c.sup >= *c.energies.iter().max_by(|a, b| a.total_cmp(b)).unwrap());
        let bound = rec.energy + sobolev_constant(3, 2.0).unwrap().s_np / 3.0;
        assert!(c.sup < bound, "{} vs {bound}", c.sup);
    }

    #[test]
    fn wide_bubbles_raise_the_supremum() {
        let rec = plus_record();
        let sup = |eps: f64| {
            let spec = BubbleSpec::new(3, 2.0, eps, 0.0).unwrap();
            mountain_pass_path(rec, &spec, &taus()).unwrap().sup
        };
        let (a, b, c) = (sup(0.1), sup(0.2), sup(0.3));
        assert!(a < b && b < c);
    }

    #[test]
    fn csv_has_one_row_per_tau() {
        let spec = BubbleSpec::new(3, 2.0, 1e-2, 0.2).unwrap();
        let c = mountain_pass_path(plus_record(), &spec, &taus()).unwrap();
        let mut buf = Vec::new();
        c.write_csv_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("tau,energy"));
        assert_eq!(text.lines().count(), taus().len() + 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let rec = plus_record();
        let spec = BubbleSpec::new(3, 2.0, 1e-2, 0.0).unwrap();
        assert!(mountain_pass_path(rec, &spec, &[0.0]).is_err());
        assert!(mountain_pass_path(rec, &spec, &[0.0, 1.0, 0.5]).is_err());
        let mut minus = rec.clone();
        minus.branch = Branch::Minus;
        assert!(mountain_pass_path(&minus, &spec, &taus()).is_err());
        let other = BubbleSpec::new(4, 2.0, 1e-2, 0.0).unwrap();
        assert!(mountain_pass_path(rec, &other, &taus()).is_err());
        let sub = ProblemParams::new(3, 2.0, 2.5, 4.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            strict_inequality_certificate(&sub, &CertificateOptions::default()),
            Err(Error::InvalidRegime(_))
        ));
    }
}
