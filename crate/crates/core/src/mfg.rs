//! Stationary mean-field-game fields recovered from a normalized profile.
//!
//! With `H(t) = C_H |t|^{p'}` and `m = u^p`, the zero-flux Fokker–Planck
//! equation `∇m + p' C_H m |∇v|^{p'-2}∇v = 0` fixes
//!
//! ```text
//! v' = -ϱ |u'|^{p-2} u' / u^{p-1},   ϱ = ((p-1)/C_H)^{p-1},
//! ```
//!
//! and then `-Δv + C_H|v'|^{p'} = ϱ Δ_p u / u^{p-1}`, so the Hamilton–Jacobi
//! equation `-Δv + C_H|v'|^{p'} + λ_MFG = f(m)` holds with
//! `f(m) = -ϱ(μ m^{(q1-p)/p} + m^{(q2-p)/p})` and `λ_MFG = ϱ λ`. The constant
//! is extracted numerically; `ϱ λ` is reported next to it.
//!
//! Slopes `v'` live on the staggered midpoints, from the differences of `u`
//! and the logarithmic mean of `u` (for `p = 2` this makes `v = -ϱ ln u`
//! exactly). `Δv` uses the divergence of the weak equation the profile
//! solves, and `|v'|^{p'}` is split into half cells with the same weights.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::radial::RadialFunction;
use crate::solver::SolutionRecord;

/// Nodes with `m <= TRUST_FLOOR · m(0)` are outside the trusted region.
pub const TRUST_FLOOR: f64 = 1e-14;
/// Relative density above which the constancy of `λ_MFG` is measured.
pub const CONSTANCY_FLOOR: f64 = 1e-6;

/// Density, value function and ergodic constant of the stationary system.
#[derive(Debug, Clone)]
pub struct MfgFields {
    pub params: ProblemParams,
    /// `m = u^p`.
    pub density: RadialFunction,
    /// `v`, anchored at `v(0) = 0`.
    pub value: RadialFunction,
    /// Nodal `v'`, from centered derivatives of `u`.
    pub slope: RadialFunction,
    /// `v'` at the midpoints `r_{k+1/2}`.
    pub slope_mid: Vec<f64>,
    pub lambda_mfg: f64,
    /// `ϱ λ`, the constant predicted by the reduction.
    pub lambda_predicted: f64,
    pub c_h: f64,
    /// `p' = p/(p-1)`.
    pub p_conj: f64,
    /// `ϱ = ((p-1)/C_H)^{p-1}`.
    pub viscosity: f64,
    /// `∫ m dx`.
    pub mass: f64,
    /// Number of leading nodes in the trusted region.
    pub trusted: usize,
}

impl MfgFields {
    /// `f(m) = -ϱ(μ m^{(q1-p)/p} + m^{(q2-p)/p})`.
    pub fn coupling(&self, m: f64) -> f64 {
        let p = self.params.p;
        let m = m.max(0.0);
        -self.viscosity * (self.params.mu * m.powf((self.params.q1 - p) / p) + m.powf((self.params.q2 - p) / p))
    }

    /// Profile recovered as `m^{1/p}`.
    pub fn recovered_profile(&self) -> RadialFunction {
        let p = self.params.p;
        self.density.map(|m| m.max(0.0).powf(1.0 / p))
    }

    /// Pointwise `-Δv + C_H|v'|^{p'} - f(m)` at the nodes `1..trusted-1`;
    /// each entry estimates `-λ_MFG`. The divergence is taken against the
    /// trapezoid weights, as in the weak equation the profile solves; the
    /// origin carries no weight and no equation.
    fn hjb_without_constant(&self) -> Vec<f64> {
        let g = self.density.grid();
        let h = g.h();
        let wm = g.mid_weights();
        let w = g.weights();
        let s = &self.slope_mid;
        let m = self.density.values();
        let hamiltonian = |x: f64| self.c_h * x.abs().powf(self.p_conj);
        (1..self.trusted - 1)
            .map(|i| {
                let div = (wm[i] * s[i] - wm[i - 1] * s[i - 1]) / (h * w[i]);
                // Half-cell contributions weighted like the fluxes.
                let ham = 0.5 * (wm[i] * hamiltonian(s[i]) + wm[i - 1] * hamiltonian(s[i - 1])) / w[i];
                -div + ham - self.coupling(m[i])
            })
            .collect()
    }
}

/// Summary of the Hamilton–Jacobi residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjbResidual {
    /// `-Δv + C_H|v'|^{p'} + λ_MFG - f(m)` at the nodes `1, 2, ...` of the
    /// trusted region (the entry `k` belongs to node `k + 1`).
    pub values: Vec<f64>,
    /// `max |residual| / |λ_MFG|` over the nodes with `m > 1e-6 m(0)`.
    pub sup_relative: f64,
    /// Standard deviation of the pointwise constant over the same nodes,
    /// relative to `|λ_MFG|`.
    pub constancy: f64,
}

/// JSON summary of an MFG reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfgSummary {
    pub lambda_mfg: f64,
    pub lambda_predicted: f64,
    pub mass: f64,
    pub c_h: f64,
    pub p_conj: f64,
    pub viscosity: f64,
    pub residuals: MfgResiduals,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfgResiduals {
    pub hjb_sup_relative: f64,
    pub hjb_constancy: f64,
    /// `max |flux| / max(|m'| r^{N-1})`.
    pub fokker_planck: f64,
    /// `|M - a^p| / a^p`.
    pub mass: f64,
    /// `max |m^{1/p} - u| / max u`.
    pub round_trip: f64,
}

/// Builds the MFG fields of a solution for the Hamiltonian constant `C_H`.
pub fn to_mfg(record: &SolutionRecord, c_h: f64) -> Result<MfgFields> {
    if !(c_h > 0.0) || !c_h.is_finite() {
        return Err(Error::invalid(format!("C_H must be positive, got {c_h}")));
    }
    let params = record.params;
    let p = params.p;
    let u = &record.profile;
    let g = u.grid().clone();
    let vals = u.values();
    let n = g.n();
    let density = u.map(|x| x.max(0.0).powf(p));
    let m = density.values();
    let m0 = m[0];
    if !(m0 > 0.0) {
        return Err(Error::DegenerateInput("density vanishes at the origin".into()));
    }
    let trusted = m.iter().position(|&x| !(x > TRUST_FLOOR * m0)).unwrap_or(n + 1);
    if let Some(j) = (trusted..=n).find(|&j| m[j] > 1e-10 * m0) {
        return Err(Error::DegenerateInput(format!(
            "density drops below {TRUST_FLOOR:e} m(0) at node {trusted} and recovers at node {j}"
        )));
    }
    if trusted < 4 {
        return Err(Error::DegenerateInput("trusted region has fewer than 4 nodes".into()));
    }

    let viscosity = ((p - 1.0) / c_h).powf(p - 1.0);
    let slope_of = |du: f64, uu: f64| -viscosity * du.abs().powf(p - 2.0) * du / uu.powf(p - 1.0);
    let d = u.staggered_diff();
    let mut slope_mid = vec![0.0; n];
    // Midpoint slopes need both neighbours trusted; beyond that the last
    // slope is extended as a constant, the limit of v' in the tail.
    let last = trusted.min(n) - 1;
    for k in 0..n {
        slope_mid[k] = if k < last {
            slope_of(d[k], log_mean(vals[k], vals[k + 1]))
        } else {
            slope_mid[last - 1]
        };
    }
    let du = u.derivative();
    let mut slope = vec![0.0; n + 1];
    for i in 1..=n {
        slope[i] = if i < trusted { slope_of(du[i], vals[i]) } else { slope[trusted - 1] };
    }
    let h = g.h();
    let mut value = vec![0.0; n + 1];
    for k in 0..n {
        value[k + 1] = value[k] + h * slope_mid[k];
    }
    let mass = g.integrate(m);

    let mut fields = MfgFields {
        params,
        density: density.clone(),
        value: RadialFunction::new(g.clone(), value)?,
        slope: RadialFunction::new(g.clone(), slope)?,
        slope_mid,
        lambda_mfg: 0.0,
        lambda_predicted: viscosity * record.lambda,
        c_h,
        p_conj: p / (p - 1.0),
        viscosity,
        mass,
        trusted,
    };
    let pointwise = fields.hjb_without_constant();
    fields.lambda_mfg = -pointwise.iter().sum::<f64>() / pointwise.len() as f64;
    Ok(fields)
}

/// `(b - a)/(ln b - ln a)`, which turns `-D/ū` into the difference of `-ln u`.
fn log_mean(a: f64, b: f64) -> f64 {
    let t = b / a - 1.0;
    if t.abs() < 1e-8 {
        a * (1.0 + 0.5 * t - t * t / 12.0)
    } else {
        (b - a) / (b / a).ln()
    }
}

/// Pointwise Hamilton–Jacobi residual with the fitted constant.
pub fn hjb_residual(fields: &MfgFields) -> HjbResidual {
    let raw = fields.hjb_without_constant();
    let values: Vec<f64> = raw.iter().map(|r| r + fields.lambda_mfg).collect();
    let m = fields.density.values();
    let m0 = m[0];
    let inner: Vec<f64> = values
        .iter()
        .zip(&m[1..])
        .filter(|(_, &mi)| mi > CONSTANCY_FLOOR * m0)
        .map(|(v, _)| *v)
        .collect();
    let scale = fields.lambda_mfg.abs();
    if inner.is_empty() || scale == 0.0 {
        let sup = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        return HjbResidual { values, sup_relative: sup, constancy: 0.0 };
    }
    let mean = inner.iter().sum::<f64>() / inner.len() as f64;
    let var = inner.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / inner.len() as f64;
    let sup = inner.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    HjbResidual { values, sup_relative: sup / scale, constancy: var.sqrt() / scale }
}

/// Radial flux `r^{N-1}(m' + p' C_H |v'|^{p'-2} v' m)` at the nodes, from
/// nodal derivatives; zero at the origin by the measure weight.
pub fn fokker_planck_flux(fields: &MfgFields) -> Vec<f64> {
    let g = fields.density.grid();
    let p = fields.params.p;
    let u = fields.recovered_profile();
    let du = u.derivative();
    let e = g.dim() as i32 - 1;
    let pc = fields.p_conj;
    g.nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if i == 0 || i >= fields.trusted {
                return 0.0;
            }
            let m = fields.density.values()[i];
            let dm = p * u.values()[i].powf(p - 1.0) * du[i];
            let s = fields.slope.values()[i];
            r.powi(e) * (dm + pc * fields.c_h * s.abs().powf(pc - 2.0) * s * m)
        })
        .collect()
}

/// `max |flux| / max |m'| r^{N-1}` over the trusted region.
pub fn fokker_planck_relative(fields: &MfgFields, flux: &[f64]) -> f64 {
    let g = fields.density.grid();
    let p = fields.params.p;
    let u = fields.recovered_profile();
    let du = u.derivative();
    let e = g.dim() as i32 - 1;
    let scale = (1..fields.trusted)
        .map(|i| (p * u.values()[i].powf(p - 1.0) * du[i]).abs() * g.nodes()[i].powi(e))
        .fold(0.0f64, f64::max);
    let top = flux.iter().fold(0.0f64, |a, f| a.max(f.abs()));
    if scale == 0.0 {
        top
    } else {
        top / scale
    }
}

/// Collects the diagnostics of a reconstruction.
pub fn mfg_summary(fields: &MfgFields, record: &SolutionRecord) -> MfgSummary {
    let hjb = hjb_residual(fields);
    let flux = fokker_planck_flux(fields);
    let back = fields.recovered_profile();
    let umax = record.profile.max_abs();
    let round_trip = back
        .values()
        .iter()
        .zip(record.profile.values())
        .fold(0.0f64, |a, (x, y)| a.max((x - y.max(0.0)).abs()))
        / umax;
    let ap = fields.params.a.powf(fields.params.p);
    MfgSummary {
        lambda_mfg: fields.lambda_mfg,
        lambda_predicted: fields.lambda_predicted,
        mass: fields.mass,
        c_h: fields.c_h,
        p_conj: fields.p_conj,
        viscosity: fields.viscosity,
        residuals: MfgResiduals {
            hjb_sup_relative: hjb.sup_relative,
            hjb_constancy: hjb.constancy,
            fokker_planck: fokker_planck_relative(fields, &flux),
            mass: (fields.mass - ap).abs() / ap,
            round_trip,
        },
    }
}

/// CSV `r,m,v,dv,residual_hjb`; the residual is empty at the origin and
/// outside the trusted region.
pub fn write_mfg_csv_to(fields: &MfgFields, out: &mut impl Write) -> Result<()> {
    let hjb = hjb_residual(fields);
    writeln!(out, "r,m,v,dv,residual_hjb")?;
    let g = fields.density.grid();
    for (i, r) in g.nodes().iter().enumerate() {
        let res = i.checked_sub(1).and_then(|k| hjb.values.get(k)).map(|x| format!("{x:.16e}")).unwrap_or_default();
        writeln!(
            out,
            "{r:.16e},{:.16e},{:.16e},{:.16e},{res}",
            fields.density.values()[i],
            fields.value.values()[i],
            fields.slope.values()[i]
        )?;
    }
    Ok(())
}

pub fn write_mfg_csv(fields: &MfgFields, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_mfg_csv_to(fields, &mut f)?;
    f.flush()?;
    Ok(())
}
