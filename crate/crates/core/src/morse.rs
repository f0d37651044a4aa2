//! Radial Morse index of a solution `u` with multiplier `λ < 0`.
//!
//! The linearized form on radial test functions `w` is
//!
//! ```text
//! a(w, w) = ∫ (p-1)|u'|^{p-2} (w')² - λ(p-1)|u|^{p-2} w²
//! b(w, w) = ∫ (μ(q1-1) u^{q1-2} + (q2-1) u^{q2-2}) w²
//! ```
//!
//! and the index is the number of eigenvalues `σ < 1` of `a = σ b`.
//! Gradients use the staggered differences and midpoint weights of the
//! energy; zeroth-order terms are lumped on the finite-volume cells, whose
//! measure is positive at the origin as well.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibering::Branch;
use crate::linalg::{count_below, smallest_eigenpairs, Tridiag};
use crate::params::ProblemParams;
use crate::radial::RadialFunction;
use crate::solver::{decay_rate, SolutionRecord};

/// Eigenvalues closer than this to 1 are marginal and not counted.
pub const TOL_EIG: f64 = 1e-6;

/// The pencil `(A, B)` of the radial linearization, on nodes `0..len`.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    /// Diagonal of `A`.
    pub diag: Vec<f64>,
    /// Off-diagonal of `A`.
    pub off: Vec<f64>,
    /// Diagonal of `B`.
    pub weight: Vec<f64>,
    /// Interval stiffness `W_k (p-1)|D_k u|^{p-2} / h²`.
    pub stiffness: Vec<f64>,
    /// Lumped potential `-λ(p-1) V_i |u_i|^{p-2}`.
    pub potential: Vec<f64>,
    /// Nodes dropped at the tail because `u` (or the weight) vanished there.
    pub truncated: usize,
    /// Angular momentum of the sector (0 for radial test functions).
    pub degree: usize,
}

impl LinearizedOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `wᵀ A w`.
    pub fn form_a(&self, w: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.len() {
            s += self.diag[i] * w[i] * w[i];
            if i + 1 < self.len() {
                s += 2.0 * self.off[i] * w[i] * w[i + 1];
            }
        }
        s
    }

    /// `wᵀ B w`.
    pub fn form_b(&self, w: &[f64]) -> f64 {
        self.weight.iter().zip(w).map(|(b, x)| b * x * x).sum()
    }

    /// Number of eigenvalues of the pencil below `sigma`, i.e. the number of
    /// negative eigenvalues of `A - σ B`.
    pub fn count_below(&self, sigma: f64) -> usize {
        count_below(&self.diag, &self.off, &self.weight, sigma)
    }

    /// The operator with the weight multiplied by `s`.
    pub fn with_weight_scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for b in &mut out.weight {
            *b *= s;
        }
        out
    }

    /// Smallest diagonal pivot of `B`.
    pub fn min_weight_pivot(&self) -> f64 {
        self.weight.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Index report for one solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    pub branch: Branch,
    /// Smallest eigenvalues in increasing order.
    pub sigmas: Vec<f64>,
    /// Eigenvalues `σ < 1 - TOL_EIG`.
    pub index_radial: usize,
    /// Eigenvalues within `TOL_EIG` of 1.
    pub marginal: usize,
    /// Count on the tangent space of the mass sphere, `∫ u^{p-1} w = 0`.
    pub index_constrained: usize,
    /// Count over all spherical-harmonic sectors (only for `p = 2`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_full: Option<usize>,
    /// Fitted exponential decay rate of the profile.
    pub decay_rate: f64,
    /// `(|λ|/(p-1))^{1/p}`, with `λ < 0` read as `|λ|` in the exponent.
    pub decay_rate_expected: f64,
}

/// Tail fit of `ln u + ((N-1)/(p(p-1))) ln r ≈ c - k r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted rate `k`.
    pub rate: f64,
    pub intercept: f64,
    /// `(|λ|/(p-1))^{1/p}`.
    pub expected: f64,
    pub relative_error: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub points: usize,
}

fn check_regime(record: &SolutionRecord) -> Result<()> {
    let p = record.params.p;
    if p < 2.0 {
        return Err(Error::Unsupported(format!(
            "the linearization needs p >= 2 for a C² energy (p = {p})"
        )));
    }
    if !(record.lambda < 0.0) {
        return Err(Error::InvalidArgument(format!("multiplier must be negative (λ = {})", record.lambda)));
    }
    Ok(())
}

/// Assembles the radial pencil of `record`.
pub fn assemble_linearized(record: &SolutionRecord) -> Result<LinearizedOperator> {
    check_regime(record)?;
    assemble_sector(&record.profile, record.lambda, &record.params, 0)
}

/// Pencil on the sector of spherical harmonics of degree `degree`, which
/// adds `l(l+N-2)/r²` to the stiffness and pins `w(0) = 0` when `l > 0`.
fn assemble_sector(u: &RadialFunction, lambda: f64, params: &ProblemParams, degree: usize) -> Result<LinearizedOperator> {
    let g = u.grid();
    let p = params.p;
    let h = g.h();
    let vals = u.values();
    let n = g.n();
    let cells = g.cell_volumes();
    let nodes = g.nodes();

    let weight_at = |x: f64| params.mu * (params.q1 - 1.0) * x.powf(params.q1 - 2.0) + (params.q2 - 1.0) * x.powf(params.q2 - 2.0);
    // Keep the prefix on which the weight is positive; beyond it the
    // eigenvalue ratio is infinite and the nodes act as Dirichlet nodes.
    let mut len = n;
    for i in 0..n {
        if !(vals[i] > 0.0) || !(weight_at(vals[i]) * cells[i] > 0.0) {
            len = i;
            break;
        }
    }
    if len < n / 2 {
        return Err(Error::DegenerateInput(format!(
            "profile is not positive on the inner half of the grid (first zero at node {len})"
        )));
    }

    let mut slopes: Vec<f64> = vals.windows(2).map(|v| ((v[1] - v[0]) / h).abs()).collect();
    if p > 2.0 && n > 1 {
        // The symmetry condition u_0 = u_1 zeroes the first difference and
        // would decouple the origin node; use the origin law |u'| ~ r^{1/(p-1)}.
        slopes[0] = slopes[1] * (1.0f64 / 3.0).powf(1.0 / (p - 1.0));
    }
    let stiffness: Vec<f64> = g
        .mid_weights()
        .iter()
        .zip(&slopes)
        .map(|(wm, d)| {
            let c = if p == 2.0 { 1.0 } else { d.powf(p - 2.0) };
            wm * (p - 1.0) * c / (h * h)
        })
        .collect();
    let centrifugal = (degree * (degree + params.dim - 2)) as f64;
    let mut potential = Vec::with_capacity(len);
    let mut weight = Vec::with_capacity(len);
    let mut diag = Vec::with_capacity(len);
    for i in 0..len {
        let mut v = -lambda * (p - 1.0) * cells[i] * vals[i].abs().powf(p - 2.0);
        if degree > 0 && i > 0 {
            v += centrifugal * cells[i] / (nodes[i] * nodes[i]);
        }
        potential.push(v);
        weight.push(cells[i] * weight_at(vals[i]));
        let left = if i > 0 { stiffness[i - 1] } else { 0.0 };
        diag.push(left + stiffness[i] + v);
    }
    let off: Vec<f64> = (0..len.saturating_sub(1)).map(|i| -stiffness[i]).collect();
    let (diag, off, weight, potential) = if degree > 0 {
        // Drop the origin node: w(0) = 0 in sectors with l > 0.
        (diag[1..].to_vec(), off[1..].to_vec(), weight[1..].to_vec(), potential[1..].to_vec())
    } else {
        (diag, off, weight, potential)
    };
    Ok(LinearizedOperator {
        diag,
        off,
        weight,
        stiffness: stiffness[..len].to_vec(),
        potential,
        truncated: n - len,
        degree,
    })
}

/// Negative count of `A - B` on `{w : Σ V_i u_i^{p-1} w_i = 0}`. With
/// `g` the constraint vector, the bordered matrix `[[A - B, g], [gᵀ, 0]]`
/// has `n_-(A - B) + [gᵀ(A - B)^{-1}g > 0]` negative eigenvalues (Schur
/// complement on `A - B`) and also `n_-(restricted) + 1`.
pub fn constrained_index(op: &LinearizedOperator, u: &RadialFunction, p: f64) -> Result<usize> {
    let free = op.count_below(1.0);
    let cells = u.grid().cell_volumes();
    let off = if op.degree > 0 { 1 } else { 0 };
    let g: Vec<f64> = (0..op.len()).map(|i| cells[i + off] * u.values()[i + off].powf(p - 1.0)).collect();
    let shifted: Vec<f64> = op.diag.iter().zip(&op.weight).map(|(a, b)| a - b).collect();
    let lu = Tridiag::symmetric(shifted, op.off.clone())
        .factor()
        .map_err(|_| Error::Numeric("A - B is singular; the constrained count is undefined".into()))?;
    let y = lu.solve(&g);
    let s = crate::linalg::dot(&g, &y);
    if free == 0 && s < 0.0 {
        return Err(Error::Numeric("inconsistent inertia in the bordered count".into()));
    }
    Ok(if s > 0.0 { free } else { free - 1 })
}

/// Number of spherical harmonics of degree `l` in `R^N`.
pub fn harmonic_multiplicity(dim: usize, l: usize) -> usize {
    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
    }
    if l == 0 {
        return 1;
    }
    if l == 1 {
        return dim;
    }
    binom(l + dim - 1, dim - 1) - binom(l + dim - 3, dim - 1)
}

/// Radial Morse index from the `k` smallest eigenvalues of the pencil. For
/// `p = 2`, where the harmonic decomposition is exact, the full count sums
/// the sectors `l >= 1` with their multiplicities until a sector contributes
/// nothing.
pub fn morse_index_radial(record: &SolutionRecord, k: usize) -> Result<MorseReport> {
    let op = assemble_linearized(record)?;
    let pairs = smallest_eigenpairs(&op.diag, &op.off, &op.weight, k.max(1))?;
    let sigmas: Vec<f64> = pairs.iter().map(|(s, _)| *s).collect();
    if sigmas.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue in the linearized pencil".into()));
    }
    let index_radial = op.count_below(1.0 - TOL_EIG);
    let marginal = op.count_below(1.0 + TOL_EIG) - index_radial;
    let index_constrained = constrained_index(&op, &record.profile, record.params.p)?;
    let index_full = if record.params.p == 2.0 {
        let mut total = index_radial;
        for l in 1.. {
            let sector = assemble_sector(&record.profile, record.lambda, &record.params, l)?;
            let c = sector.count_below(1.0 - TOL_EIG);
            if c == 0 {
                break;
            }
            total += harmonic_multiplicity(record.params.dim, l) * c;
        }
        Some(total)
    } else {
        None
    };
    let decay = decay_diagnostics(record)?;
    Ok(MorseReport {
        branch: record.branch,
        sigmas,
        index_radial,
        marginal,
        index_constrained,
        index_full,
        decay_rate: decay.rate,
        decay_rate_expected: decay.expected,
    })
}

/// Least-squares fit of the exponential tail on nodes where
/// `1e-10 < u/u(0) < 1e-3` and `r <= 0.75 R`.
pub fn decay_diagnostics(record: &SolutionRecord) -> Result<DecayFit> {
    let params = &record.params;
    let g = record.profile.grid();
    let u = record.profile.values();
    let u0 = u.iter().copied().fold(0.0, f64::max);
    let shift = (params.dim as f64 - 1.0) / (params.p * (params.p - 1.0));
    let r_cap = 0.75 * g.radius();
    let pts: Vec<(f64, f64)> = g
        .nodes()
        .iter()
        .zip(u)
        .filter(|&(&r, &v)| r > 0.0 && r <= r_cap && v > 1e-10 * u0 && v < 1e-3 * u0)
        .map(|(&r, &v)| (r, v.ln() + shift * r.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "only {} tail nodes between 1e-10 and 1e-3 of the peak",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    let rate = -slope;
    let expected = decay_rate(record.lambda, params.p);
    Ok(DecayFit {
        rate,
        intercept: my - slope * mx,
        expected,
        relative_error: (rate - expected).abs() / expected,
        r_lo: pts[0].0,
        r_hi: pts[pts.len() - 1].0,
        points: pts.len(),
    })
}
