//! Log-log regression of cutoff-bubble norms against the concentration scale.

use serde::{Deserialize, Serialize};

use super::{cutoff_norms, BubbleSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// `‖u_ε‖_q^q`.
    Lebesgue,
    /// `‖∇u_ε‖_q^q`.
    Gradient,
}

/// Regime of the small-`ε` law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormBranch {
    /// Scale-invariant exponent (`q = p*`, or `q = p` for the gradient):
    /// the norm tends to a constant.
    Invariant,
    /// Core-dominated power law.
    Core,
    /// Threshold exponent: power law times `log(ε^{α-1})`.
    LogCorrected,
    /// Cutoff-dominated power law depending on `α`.
    Cutoff,
}

impl NormBranch {
    /// Branch and expected exponent for the given norm.
    pub fn classify(spec: &BubbleSpec, q: f64, kind: NormKind) -> (NormBranch, f64) {
        let (n, p, a) = (spec.dim as f64, spec.p, spec.alpha);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs().max(1.0);
        match kind {
            NormKind::Lebesgue => {
                let thr = n * (p - 1.0) / (n - p);
                let core = n - (n - p) * q / p;
                if close(q, spec.p_star()) {
                    (NormBranch::Invariant, 0.0)
                } else if close(q, thr) {
                    (NormBranch::LogCorrected, core)
                } else if q > thr {
                    (NormBranch::Core, core)
                } else {
                    (NormBranch::Cutoff, (n - p) * q / (p * (p - 1.0)) + a * (n - (n - p) * q / (p - 1.0)))
                }
            }
            NormKind::Gradient => {
                let thr = n * (p - 1.0) / (n - 1.0);
                let core = n - n * q / p;
                if close(q, p) {
                    (NormBranch::Invariant, 0.0)
                } else if close(q, thr) {
                    (NormBranch::LogCorrected, core)
                } else if q > thr {
                    (NormBranch::Core, core)
                } else {
                    (NormBranch::Cutoff, (n - p) * q / (p * (p - 1.0)) + a * (n - (n - 1.0) * q / (p - 1.0)))
                }
            }
        }
    }
}

/// Fitted and expected exponents of `‖·‖_q^q ≈ C ε^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsFit {
    pub kind: NormKind,
    pub q: f64,
    pub alpha: f64,
    pub branch: NormBranch,
    pub expected_exponent: f64,
    /// Exponent of the branch model: plain slope, or the `s` of
    /// `ε^s (A + B ln(1/ε))` on the logarithmic branch.
    pub fitted_exponent: f64,
    /// Plain log-log slope.
    pub loglog_slope: f64,
    /// `exp` of the plain intercept, the leading constant on power-law branches.
    pub leading_constant: f64,
    /// Quadratic coefficient of `ln y` in `ln ε`.
    pub curvature: f64,
    /// Share `B L/(A + B L)` of the logarithmic term at the smallest `ε`,
    /// `L = ln(1/ε)`; `None` off the logarithmic branch.
    pub log_share: Option<f64>,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
}

impl AsymptoticsFit {
    /// Relative deviation of the fitted exponent, or the absolute one when the
    /// expected exponent is zero.
    pub fn exponent_error(&self) -> f64 {
        let d = (self.fitted_exponent - self.expected_exponent).abs();
        if self.expected_exponent == 0.0 {
            d
        } else {
            d / self.expected_exponent.abs()
        }
    }
}

/// Least squares on the monomials `x^0 .. x^{deg}`.
fn polyfit(x: &[f64], y: &[f64], deg: usize) -> Result<Vec<f64>> {
    let k = deg + 1;
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for (&xi, &yi) in x.iter().zip(y) {
        let pw: Vec<f64> = (0..k).map(|j| xi.powi(j as i32)).collect();
        for i in 0..k {
            b[i] += pw[i] * yi;
            for j in 0..k {
                a[i][j] += pw[i] * pw[j];
            }
        }
    }
    crate::linalg::dense_solve(a, b)
}

/// Relative misfit of `z ≈ A + B L` with `z = y ε^{-s}`; returns `(misfit, A, B)`.
fn log_model_misfit(eps: &[f64], y: &[f64], s: f64) -> (f64, f64, f64) {
    let mut a = [[0.0; 2]; 2];
    let mut b = [0.0; 2];
    for (&e, &v) in eps.iter().zip(y) {
        let z = v * e.powf(-s);
        let l = -e.ln();
        let row = [1.0 / z, l / z];
        for i in 0..2 {
            b[i] += row[i];
            for j in 0..2 {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let ca = (b[0] * a[1][1] - b[1] * a[0][1]) / det;
    let cb = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
    let misfit = eps
        .iter()
        .zip(y)
        .map(|(&e, &v)| {
            let z = v * e.powf(-s);
            ((z - ca - cb * (-e.ln())) / z).powi(2)
        })
        .sum();
    (misfit, ca, cb)
}

/// Exponent of the model `ε^s (A + B ln(1/ε))` by golden-section search on
/// `s` around `s0`.
fn fit_log_model(eps: &[f64], y: &[f64], s0: f64) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (s0 - 1.0, s0 + 1.0);
    let f = |s: f64| log_model_misfit(eps, y, s).0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo < 1e-12 {
            break;
        }
        if fc < fd {
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
    let s = 0.5 * (lo + hi);
    let (_, a, b) = log_model_misfit(eps, y, s);
    let l = -eps.iter().copied().fold(f64::INFINITY, f64::min).ln();
    (s, b * l / (a + b * l))
}

/// Fits the small-`ε` law of a cutoff-bubble norm over the family
/// `spec.with_eps(ε)` for the given scales, which must span at least two
/// decades.
pub fn bubble_asymptotics_fit(spec: &BubbleSpec, eps: &[f64], q: f64, kind: NormKind) -> Result<AsymptoticsFit> {
    if eps.len() < 4 {
        return Err(Error::InsufficientData(format!("regression needs at least 4 scales, got {}", eps.len())));
    }
    let lo = eps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps.iter().copied().fold(0.0f64, f64::max);
    if !(lo > 0.0) || hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::InsufficientData(format!("scales must be positive and span two decades, got [{lo}, {hi}]")));
    }
    let mut values = Vec::with_capacity(eps.len());
    for &e in eps {
        let nm = cutoff_norms(&spec.with_eps(e)?, q)?;
        values.push(match kind {
            NormKind::Lebesgue => nm.lebesgue,
            NormKind::Gradient => nm.gradient,
        });
    }
    if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Numeric("cutoff norm is not positive and finite".into()));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let lin = polyfit(&x, &ly, 1)?;
    let quad = polyfit(&x, &ly, 2)?;
    let (branch, expected) = NormBranch::classify(spec, q, kind);
    let (fitted, log_share) = if branch == NormBranch::LogCorrected {
        let (s, r) = fit_log_model(eps, &values, lin[1]);
        (s, Some(r))
    } else {
        (lin[1], None)
    };
    Ok(AsymptoticsFit {
        kind,
        q,
        alpha: spec.alpha,
        branch,
        expected_exponent: expected,
        fitted_exponent: fitted,
        loglog_slope: lin[1],
        leading_constant: lin[0].exp(),
        curvature: quad[2],
        log_share,
        eps: eps.to_vec(),
        values,
    })
}

/// `k` scales spaced evenly in `log ε` on `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1).max(1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::sobolev_constant;

    fn spec(alpha: f64) -> BubbleSpec {
        BubbleSpec::new(3, 2.0, 1e-2, alpha).unwrap()
    }

    #[test]
    fn branch_classification() {
        let s = spec(0.3);
        assert_eq!(NormBranch::classify(&s, 4.0, NormKind::Lebesgue), (NormBranch::Core, 1.0));
        assert_eq!(NormBranch::classify(&s, 6.0, NormKind::Lebesgue).0, NormBranch::Invariant);
        assert_eq!(NormBranch::classify(&s, 3.0, NormKind::Lebesgue), (NormBranch::LogCorrected, 1.5));
        let (b, e) = NormBranch::classify(&s, 2.0, NormKind::Lebesgue);
        assert_eq!(b, NormBranch::Cutoff);
        assert!((e - 1.3).abs() < 1e-14);
        assert_eq!(NormBranch::classify(&s, 1.5, NormKind::Gradient).0, NormBranch::LogCorrected);
        assert_eq!(NormBranch::classify(&s, 2.0, NormKind::Gradient).0, NormBranch::Invariant);
    }

    #[test]
    fn core_and_cutoff_exponents() {
        let eps = log_spaced(1e-4, 1e-2, 9);
        let f = bubble_asymptotics_fit(&spec(0.0), &eps, 4.0, NormKind::Lebesgue).unwrap();
        assert!(f.exponent_error() < 0.05, "{f:?}");
        let f = bubble_asymptotics_fit(&spec(0.3), &eps, 2.0, NormKind::Lebesgue).unwrap();
        assert!(f.exponent_error() < 0.05, "{f:?}");
        let f = bubble_asymptotics_fit(&spec(0.3), &eps, 1.0, NormKind::Gradient).unwrap();
        assert!(f.exponent_error() < 0.05, "{f:?}");
    }

    #[test]
    fn critical_norm_tends_to_the_sobolev_level() {
        let eps = log_spaced(1e-4, 1e-2, 9);
        let f = bubble_asymptotics_fit(&spec(0.0), &eps, 6.0, NormKind::Lebesgue).unwrap();
        let s_np = sobolev_constant(3, 2.0).unwrap().s_np;
        assert!(f.fitted_exponent.abs() < 1e-3);
        assert!((f.leading_constant / s_np - 1.0).abs() < 1e-3);
    }

    #[test]
    fn threshold_exponent_needs_the_log_model() {
        let eps = log_spaced(1e-4, 1e-2, 9);
        for alpha in [0.0, 0.3] {
            let f = bubble_asymptotics_fit(&spec(alpha), &eps, 3.0, NormKind::Lebesgue).unwrap();
            assert!(f.exponent_error() < 0.05, "{f:?}");
            // The plain power law misses the exponent and bends.
            assert!((f.loglog_slope - 1.5).abs() > 0.05);
            assert!(f.curvature.abs() > 1e-3);
            assert!(f.log_share.unwrap() > 0.5);
        }
    }

    #[test]
    fn regression_needs_enough_scales() {
        let s = spec(0.0);
        assert!(matches!(
            bubble_asymptotics_fit(&s, &[1e-4, 1e-3, 1e-2], 4.0, NormKind::Lebesgue),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            bubble_asymptotics_fit(&s, &log_spaced(1e-3, 1e-2, 6), 4.0, NormKind::Lebesgue),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn polyfit_recovers_a_parabola() {
        let x: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|x| 1.0 - 2.0 * x + 0.25 * x * x).collect();
        let c = polyfit(&x, &y, 2).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-10 && (c[1] + 2.0).abs() < 1e-10 && (c[2] - 0.25).abs() < 1e-10);
    }
}
