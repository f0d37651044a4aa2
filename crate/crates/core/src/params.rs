//! Problem parameters `(N, p, q1, q2, a, μ)` and the derived exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents, mass and coupling of the constrained equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    pub a: f64,
    pub mu: f64,
}

/// Relative slack when deciding `q2 == p*`.
const CRITICAL_TOL: f64 = 1e-12;

impl ProblemParams {
    /// Builds and validates a parameter set.
    pub fn new(dim: usize, p: f64, q1: f64, q2: f64, a: f64, mu: f64) -> Result<Self> {
        let out = Self { dim, p, q1, q2, a, mu };
        out.validate()?;
        Ok(out)
    }

    /// Checks `1 < p < N` and `p < q1 < p + p²/N < q2 <= p*`, `a > 0`, `μ > 0`.
    /// The error message names the first violated inequality.
    pub fn validate(&self) -> Result<()> {
        self.validate_exponents()?;
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidRegime(format!("mass a must be positive, got {}", self.a)));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidRegime(format!("coupling mu must be positive, got {}", self.mu)));
        }
        Ok(())
    }

    /// Same as [`ProblemParams::validate`] without the `μ` and `a` checks.
    pub fn validate_exponents(&self) -> Result<()> {
        let (n, p, q1, q2) = (self.dim as f64, self.p, self.q1, self.q2);
        if self.dim < 2 {
            return Err(Error::InvalidRegime(format!("dimension N must be at least 2, got {}", self.dim)));
        }
        if !(p > 1.0 && p < n) {
            return Err(Error::InvalidRegime(format!("p must satisfy 1 < p < N, got p = {p}, N = {}", self.dim)));
        }
        if !(q1 > p) {
            return Err(Error::InvalidRegime(format!("q1 must exceed p (p < q1), got q1 = {q1}, p = {p}")));
        }
        let bar = self.mass_critical();
        if !(q1 < bar) {
            return Err(Error::InvalidRegime(format!(
                "q1 must be below the mass-critical exponent p + p^2/N = {bar}, got q1 = {q1}"
            )));
        }
        if !(q2 > bar) {
            return Err(Error::InvalidRegime(format!(
                "q2 must exceed the mass-critical exponent p + p^2/N = {bar}, got q2 = {q2}"
            )));
        }
        let ps = self.p_star();
        if !(q2 <= ps * (1.0 + CRITICAL_TOL)) {
            return Err(Error::InvalidRegime(format!(
                "q2 must not exceed the Sobolev exponent p* = pN/(N-p) = {ps}, got q2 = {q2}"
            )));
        }
        Ok(())
    }

    /// Sobolev critical exponent `pN/(N-p)`.
    pub fn p_star(&self) -> f64 {
        let n = self.dim as f64;
        self.p * n / (n - self.p)
    }

    /// Mass-critical exponent `p + p²/N`.
    pub fn mass_critical(&self) -> f64 {
        self.p + self.p * self.p / self.dim as f64
    }

    /// `γ_q = N/p - N/q` without range checks.
    pub fn gamma(&self, q: f64) -> f64 {
        let n = self.dim as f64;
        n / self.p - n / q
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma(self.q1)
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma(self.q2)
    }

    /// `q2 == p*` up to rounding.
    pub fn is_critical(&self) -> bool {
        (self.q2 - self.p_star()).abs() <= CRITICAL_TOL * self.p_star()
    }

    /// Exponent `κ` of the power law `μ_a* = μ_1* a^{-κ}`.
    pub fn kappa(&self) -> f64 {
        let n = self.dim as f64;
        let (p, q1, q2) = (self.p, self.q1, self.q2);
        let b2 = q2 * self.gamma2();
        n * (q2 - q1) * (q2 - p) / (b2 * (b2 - p))
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    pub fn with_mass(&self, a: f64) -> Self {
        Self { a, ..*self }
    }
}

/// `γ_q = N/p - N/q` for `q ∈ [p, p*]`.
pub fn gamma_exponent(q: f64, params: &ProblemParams) -> Result<f64> {
    let ps = params.p_star();
    if !(q >= params.p && q <= ps * (1.0 + CRITICAL_TOL)) {
        return Err(Error::invalid(format!("exponent q = {q} outside [p, p*] = [{}, {ps}]", params.p)));
    }
    Ok(params.gamma(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub() -> ProblemParams {
        ProblemParams::new(3, 2.0, 2.5, 4.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn gamma_values() {
        let pr = sub();
        assert_eq!(gamma_exponent(2.0, &pr).unwrap(), 0.0);
        assert!((gamma_exponent(4.0, &pr).unwrap() - 0.75).abs() < 1e-15);
        let qbar = pr.mass_critical();
        assert!((qbar * gamma_exponent(qbar, &pr).unwrap() - pr.p).abs() < 1e-14);
        assert!(gamma_exponent(1.5, &pr).is_err());
        assert!(gamma_exponent(7.0, &pr).is_err());
        assert!((gamma_exponent(6.0, &pr).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn regime_messages_name_the_violation() {
        let e = ProblemParams::new(3, 2.0, 2.0, 4.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(e.contains("q1 must exceed p"), "{e}");
        let e = ProblemParams::new(3, 2.0, 3.5, 4.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(e.contains("q1 must be below"), "{e}");
        let e = ProblemParams::new(3, 2.0, 2.5, 3.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(e.contains("q2 must exceed"), "{e}");
        let e = ProblemParams::new(3, 2.0, 2.5, 7.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(e.contains("q2 must not exceed"), "{e}");
        let e = ProblemParams::new(3, 3.5, 4.0, 5.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(e.contains("1 < p < N"), "{e}");
        assert!(ProblemParams::new(3, 2.0, 2.5, 4.0, -1.0, 1.0).is_err());
        assert!(ProblemParams::new(3, 2.0, 2.5, 4.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn regime_table_ordering() {
        for pr in [sub(), ProblemParams::new(3, 2.0, 3.0, 6.0, 1.0, 1.0).unwrap()] {
            assert!(pr.q1 * pr.gamma1() < pr.p);
            assert!(pr.q2 * pr.gamma2() > pr.p);
        }
        assert!(ProblemParams::new(3, 2.0, 3.0, 6.0, 1.0, 1.0).unwrap().is_critical());
        assert!(!sub().is_critical());
    }

    #[test]
    fn kappa_values() {
        assert!((sub().kappa() - 3.0).abs() < 1e-14);
        let crit = ProblemParams::new(3, 2.0, 3.0, 6.0, 1.0, 1.0).unwrap();
        assert!((crit.kappa() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn serializes_with_upper_case_dimension() {
        let s = serde_json::to_string(&sub()).unwrap();
        assert!(s.contains("\"N\":3"));
        let back: ProblemParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, sub());
    }
}
