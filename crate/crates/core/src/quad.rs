//! Gauss–Legendre quadrature for smooth one-dimensional integrals, used by the
//! analytic bubble integrals and test oracles.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Reusable rule mapped onto arbitrary intervals.
#[derive(Debug, Clone)]
pub struct GaussRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { x, w }
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        h * self.x.iter().zip(&self.w).map(|(x, w)| w * f(c + h * x)).sum::<f64>()
    }

    /// Composite rule over consecutive breakpoints.
    pub fn integrate_panels(&self, breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        breaks.windows(2).map(|ab| self.integrate(ab[0], ab[1], &f)).sum()
    }

    /// `∫_0^∞ f` using geometric panels around `scale` on `[0, tail]` and the
    /// substitution `r = tail / t` beyond.
    pub fn integrate_half_line(&self, scale: f64, f: impl Fn(f64) -> f64) -> f64 {
        let tail = 1e3 * scale;
        let mut breaks = vec![0.0];
        let mut b = 1e-6 * scale;
        while b < tail {
            breaks.push(b);
            b *= 2.0;
        }
        breaks.push(tail);
        let head = self.integrate_panels(&breaks, &f);
        // ∫_tail^∞ f(r) dr = ∫_0^1 f(tail/t) tail/t² dt
        let g = |t: f64| if t > 0.0 { f(tail / t) * tail / (t * t) } else { 0.0 };
        let tbreaks: Vec<f64> = (0..=16).map(|k| (k as f64 / 16.0).powi(2)).collect();
        head + self.integrate_panels(&tbreaks, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let g = GaussRule::new(8);
        let v = g.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let (_, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn half_line_integrals() {
        let g = GaussRule::new(20);
        let v = g.integrate_half_line(1.0, |r| (-r).exp());
        assert!((v - 1.0).abs() < 1e-12);
        // ∫_0^∞ r^2 (1+r^2)^{-3} dr = π/16
        let v = g.integrate_half_line(1.0, |r| r * r / (1.0 + r * r).powi(3));
        assert!((v - std::f64::consts::PI / 16.0).abs() < 1e-12);
    }
}
