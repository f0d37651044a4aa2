//! Line-oriented `key = value` sweep configuration. `#` starts a comment;
//! lists are comma-separated.

use std::collections::BTreeMap;

use pohozaev::ProblemParams;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dim: usize,
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    pub masses: Vec<f64>,
    /// Absolute couplings; exclusive with `mu_fractions`.
    pub mus: Vec<f64>,
    /// Couplings as fractions of `μ_a*` for the point's mass.
    pub mu_fractions: Vec<f64>,
    pub grid_n: usize,
    pub grid_r: Option<f64>,
    pub morse: bool,
}

/// One sweep point, in configuration order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub a: f64,
    /// Absolute `μ`, or `None` until `μ_a*` is known.
    pub mu: Option<f64>,
    pub mu_fraction: Option<f64>,
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("{key}: cannot parse '{}' ({e})", s.trim())))
        .collect()
}

fn single(key: &str, value: &str) -> Result<f64, String> {
    value.trim().parse::<f64>().map_err(|e| format!("{key}: cannot parse '{}' ({e})", value.trim()))
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut kv = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected 'key = value', got '{line}'", lineno + 1))?;
            let k = k.trim().to_string();
            if kv.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key '{k}'", lineno + 1));
            }
        }
        let mut take = |k: &str| kv.remove(k);
        let need = |v: Option<String>, k: &str| v.ok_or_else(|| format!("missing key '{k}'"));
        let dim = need(take("N"), "N")?.parse::<usize>().map_err(|e| format!("N: {e}"))?;
        let p = single("p", &need(take("p"), "p")?)?;
        let q1 = single("q1", &need(take("q1"), "q1")?)?;
        let q2 = single("q2", &need(take("q2"), "q2")?)?;
        let masses = match take("a") {
            Some(v) => parse_list("a", &v)?,
            None => vec![1.0],
        };
        let mus = take("mu").map(|v| parse_list("mu", &v)).transpose()?.unwrap_or_default();
        let mu_fractions = take("mu_frac").map(|v| parse_list("mu_frac", &v)).transpose()?.unwrap_or_default();
        if mus.is_empty() == mu_fractions.is_empty() {
            return Err("exactly one of 'mu' and 'mu_frac' must be given".into());
        }
        let grid_n = match take("grid_n") {
            Some(v) => v.parse::<usize>().map_err(|e| format!("grid_n: {e}"))?,
            None => 4000,
        };
        let grid_r = take("grid_R").map(|v| single("grid_R", &v)).transpose()?;
        let morse = match take("morse").as_deref() {
            None | Some("false") => false,
            Some("true") => true,
            Some(other) => return Err(format!("morse: expected true or false, got '{other}'")),
        };
        if let Some(k) = kv.keys().next() {
            return Err(format!("unknown key '{k}'"));
        }
        let out = Self { dim, p, q1, q2, masses, mus, mu_fractions, grid_n, grid_r, morse };
        // Exponent gate with a placeholder mass and coupling.
        ProblemParams::new(dim, p, q1, q2, 1.0, 1.0).map_err(|e| e.to_string())?;
        if out.masses.iter().chain(&out.mus).chain(&out.mu_fractions).any(|x| !(*x > 0.0)) {
            return Err("masses and couplings must be positive".into());
        }
        Ok(out)
    }

    /// Cartesian product, masses outermost.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &a in &self.masses {
            if self.mus.is_empty() {
                for &f in &self.mu_fractions {
                    out.push(SweepPoint { index: out.len(), a, mu: None, mu_fraction: Some(f) });
                }
            } else {
                for &mu in &self.mus {
                    out.push(SweepPoint { index: out.len(), a, mu: Some(mu), mu_fraction: None });
                }
            }
        }
        out
    }

    pub fn params(&self, a: f64, mu: f64) -> ProblemParams {
        ProblemParams { dim: self.dim, p: self.p, q1: self.q1, q2: self.q2, a, mu }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "# sweep\nN = 3\np = 2\nq1 = 2.5\nq2 = 4   # subcritical\na = 1, 2\nmu_frac = 0.2,0.5\ngrid_n = 1000\n";

    #[test]
    fn parses_lists_and_comments() {
        let c = SweepConfig::parse(BASIC).unwrap();
        assert_eq!(c.masses, vec![1.0, 2.0]);
        assert_eq!(c.mu_fractions, vec![0.2, 0.5]);
        assert_eq!(c.grid_n, 1000);
        assert_eq!(c.grid_r, None);
        let pts = c.points();
        assert_eq!(pts.len(), 4);
        assert_eq!((pts[1].a, pts[1].mu_fraction), (1.0, Some(0.5)));
        assert_eq!((pts[2].a, pts[2].index), (2.0, 2));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SweepConfig::parse("N = 3\np = 2\nq1 = 2.5\nq2 = 4\nmu = 1\nmu_frac = 0.5\n").is_err());
        assert!(SweepConfig::parse("N = 3\np = 2\nq1 = 2\nq2 = 4\nmu = 1\n").unwrap_err().contains("q1 must exceed p"));
        assert!(SweepConfig::parse("N = 3\np = 2\nq1 = 2.5\nq2 = 4\nmu = 1\ncolour = red\n").unwrap_err().contains("unknown key"));
        assert!(SweepConfig::parse("N = 3\np = 2\nq1 = 2.5\nq2 = 4\nmu = x\n").is_err());
        assert!(SweepConfig::parse("N = 3\np 2\n").is_err());
        assert!(SweepConfig::parse("N = 3\nN = 4\n").unwrap_err().contains("duplicate"));
    }
}
