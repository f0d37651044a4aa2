//! Banded linear algebra: pivoted tridiagonal LU, bordered solves, and
//! symmetric tridiagonal pencils (inertia counts, bisection, inverse iteration).

use crate::error::{Error, Result};

/// General tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        debug_assert_eq!(lower.len() + 1, diag.len());
        debug_assert_eq!(upper.len() + 1, diag.len());
        Self { lower, diag, upper }
    }

    pub fn symmetric(diag: Vec<f64>, off: Vec<f64>) -> Self {
        Self::new(off.clone(), diag, off)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    pub fn factor(&self) -> Result<TriLu> {
        TriLu::new(self)
    }
}

/// LU factorization with partial pivoting of a tridiagonal matrix. Row
/// interchanges create a second superdiagonal `du2`.
#[derive(Debug, Clone)]
pub struct TriLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl TriLu {
    pub fn new(t: &Tridiag) -> Result<Self> {
        let n = t.len();
        if n == 0 {
            return Err(Error::invalid("empty tridiagonal system"));
        }
        let mut dl = t.lower.clone();
        let mut d = t.diag.clone();
        let mut du = t.upper.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swap[i] = true;
            }
        }
        let scale = t.diag.iter().chain(&t.lower).chain(&t.upper).fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(i) = d.iter().position(|&v| v == 0.0 || !v.is_finite() || v.abs() < 1e-300 * scale.max(1.0)) {
            return Err(Error::Numeric(format!("singular tridiagonal matrix (pivot {i})")));
        }
        Ok(Self { dl, d, du, du2, swap })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Dense solve with partial pivoting for the small Schur complements.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let k = b.len();
    for c in 0..k {
        let piv = (c..k)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap_or(c);
        if a[piv][c] == 0.0 || !a[piv][c].is_finite() {
            return Err(Error::Numeric("singular dense system".into()));
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for i in c + 1..k {
            let f = a[i][c] / a[c][c];
            for j in c..k {
                a[i][j] -= f * a[c][j];
            }
            b[i] -= f * b[c];
        }
    }
    for c in (0..k).rev() {
        let mut s = b[c];
        for j in c + 1..k {
            s -= a[c][j] * b[j];
        }
        b[c] = s / a[c][c];
    }
    Ok(b)
}

/// Solves the bordered system `[T U; Vᵀ C] [x; y] = [f; g]` through the Schur
/// complement of the tridiagonal block. `U` and `V` are given as `k` columns.
pub fn bordered_solve(
    lu: &TriLu,
    u_cols: &[Vec<f64>],
    v_cols: &[Vec<f64>],
    c: &[Vec<f64>],
    f: &[f64],
    g: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = g.len();
    let tf = lu.solve(f);
    let tu: Vec<Vec<f64>> = u_cols.iter().map(|col| lu.solve(col)).collect();
    let mut s = vec![vec![0.0; k]; k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        rhs[i] = g[i] - dot(&v_cols[i], &tf);
        for j in 0..k {
            s[i][j] = c[i][j] - dot(&v_cols[i], &tu[j]);
        }
    }
    let y = dense_solve(s, rhs)?;
    let mut x = tf;
    for (j, col) in tu.iter().enumerate() {
        for (xi, ci) in x.iter_mut().zip(col) {
            *xi -= y[j] * ci;
        }
    }
    Ok((x, y))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Number of negative eigenvalues of the symmetric tridiagonal matrix
/// `A - σ B` where `B` is diagonal positive, by Sylvester's law of inertia on
/// the `LDLᵀ` recurrence.
pub fn count_below(diag: &[f64], off: &[f64], b: &[f64], sigma: f64) -> usize {
    let mut count = 0;
    let mut d_prev = 1.0;
    let tiny = f64::MIN_POSITIVE.sqrt();
    for i in 0..diag.len() {
        let mut d = diag[i] - sigma * b[i];
        if i > 0 {
            d -= off[i - 1] * off[i - 1] / d_prev;
        }
        if d == 0.0 {
            d = -tiny;
        }
        if d < 0.0 {
            count += 1;
        }
        d_prev = d;
    }
    count
}

/// The `k` smallest eigenpairs of the pencil `A x = σ B x` with `A`
/// symmetric tridiagonal and `B` diagonal positive. Eigenvalues by Sturm
/// bisection, eigenvectors by shifted inverse iteration with `B`-orthogonal
/// deflation. Vectors are `B`-normalized.
pub fn smallest_eigenpairs(
    diag: &[f64],
    off: &[f64],
    b: &[f64],
    k: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = diag.len();
    if b.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Numeric("weight matrix is not positive definite".into()));
    }
    let k = k.min(n);
    // Gershgorin bounds of B^{-1/2} A B^{-1/2}.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut rad = 0.0;
        if i > 0 {
            rad += off[i - 1].abs() / (b[i] * b[i - 1]).sqrt();
        }
        if i + 1 < n {
            rad += off[i].abs() / (b[i] * b[i + 1]).sqrt();
        }
        let c = diag[i] / b[i];
        lo = lo.min(c - rad);
        hi = hi.max(c + rad);
    }
    let span = (hi - lo).abs().max(1.0);
    lo -= 1e-6 * span;
    hi += 1e-6 * span;
    let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    for j in 0..k {
        let (mut a, mut c) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + c);
            if m == a || m == c {
                break;
            }
            if count_below(diag, off, b, m) > j {
                c = m;
            } else {
                a = m;
            }
            if c - a <= 4.0 * f64::EPSILON * (a.abs().max(c.abs())) {
                break;
            }
        }
        let sigma = 0.5 * (a + c);
        let vec = inverse_iteration(diag, off, b, sigma, &out)?;
        // Rayleigh quotient refines the bisection value.
        let av = sym_matvec(diag, off, &vec);
        let rq = dot(&vec, &av) / vec.iter().zip(b).map(|(x, w)| w * x * x).sum::<f64>();
        out.push((rq, vec));
    }
    Ok(out)
}

fn sym_matvec(diag: &[f64], off: &[f64], x: &[f64]) -> Vec<f64> {
    Tridiag::symmetric(diag.to_vec(), off.to_vec()).matvec(x)
}

fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    b: &[f64],
    sigma: f64,
    previous: &[(f64, Vec<f64>)],
) -> Result<Vec<f64>> {
    let n = diag.len();
    // Offsets scale with σ, not with the spectral span: a weight that
    // decays in the tail makes the span astronomically large.
    let scale = sigma.abs().max(f64::MIN_POSITIVE.sqrt());
    let shift = sigma + 1e-12 * scale;
    let shifted: Vec<f64> = diag.iter().zip(b).map(|(d, w)| d - shift * w).collect();
    let lu = Tridiag::symmetric(shifted, off.to_vec()).factor().or_else(|_| {
        let s2 = sigma + 1e-9 * scale;
        let shifted: Vec<f64> = diag.iter().zip(b).map(|(d, w)| d - s2 * w).collect();
        Tridiag::symmetric(shifted, off.to_vec()).factor()
    })?;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    for _ in 0..6 {
        for (_, v) in previous.iter().filter(|(s, _)| (s - sigma).abs() < 1e-6 * sigma.abs().max(1.0)) {
            let c: f64 = x.iter().zip(v).zip(b).map(|((x, v), w)| x * v * w).sum();
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi -= c * vi;
            }
        }
        let bx: Vec<f64> = x.iter().zip(b).map(|(x, w)| x * w).collect();
        x = lu.solve(&bx);
        let norm = x.iter().zip(b).map(|(x, w)| w * x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numeric("inverse iteration broke down".into()));
        }
        for xi in &mut x {
            *xi /= norm;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tridiag(n: usize, rng: &mut ChaCha8Rng) -> Tridiag {
        let mut r = || rng.gen_range(-1.0..1.0);
        Tridiag::new((0..n - 1).map(|_| r()).collect(), (0..n).map(|_| r()).collect(), (0..n - 1).map(|_| r()).collect())
    }

    #[test]
    fn pivoted_lu_solves_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1usize, 2, 3, 10, 257] {
            let t = if n == 1 { Tridiag::new(vec![], vec![0.7], vec![]) } else { random_tridiag(n, &mut rng) };
            let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
            let b = t.matvec(&x);
            let y = t.factor().unwrap().solve(&b);
            for (a, c) in x.iter().zip(&y) {
                assert!((a - c).abs() < 1e-8, "n={n}");
            }
        }
    }

    #[test]
    fn lu_handles_zero_leading_pivot() {
        let t = Tridiag::new(vec![1.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0]);
        let x = vec![1.0, 2.0, 3.0];
        let y = t.factor().unwrap().solve(&t.matvec(&x));
        for (a, c) in x.iter().zip(&y) {
            assert!((a - c).abs() < 1e-14);
        }
        let s = Tridiag::new(vec![0.0], vec![1.0, 0.0], vec![0.0]);
        assert!(s.factor().is_err());
    }

    #[test]
    fn bordered_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 30;
        let t = random_tridiag(n, &mut rng);
        let k = 2;
        let u: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let v: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let c = vec![vec![0.3, -0.2], vec![0.1, 0.9]];
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let y = vec![0.5, -1.5];
        let mut f = t.matvec(&x);
        for j in 0..k {
            for i in 0..n {
                f[i] += u[j][i] * y[j];
            }
        }
        let g: Vec<f64> = (0..k).map(|i| dot(&v[i], &x) + c[i][0] * y[0] + c[i][1] * y[1]).collect();
        let (xs, ys) = bordered_solve(&t.factor().unwrap(), &u, &v, &c, &f, &g).unwrap();
        for (a, b) in x.iter().zip(&xs) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in y.iter().zip(&ys) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenpairs_of_discrete_dirichlet_laplacian() {
        let n = 200;
        let h = 1.0 / (n as f64 + 1.0);
        let diag = vec![2.0 / h / h; n];
        let off = vec![-1.0 / h / h; n - 1];
        let b = vec![1.0; n];
        let pairs = smallest_eigenpairs(&diag, &off, &b, 3).unwrap();
        for (j, (s, v)) in pairs.iter().enumerate() {
            let k = (j + 1) as f64;
            let exact = 4.0 / h / h * (k * std::f64::consts::PI * h / 2.0).sin().powi(2);
            assert!((s / exact - 1.0).abs() < 1e-10, "{s} vs {exact}");
            let av = sym_matvec(&diag, &off, v);
            let res: f64 = av.iter().zip(v).map(|(a, x)| (a - s * x).powi(2)).sum::<f64>().sqrt();
            assert!(res < 1e-6 * s);
        }
        assert_eq!(count_below(&diag, &off, &b, pairs[1].0 * (1.0 + 1e-9)), 2);
    }

    #[test]
    fn weighted_pencil_rayleigh_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 80;
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(2.0..4.0)).collect();
        let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let pairs = smallest_eigenpairs(&diag, &off, &b, 4).unwrap();
        for w in pairs.windows(2) {
            assert!(w[0].0 <= w[1].0);
        }
        for (s, v) in &pairs {
            let av = sym_matvec(&diag, &off, v);
            let rq = dot(v, &av) / v.iter().zip(&b).map(|(x, w)| w * x * x).sum::<f64>();
            assert!((rq - s).abs() < 1e-8);
        }
    }
}
