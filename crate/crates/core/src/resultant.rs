//! Polynomials, resultants and discriminants, and the shifted zero-separation
//! experiment for Dirichlet determinants.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::model::Potential;
use crate::transfer::LogComplex;
use crate::zerocount::{annulus_zeros, Holomorphic, PhaseDeterminant};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Polynomial `Σ coeffs[k]·x^k` with nonzero leading coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Coefficients in ascending order; trailing zeros are dropped.
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self> {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        precondition(!coeffs.is_empty(), "the zero polynomial has no degree")?;
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Monic polynomial `Π(x − r)`.
    #[must_use]
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![ONE];
        for &r in roots {
            let mut next = vec![ZERO; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            c = next;
        }
        Self { coeffs: c }
    }

    #[must_use]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[must_use]
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[must_use]
    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.degree()]
    }

    #[must_use]
    pub fn is_monic(&self) -> bool {
        (self.leading() - ONE).norm() <= 1e-14
    }

    #[must_use]
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }

    /// `(p(x), p′(x))` by Horner.
    #[must_use]
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let (mut p, mut dp) = (ZERO, ZERO);
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    #[must_use]
    pub fn derivative(&self) -> Option<Self> {
        if self.degree() == 0 {
            return None;
        }
        let c = self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect();
        Some(Self { coeffs: c })
    }

    #[must_use]
    pub fn mul(&self, other: &Self) -> Self {
        let mut c = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self { coeffs: c }
    }

    /// `Σ|c_k||x|^k`, the scale of rounding errors in `p(x)`.
    #[must_use]
    pub fn abs_eval(&self, x: Complex64) -> f64 {
        let r = x.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    /// Roots from the balanced companion matrix.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        poly_roots(&self.coeffs)
    }
}

impl Holomorphic for Poly {
    fn eval_log(&self, z: Complex64) -> Result<(LogComplex, Complex64)> {
        let (p, dp) = self.eval_with_derivative(z);
        Ok((LogComplex::from_complex(p), dp / p))
    }

    fn degree_hint(&self) -> usize {
        self.degree()
    }
}

/// Roots of `Σ coeffs[k] x^k` as eigenvalues of the balanced companion
/// matrix, by shifted complex Hessenberg QR.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let p = Poly::new(coeffs.to_vec())?;
    let n = p.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = p.leading();
    let mut h = vec![vec![ZERO; n]; n];
    for j in 0..n {
        h[0][j] = -p.coeffs[n - 1 - j] / lead;
    }
    for i in 1..n {
        h[i][i - 1] = ONE;
    }
    balance(&mut h);
    let roots = hessenberg_eigenvalues(h).ok_or_else(|| Error::RootFinding("QR iteration did not converge".into()))?;
    for &r in &roots {
        let v = p.eval(r).norm();
        let res = if v == 0.0 { 0.0 } else { v / p.abs_eval(r) };
        if !(res <= 1e-8) {
            return Err(Error::RootFinding(format!("companion residual {res:e} at root {r}")));
        }
    }
    Ok(roots)
}

/// Diagonal similarity by powers of two equalizing row and column norms.
fn balance(a: &mut [Vec<Complex64>]) {
    let n = a.len();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut c, mut r) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += a[j][i].l1_norm();
                    r += a[i][j].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let (mut f, mut cc) = (1.0, c);
            while cc < r / 2.0 {
                f *= 2.0;
                cc *= 4.0;
            }
            while cc >= r * 2.0 {
                f /= 2.0;
                cc /= 4.0;
            }
            if c * f + r / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[i][j] /= f;
                    a[j][i] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by single-shift QR with Givens
/// rotations and Wilkinson shifts.
fn hessenberg_eigenvalues(mut h: Vec<Vec<Complex64>>) -> Option<Vec<Complex64>> {
    let n = h.len();
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n;
    let mut iter = 0usize;
    while hi > 0 {
        if hi == 1 {
            eigs.push(h[0][0]);
            break;
        }
        let mut lo = 0;
        for k in (1..hi).rev() {
            let scale = h[k][k].norm() + h[k - 1][k - 1].norm();
            if h[k][k - 1].norm() <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
                h[k][k - 1] = ZERO;
                lo = k;
                break;
            }
        }
        if lo == hi - 1 {
            eigs.push(h[hi - 1][hi - 1]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 60 * n {
            return None;
        }
        let (a, b, c, d) = (h[hi - 2][hi - 2], h[hi - 2][hi - 1], h[hi - 1][hi - 2], h[hi - 1][hi - 1]);
        let half = (a - d) * 0.5;
        let disc = (half * half + b * c).sqrt();
        let (m1, m2) = ((a + d) * 0.5 + disc, (a + d) * 0.5 - disc);
        let mut mu = if (m1 - d).norm() < (m2 - d).norm() { m1 } else { m2 };
        if iter % 10 == 0 {
            // exceptional shift breaks cycles
            mu = d + Complex64::new(0.75, 0.5) * h[hi - 1][hi - 2].norm();
        }
        for k in lo..hi {
            h[k][k] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi - 1 {
            let (x, y) = (h[k][k], h[k + 1][k]);
            let r = x.norm().hypot(y.norm());
            let (cs, sn) = if r == 0.0 { (ONE, ZERO) } else { (x / r, y / r) };
            for j in k..hi {
                let (p, q) = (h[k][j], h[k + 1][j]);
                h[k][j] = cs.conj() * p + sn.conj() * q;
                h[k + 1][j] = -sn * p + cs * q;
            }
            rots.push((cs, sn));
        }
        for (idx, k) in (lo..hi - 1).enumerate() {
            let (cs, sn) = rots[idx];
            for row in h.iter_mut().take((k + 2).min(hi)).skip(lo) {
                let (p, q) = (row[k], row[k + 1]);
                row[k] = p * cs + q * sn;
                row[k + 1] = -p * sn.conj() + q * cs.conj();
            }
        }
        for k in lo..hi {
            h[k][k] += mu;
        }
    }
    Some(eigs)
}

/// Determinant by Gaussian elimination with partial pivoting. A pivot below
/// `1e−10` times the largest entry is declared an exact zero.
fn det_partial_pivot(mut a: Vec<Vec<Complex64>>) -> Complex64 {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, c| m.max(c.norm()));
    let mut det = ONE;
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap_or(k);
        if a[p][k].norm() <= 1e-10 * scale {
            return ZERO;
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        let piv = a[k][k];
        det *= piv;
        for i in k + 1..n {
            let l = a[i][k] / piv;
            if l == ZERO {
                continue;
            }
            for j in k..n {
                let t = a[k][j];
                a[i][j] -= l * t;
            }
        }
    }
    det
}

/// Sylvester matrix of `p` (degree m) and `q` (degree n): n shifted rows of
/// `p` above m shifted rows of `q`, coefficients in descending order.
#[must_use]
pub fn sylvester_matrix(p: &Poly, q: &Poly) -> Vec<Vec<Complex64>> {
    let (m, n) = (p.degree(), q.degree());
    let size = m + n;
    let mut s = vec![vec![ZERO; size]; size];
    for i in 0..n {
        for (k, &c) in p.coeffs.iter().rev().enumerate() {
            s[i][i + k] = c;
        }
    }
    for i in 0..m {
        for (k, &c) in q.coeffs.iter().rev().enumerate() {
            s[n + i][i + k] = c;
        }
    }
    s
}

/// `Res(p, q)` as the determinant of the Sylvester matrix.
pub fn sylvester_resultant(p: &Poly, q: &Poly) -> Result<Complex64> {
    precondition(p.degree() >= 1 && q.degree() >= 1, "resultant needs degrees ≥ 1")?;
    Ok(det_partial_pivot(sylvester_matrix(p, q)))
}

/// `lead(p)^{deg q}·lead(q)^{deg p}·Π(ζ_i − η_j)` over the roots of `p` and `q`.
pub fn root_product_resultant(p: &Poly, q: &Poly) -> Result<Complex64> {
    precondition(p.degree() <= 12 && q.degree() <= 12, "root products are trusted up to degree 12")?;
    precondition(p.degree() >= 1 && q.degree() >= 1, "resultant needs degrees ≥ 1")?;
    let (zs, es) = (p.roots()?, q.roots()?);
    let mut r = p.leading().powu(q.degree() as u32) * q.leading().powu(p.degree() as u32);
    for z in &zs {
        for e in &es {
            r *= z - e;
        }
    }
    Ok(r)
}

/// `Π_{i≠j}(ζ_i − ζ_j)` over the roots of a monic polynomial.
///
/// This product equals `Res(p, p′)`; the convention with the extra sign
/// `(−1)^{n(n−1)/2}` is `discriminant_signed`.
pub fn discriminant(p: &Poly) -> Result<Complex64> {
    precondition(p.is_monic(), "discriminant needs a monic polynomial")?;
    precondition(p.degree() >= 2, "discriminant needs degree ≥ 2")?;
    let z = p.roots()?;
    let mut d = ONE;
    for i in 0..z.len() {
        for j in 0..z.len() {
            if i != j {
                d *= z[i] - z[j];
            }
        }
    }
    Ok(d)
}

/// `(−1)^{n(n−1)/2}·Res(p, p′) = Π_{i<j}(ζ_i − ζ_j)²`.
pub fn discriminant_signed(p: &Poly) -> Result<Complex64> {
    precondition(p.is_monic() && p.degree() >= 2, "discriminant needs a monic polynomial of degree ≥ 2")?;
    let dp = p.derivative().expect("degree ≥ 2");
    let n = p.degree();
    let r = sylvester_resultant(p, &dp)?;
    Ok(if (n * (n - 1) / 2) % 2 == 0 { r } else { -r })
}

/// One sample of the shifted zero-separation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationSample {
    pub l1: i64,
    pub l2: i64,
    pub t: i64,
    pub energy: f64,
    /// `None` when either zero set in the annulus is empty.
    pub min_distance: Option<f64>,
}

impl SeparationSample {
    pub const CSV_HEADER: &'static str = "l1,l2,t,E,min_distance";

    #[must_use]
    pub fn csv_row(&self) -> String {
        let d = self.min_distance.map_or_else(|| "empty".to_string(), |d| d.to_string());
        format!("{},{},{},{},{}", self.l1, self.l2, self.t, self.energy, d)
    }
}

/// Minimal distance between the zeros of `f_{l1}(·, ω, E)` and of
/// `f_{l2}(· e(tω), ω, E)` in the annulus `r_lo < |z| < r_hi`.
#[allow(clippy::too_many_arguments)]
pub fn zero_separation_experiment(
    pot: &Potential,
    omega: f64,
    e_val: f64,
    l1: i64,
    l2: i64,
    t: i64,
    r_lo: f64,
    r_hi: f64,
) -> Result<SeparationSample> {
    precondition(l1 >= l2 && l2 >= 1, "l1 ≥ l2 ≥ 1")?;
    precondition(t >= 0, "t ≥ 0")?;
    let ev = Complex64::new(e_val, 0.0);
    let f1 = PhaseDeterminant::new(pot, crate::eigen::Window::new(1, l1), omega, ev);
    let f2 = PhaseDeterminant::new(pot, crate::eigen::Window::new(1 + t, l2 + t), omega, ev);
    let z1 = annulus_zeros(&f1, r_lo, r_hi)?;
    let z2 = annulus_zeros(&f2, r_lo, r_hi)?;
    let mut best: Option<f64> = None;
    for a in &z1 {
        for b in &z2 {
            let d = (a - b).norm();
            best = Some(best.map_or(d, |m| m.min(d)));
        }
    }
    Ok(SeparationSample { l1, l2, t, energy: e_val, min_distance: best })
}

/// Bivariate polynomial `Σ c[i][j] x^i y^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiPoly {
    pub c: Vec<Vec<Complex64>>,
}

impl BiPoly {
    #[must_use]
    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        self.c.iter().rev().fold(ZERO, |acc, row| acc * x + row.iter().rev().fold(ZERO, |a, &c| a * y + c))
    }

    /// Total degree.
    #[must_use]
    pub fn degree(&self) -> usize {
        let mut d = 0;
        for (i, row) in self.c.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if *c != ZERO {
                    d = d.max(i + j);
                }
            }
        }
        d
    }

    /// The polynomial in `y` at fixed `x`.
    fn in_y(&self, x: Complex64) -> Vec<Complex64> {
        let dy = self.c.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = vec![ZERO; dy];
        let mut xp = ONE;
        for row in &self.c {
            for (j, &c) in row.iter().enumerate() {
                out[j] += c * xp;
            }
            xp *= x;
        }
        out
    }
}

/// Common zeros of `f` and `g`, from the roots of `x ↦ Res_y(f(x,·), g(x,·))`
/// (recovered by interpolation on a circle) and the shared `y`-roots above them.
pub fn common_zeros(f: &BiPoly, g: &BiPoly, tol: f64) -> Result<Vec<(Complex64, Complex64)>> {
    let deg = f.degree() * g.degree();
    precondition(deg >= 1 && deg <= 12, "Bezout degree must be in 1..=12")?;
    let m = deg + 1;
    let mut samples = Vec::with_capacity(m);
    for k in 0..m {
        let x = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / m as f64);
        let (py, qy) = (Poly::new(f.in_y(x))?, Poly::new(g.in_y(x))?);
        samples.push(sylvester_resultant(&py, &qy)?);
    }
    // inverse DFT recovers the coefficients of the degree-≤deg resultant
    let coeffs: Vec<Complex64> = (0..m)
        .map(|j| {
            samples
                .iter()
                .enumerate()
                .map(|(k, s)| s * Complex64::from_polar(1.0, -std::f64::consts::TAU * (j * k) as f64 / m as f64))
                .sum::<Complex64>()
                / m as f64
        })
        .collect();
    let scale = coeffs.iter().fold(0.0f64, |a, c| a.max(c.norm()));
    let trimmed: Vec<Complex64> = coeffs.iter().map(|&c| if c.norm() < 1e-12 * scale { ZERO } else { c }).collect();
    let xs = poly_roots(&trimmed)?;
    let mut out = Vec::new();
    for x in xs {
        let py = Poly::new(f.in_y(x))?;
        for y in py.roots()? {
            let gv = g.eval(x, y).norm();
            let gs = g.c.iter().flatten().map(|c| c.norm()).sum::<f64>() * (1.0 + x.norm()).powi(g.degree() as i32) * (1.0 + y.norm()).powi(g.degree() as i32);
            if gv <= tol * gs {
                out.push((x, y));
            }
        }
    }
    Ok(out)
}
