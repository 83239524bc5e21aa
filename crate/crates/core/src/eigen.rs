//! Finite-volume eigenproblems for `H(x, ω)` restricted to a window.
//!
//! Dirichlet spectra come from Sturm bisection, whose pivots are the ratios
//! `f_{[lo,n]}/f_{[lo,n−1]}` of the determinant recursion. Periodic spectra,
//! the roots of `g^{(±)} = h_N ∓ 2`, are bisected with an inertia count of the
//! ring: signs of `g` itself are unreliable within rounding noise of its roots,
//! and a double root never changes sign at all.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::model::Potential;
use crate::transfer::Sign;

/// Inclusive lattice window `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    #[must_use]
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "empty window [{lo}, {hi}]");
        Self { lo, hi }
    }

    /// `[−n, n]`.
    #[must_use]
    pub fn centered(n: i64) -> Self {
        Self::new(-n, n)
    }

    /// `[1, n]`.
    #[must_use]
    pub fn from_one(n: i64) -> Self {
        Self::new(1, n)
    }

    #[must_use]
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice site of vector index `i`.
    #[must_use]
    pub fn site(&self, i: usize) -> i64 {
        self.lo + i as i64
    }

    /// Vector index of lattice site `n`.
    #[must_use]
    pub fn index(&self, n: i64) -> usize {
        (n - self.lo) as usize
    }

    #[must_use]
    pub fn contains(&self, n: i64) -> bool {
        (self.lo..=self.hi).contains(&n)
    }
}

/// Boundary condition of a finite-volume problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    Dirichlet,
    Periodic,
    Antiperiodic,
}

impl From<Sign> for Boundary {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Periodic => Boundary::Periodic,
            Sign::Antiperiodic => Boundary::Antiperiodic,
        }
    }
}

/// Spectrum of one finite-volume problem at one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub x: f64,
    pub window: Window,
    pub bc: Boundary,
    pub eigs: Vec<f64>,
    pub vecs: Option<Vec<Vec<f64>>>,
}

impl SpectrumSample {
    /// Attaches normalized eigenvectors (Dirichlet only).
    pub fn with_vectors(mut self, pot: &Potential, omega: f64) -> Result<Self> {
        precondition(self.bc == Boundary::Dirichlet, "eigenvectors are built for Dirichlet windows")?;
        let vecs = self
            .eigs
            .iter()
            .map(|&ev| eigenvector(pot, self.x, omega, self.window, ev))
            .collect::<Result<Vec<_>>>()?;
        self.vecs = Some(vecs);
        Ok(self)
    }

    /// CSV rows `x,j,E_j,nu_j,residual`; center and residual are blank without vectors.
    #[must_use]
    pub fn csv_rows(&self, pot: &Potential, omega: f64) -> Vec<String> {
        self.eigs
            .iter()
            .enumerate()
            .map(|(j, &ev)| match &self.vecs {
                Some(v) => {
                    let nu = self.window.site(localization_center(&v[j]));
                    let r = residual(pot, self.x, omega, self.window, ev, &v[j]);
                    format!("{},{},{},{},{:e}", self.x, j, ev, nu, r)
                }
                None => format!("{},{},{},,", self.x, j, ev),
            })
            .collect()
    }
}

/// Diagonal `V(x + nω)` over the window.
#[must_use]
pub fn site_values(pot: &Potential, x: f64, omega: f64, window: Window) -> Vec<f64> {
    (window.lo..=window.hi).map(|n| pot.at_phase(x + n as f64 * omega)).collect()
}

/// Number of eigenvalues `< e` of the tridiagonal matrix with diagonal `d`
/// and off-diagonal `−1`.
#[must_use]
pub fn sturm_count(d: &[f64], e: f64) -> usize {
    const PIVMIN: f64 = 1e-300;
    let mut count = 0;
    let mut q = 1.0f64;
    for (i, &di) in d.iter().enumerate() {
        q = if i == 0 { di - e } else { (di - e) - 1.0 / q };
        if q.abs() < PIVMIN {
            q = -PIVMIN;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Bounds containing every eigenvalue (Gershgorin).
fn gershgorin(d: &[f64]) -> (f64, f64) {
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min) - 2.0;
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0;
    let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    (lo - pad, hi + pad)
}

#[inline]
fn resolved(lo: f64, hi: f64) -> bool {
    let mid = 0.5 * (lo + hi);
    hi - lo <= 1e-13_f64.max(4.0 * f64::EPSILON * mid.abs()) || mid <= lo || mid >= hi
}

/// Eigenvalues with indices in `k_lo..k_hi` (ascending order), by bisection.
#[must_use]
pub fn bisect_eigs(d: &[f64], k_lo: usize, k_hi: usize) -> Vec<f64> {
    let (lo, hi) = gershgorin(d);
    bisect_counted(|e| sturm_count(d, e), (lo, 0), (hi, d.len()), k_lo, k_hi)
}

/// Bisection driven by an eigenvalue counting function `count(E) = #{λ < E}`,
/// given its values at the ends of the search interval.
fn bisect_counted<F: Fn(f64) -> usize>(count: F, lo: (f64, usize), hi: (f64, usize), k_lo: usize, k_hi: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut stack = vec![(lo.0, hi.0, lo.1, hi.1)];
    // depth-first, right half pushed first so output comes out ascending
    while let Some((a, b, ca, cb)) = stack.pop() {
        let (ia, ib) = (ca.max(k_lo), cb.min(k_hi));
        if ia >= ib {
            continue;
        }
        let mid = 0.5 * (a + b);
        // several eigenvalues in one resolved cell: keep splitting to the ulp
        if resolved(a, b) && (ib - ia == 1 || mid <= a || mid >= b) {
            out.extend(std::iter::repeat(0.5 * (a + b)).take(ib - ia));
            continue;
        }
        let cm = count(mid).clamp(ca, cb);
        stack.push((mid, b, cm, cb));
        stack.push((a, mid, ca, cm));
    }
    out
}

/// All eigenvalues of the symmetric tridiagonal matrix (diagonal `d`, off-diagonal −1).
#[must_use]
pub fn tridiagonal_eigs(d: &[f64]) -> Vec<f64> {
    bisect_eigs(d, 0, d.len())
}

/// All eigenvalues by implicit QL with Wilkinson shifts, ascending. Absolute
/// accuracy is `O(ε‖H‖)` rather than the relative-gap resolution of
/// bisection, at a fraction of the cost; used for phase sweeps.
#[must_use]
pub fn tridiagonal_eigs_ql(orig: &[f64]) -> Vec<f64> {
    let n = orig.len();
    let mut d = orig.to_vec();
    // off-diagonal magnitudes; the sign of −1 does not affect the spectrum
    let mut e = vec![1.0f64; n];
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return tridiagonal_eigs(orig);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

/// Dirichlet spectrum of `H_window(x, ω)`.
#[must_use]
pub fn dirichlet_eigs(pot: &Potential, x: f64, omega: f64, window: Window) -> SpectrumSample {
    let d = site_values(pot, x, omega, window);
    SpectrumSample { x, window, bc: Boundary::Dirichlet, eigs: tridiagonal_eigs(&d), vecs: None }
}

/// `‖(H − E)ψ‖` on the window.
#[must_use]
pub fn residual(pot: &Potential, x: f64, omega: f64, window: Window, ev: f64, psi: &[f64]) -> f64 {
    let d = site_values(pot, x, omega, window);
    residual_tridiag(&d, ev, psi)
}

fn residual_tridiag(d: &[f64], ev: f64, psi: &[f64]) -> f64 {
    let n = d.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut r = (d[i] - ev) * psi[i];
        if i > 0 {
            r -= psi[i - 1];
        }
        if i + 1 < n {
            r -= psi[i + 1];
        }
        s += r * r;
    }
    s.sqrt()
}

/// Residual tolerance `1e−9·(‖V‖∞ + |E| + 2)`.
#[must_use]
pub fn residual_bound(pot: &Potential, ev: f64) -> f64 {
    1e-9 * (pot.sup_norm() + ev.abs() + 2.0)
}

/// Normalized Dirichlet eigenvector for the eigenvalue `ev`.
///
/// Built from the forward ratios `f_{[lo,n]}/f_{[lo,n−1]}` and the matching
/// backward ratios, joined at the site where the two recursions agree best;
/// inverse iteration is the fallback when this leaves a large residual.
pub fn eigenvector(pot: &Potential, x: f64, omega: f64, window: Window, ev: f64) -> Result<Vec<f64>> {
    let d = site_values(pot, x, omega, window);
    let width = 1e-13_f64.max(4.0 * f64::EPSILON * ev.abs());
    if sturm_count(&d, ev + width) - sturm_count(&d, ev - width) >= 2 {
        return Err(Error::Degenerate(ev));
    }
    vector_for(pot, &d, ev)
}

/// Eigenvector without the degeneracy guard. Inside a numerically degenerate
/// pair it returns some unit vector of the pair's span with a small residual.
pub fn eigenvector_relaxed(pot: &Potential, x: f64, omega: f64, window: Window, ev: f64) -> Result<Vec<f64>> {
    vector_for(pot, &site_values(pot, x, omega, window), ev)
}

fn vector_for(pot: &Potential, d: &[f64], ev: f64) -> Result<Vec<f64>> {
    let bound = residual_bound(pot, ev);
    if let Some(v) = twisted_vector(d, ev) {
        if residual_tridiag(d, ev, &v) <= bound {
            return Ok(v);
        }
    }
    let v = inverse_iteration(d, ev);
    let r = residual_tridiag(d, ev, &v);
    if r <= bound {
        Ok(v)
    } else {
        Err(Error::CrossCheck(format!("eigenvector residual {r:e} exceeds {bound:e}")))
    }
}

/// Forward and backward pivots of `T − ev` and the twist index minimizing
/// `|γ_c|`, where `1/γ_c` is the diagonal resolvent entry at `c`.
fn twisted_factors(d: &[f64], ev: f64) -> (Vec<f64>, Vec<f64>, usize) {
    let n = d.len();
    let guard = |q: f64| if q == 0.0 { -1e-300 } else { q };
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for i in 0..n {
        s[i] = guard(if i == 0 { d[0] - ev } else { d[i] - ev - 1.0 / s[i - 1] });
    }
    for i in (0..n).rev() {
        t[i] = guard(if i == n - 1 { d[i] - ev } else { d[i] - ev - 1.0 / t[i + 1] });
    }
    let gamma = |c: usize| {
        let mut g = d[c] - ev;
        if c > 0 {
            g -= 1.0 / s[c - 1];
        }
        if c + 1 < n {
            g -= 1.0 / t[c + 1];
        }
        g.abs()
    };
    let c = (0..n).min_by(|&a, &b| gamma(a).total_cmp(&gamma(b))).unwrap_or(0);
    (s, t, c)
}

/// Index where the eigenvector for `ev` peaks, in `O(N)` without forming it.
#[must_use]
pub fn twisted_center(d: &[f64], ev: f64) -> usize {
    twisted_factors(d, ev).2
}

fn twisted_vector(d: &[f64], ev: f64) -> Option<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return None;
    }
    let (s, t, c) = twisted_factors(d, ev);
    let mut v = vec![0.0; n];
    v[c] = 1.0;
    for i in (0..c).rev() {
        v[i] = v[i + 1] / s[i];
    }
    for i in c + 1..n {
        v[i] = v[i - 1] / t[i];
    }
    normalize(&mut v).then_some(v)
}

fn normalize(v: &mut [f64]) -> bool {
    let m = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if m == 0.0 || !m.is_finite() {
        return false;
    }
    let norm = v.iter().map(|x| (x / m).powi(2)).sum::<f64>().sqrt() * m;
    for x in v.iter_mut() {
        *x /= norm;
    }
    // fix the sign: first entry of largest modulus is positive
    let imax = localization_center(v);
    if v[imax] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    true
}

/// Solves `(T − σ)y = b` for tridiagonal `T` (off-diagonal −1) by LU with partial pivoting.
fn tridiag_solve(d: &[f64], sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = d.len();
    // row i holds columns i, i+1, i+2 after elimination
    let mut u0: Vec<f64> = d.iter().map(|di| di - sigma).collect();
    let mut u1 = vec![-1.0f64; n];
    let mut u2 = vec![0.0f64; n];
    let mut y = b.to_vec();
    for i in 0..n.saturating_sub(1) {
        let below = -1.0f64;
        let (mut r0, mut r1, mut r2) = (u0[i], u1[i], 0.0);
        let (mut s0, mut s1, mut s2) = (below, u0[i + 1], if i + 2 < n { -1.0 } else { 0.0 });
        if s0.abs() > r0.abs() {
            std::mem::swap(&mut r0, &mut s0);
            std::mem::swap(&mut r1, &mut s1);
            std::mem::swap(&mut r2, &mut s2);
            y.swap(i, i + 1);
        }
        if r0 == 0.0 {
            r0 = 1e-300;
        }
        let l = s0 / r0;
        u0[i] = r0;
        u1[i] = r1;
        u2[i] = r2;
        u0[i + 1] = s1 - l * r1;
        u1[i + 1] = s2 - l * r2;
        y[i + 1] -= l * y[i];
    }
    if u0[n - 1] == 0.0 {
        u0[n - 1] = 1e-300;
    }
    for i in (0..n).rev() {
        let mut acc = y[i];
        if i + 1 < n {
            acc -= u1[i] * y[i + 1];
        }
        if i + 2 < n {
            acc -= u2[i] * y[i + 2];
        }
        y[i] = acc / u0[i];
    }
    y
}

fn inverse_iteration(d: &[f64], ev: f64) -> Vec<f64> {
    let n = d.len();
    let sigma = ev + 1e-14 * (1.0 + ev.abs());
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    normalize(&mut v);
    for _ in 0..4 {
        let mut w = tridiag_solve(d, sigma, &v);
        if !normalize(&mut w) {
            break;
        }
        v = w;
    }
    v
}

/// Index of the entry of largest modulus (smallest index on ties).
#[must_use]
pub fn localization_center(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Least-squares slope of `log|ψ(n)|` against `|n − center|` over entries
/// above 1e−14, and the largest deviation from the fitted line.
#[must_use]
pub fn decay_profile(v: &[f64], center: usize) -> (f64, f64) {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, x) in v.iter().enumerate() {
        if x.abs() > 1e-14 {
            xs.push((i as f64 - center as f64).abs());
            ys.push(x.abs().ln());
        }
    }
    let (slope, icpt, _) = crate::util::linear_fit(&xs, &ys);
    let dev = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - icpt).abs()).fold(0.0, f64::max);
    (slope, dev)
}

/// Number of eigenvalues `< e` of the ring with diagonal `d` (sites `1..N`),
/// off-diagonal −1 and corner coupling `∓1`.
///
/// Sylvester inertia with site 1 as the border: the count for the path on
/// sites `2..N` plus one if the Schur complement of site 1 is negative.
#[must_use]
pub fn ring_count(d: &[f64], sign: Sign, e: f64) -> usize {
    const PIVMIN: f64 = 1e-300;
    let n = d.len();
    if n == 1 {
        return usize::from(d[0] - e < 0.0);
    }
    let corner = match sign {
        Sign::Periodic => -1.0,
        Sign::Antiperiodic => 1.0,
    };
    let mut count = 0;
    let mut schur = d[0] - e;
    // LDLᵀ of the path; w = L⁻¹b with b the coupling of site 1 to the path
    let mut q = 1.0f64;
    let mut w = 0.0f64;
    for i in 1..n {
        let bi = match (i == 1, i == n - 1) {
            (true, true) => -1.0 + corner,
            (true, false) => -1.0,
            (false, true) => corner,
            (false, false) => 0.0,
        };
        if i == 1 {
            q = d[i] - e;
            w = bi;
        } else {
            w = bi + w / q;
            q = (d[i] - e) - 1.0 / q;
        }
        if q.abs() < PIVMIN {
            q = -PIVMIN;
        }
        if q < 0.0 {
            count += 1;
        }
        schur -= w * (w / q);
    }
    if schur < 0.0 || schur.is_nan() {
        count += 1;
    }
    count
}

/// Periodic (`+`) or antiperiodic (`−`) eigenvalues in `[e_lo, e_hi]` on the
/// ring `[1, N]`, without the dense cross-check.
#[must_use]
pub fn periodic_eigs_in(pot: &Potential, x: f64, omega: f64, n: i64, sign: Sign, e_lo: f64, e_hi: f64) -> Vec<f64> {
    let d = site_values(pot, x, omega, Window::new(1, n));
    let (glo, ghi) = gershgorin(&d);
    let (e_lo, e_hi) = (e_lo.max(glo), e_hi.min(ghi));
    if e_lo > e_hi {
        return Vec::new();
    }
    let count = |e: f64| ring_count(&d, sign, e);
    let (c_lo, c_hi) = (count(e_lo), count(e_hi));
    bisect_counted(count, (e_lo, c_lo), (e_hi, c_hi), c_lo, c_hi)
}

/// All periodic or antiperiodic eigenvalues without the dense cross-check.
#[must_use]
pub fn periodic_eigs_fast(pot: &Potential, x: f64, omega: f64, n: i64, sign: Sign) -> Vec<f64> {
    let d = site_values(pot, x, omega, Window::new(1, n));
    let (glo, ghi) = gershgorin(&d);
    bisect_counted(|e| ring_count(&d, sign, e), (glo, 0), (ghi, d.len()), 0, d.len())
}

/// Eigenvalues of the ring `[1, N]` with corner couplings `∓1`, i.e. the roots
/// of `g^{(±)} = h_N ∓ 2`, cross-checked against a dense Jacobi solve.
pub fn periodic_eigs(pot: &Potential, x: f64, omega: f64, n: i64, sign: Sign) -> Result<SpectrumSample> {
    precondition(n >= 2, "periodic_eigs needs N ≥ 2")?;
    let eigs = periodic_eigs_fast(pot, x, omega, n, sign);
    let dense = jacobi_eigenvalues(ring_matrix(pot, x, omega, n, sign));
    if eigs.len() != dense.len() {
        return Err(Error::CrossCheck(format!("{} roots vs {} dense eigenvalues", eigs.len(), dense.len())));
    }
    for (a, b) in eigs.iter().zip(&dense) {
        if (a - b).abs() > 1e-7 {
            return Err(Error::CrossCheck(format!("periodic root {a} vs dense {b}")));
        }
    }
    Ok(SpectrumSample { x, window: Window::new(1, n), bc: sign.into(), eigs, vecs: None })
}

/// Dense ring matrix `H^{(±P)}_N(x, ω)`.
#[must_use]
pub fn ring_matrix(pot: &Potential, x: f64, omega: f64, n: i64, sign: Sign) -> Vec<Vec<f64>> {
    let d = site_values(pot, x, omega, Window::new(1, n));
    let n = d.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = d[i];
        if i + 1 < n {
            a[i][i + 1] = -1.0;
            a[i + 1][i] = -1.0;
        }
    }
    let corner = match sign {
        Sign::Periodic => -1.0,
        Sign::Antiperiodic => 1.0,
    };
    if n >= 2 {
        a[0][n - 1] += corner;
        a[n - 1][0] += corner;
    }
    a
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations, ascending.
#[must_use]
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag.max(1.0) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}
