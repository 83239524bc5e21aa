//! Transfer cocycle, log-scaled monodromies and Dirichlet determinants.
//!
//! One step is `A(w) = [[V(w) − E, −1], [1, 0]]` with `w = z·e(nω)`, and
//! `M_{[a,b]} = A_b ⋯ A_a`. Determinants `f_{[a,b]} = det(H_{[a,b]} − E)` obey
//! `f_{[a,n]} = (V_n − E) f_{[a,n−1]} − f_{[a,n−2]}` with `f_{[a,a−1]} = 1` and
//! `f_{[a,a−2]} = 0`, and
//!
//! `M_{[1,N]} = [[f_{[1,N]}, −f_{[2,N]}], [f_{[1,N−1]}, −f_{[2,N−1]}]]`.

use std::f64::consts::LN_2;
use std::fmt;
use std::ops::{Mul, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::model::{e, Potential};

/// A 2×2 complex matrix, row-major.
pub type M2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Rescale thresholds for the determinant recursion (powers of two keep it exact).
const BIG: f64 = 1.0e150;
const BIG_EXP: i32 = 498;

#[inline]
#[must_use]
pub fn mat_mul(a: &M2, b: &M2) -> M2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

#[inline]
#[must_use]
pub fn mat_det(a: &M2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

#[inline]
fn mat_scale(a: &M2, s: f64) -> M2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

/// Operator 2-norm via `σ² = (F² + √(F⁴ − 4|det|²))/2`.
#[must_use]
pub fn op_norm(a: &M2) -> f64 {
    let f2 = a.iter().flatten().map(Complex64::norm_sqr).sum::<f64>();
    let d = mat_det(a).norm();
    let disc = (f2 * f2 - 4.0 * d * d).max(0.0);
    // (F² + √disc)/2, written to avoid overflow for large entries
    (0.5 * (f2 + disc.sqrt())).sqrt()
}

/// Complex number stored as a unit phase and a natural-log magnitude.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    /// `ln|w|`, `-inf` for zero.
    pub mag: f64,
    /// `w/|w|`, zero for zero.
    pub phase: Complex64,
}

impl fmt::Debug for LogComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({})·({})", self.mag, self.phase)
    }
}

impl LogComplex {
    pub const ZERO: Self = Self { mag: f64::NEG_INFINITY, phase: ZERO };
    pub const ONE: Self = Self { mag: 0.0, phase: ONE };

    #[must_use]
    pub fn from_complex(w: Complex64) -> Self {
        Self::from_scaled(w, 0.0)
    }

    #[must_use]
    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// Represents `w·e^{log_scale}`.
    #[must_use]
    pub fn from_scaled(w: Complex64, log_scale: f64) -> Self {
        let r = w.norm();
        if r == 0.0 || !r.is_finite() {
            if r == 0.0 {
                return Self::ZERO;
            }
            // overflowed modulus: rescale before measuring
            let m = w.re.abs().max(w.im.abs());
            let v = w / m;
            return Self { mag: log_scale + m.ln() + v.norm().ln(), phase: v / v.norm() };
        }
        Self { mag: log_scale + r.ln(), phase: w / r }
    }

    #[must_use]
    pub fn is_zero(&self) -> bool {
        self.mag == f64::NEG_INFINITY
    }

    /// Plain complex value (may overflow to infinity).
    #[must_use]
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            ZERO
        } else {
            self.phase * self.mag.exp()
        }
    }

    /// `|w|`, possibly infinite.
    #[must_use]
    pub fn abs(&self) -> f64 {
        self.mag.exp()
    }

    /// Real part of the value, for values known to be real.
    #[must_use]
    pub fn re(&self) -> f64 {
        self.to_complex().re
    }

    /// Sign of the real part (0 for zero).
    #[must_use]
    pub fn signum_re(&self) -> f64 {
        if self.is_zero() || self.phase.re == 0.0 {
            0.0
        } else {
            self.phase.re.signum()
        }
    }

    #[must_use]
    pub fn inv(&self) -> Self {
        Self { mag: -self.mag, phase: self.phase.conj() }
    }

    /// `self + other`, computed at the scale of the larger term.
    #[must_use]
    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let m = self.mag.max(other.mag);
        let v = self.phase * (self.mag - m).exp() + other.phase * (other.mag - m).exp();
        Self::from_scaled(v, m)
    }

    #[must_use]
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&-*other)
    }

    /// `|self − other| / max(|self|, |other|, floor)`.
    #[must_use]
    pub fn rel_diff(&self, other: &Self, floor: f64) -> f64 {
        let m = self.mag.max(other.mag).max(floor.ln());
        let a = if self.is_zero() { ZERO } else { self.phase * (self.mag - m).exp() };
        let b = if other.is_zero() { ZERO } else { other.phase * (other.mag - m).exp() };
        (a - b).norm()
    }
}

impl Mul for LogComplex {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        let p = self.phase * rhs.phase;
        Self { mag: self.mag + rhs.mag, phase: p / p.norm() }
    }
}

impl Neg for LogComplex {
    type Output = Self;
    fn neg(self) -> Self {
        Self { mag: self.mag, phase: -self.phase }
    }
}

/// `e^{exp2·ln 2}·u` with `1 ≤ ‖u‖ < 2`, plus the determinant tracked
/// through the factorization that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMatrix2 {
    u: M2,
    exp2: i64,
    det: LogComplex,
}

impl ScaledMatrix2 {
    #[must_use]
    pub fn identity() -> Self {
        Self { u: [[ONE, ZERO], [ZERO, ONE]], exp2: 0, det: LogComplex::ONE }
    }

    /// Wraps a plain matrix; its determinant is computed from the entries.
    #[must_use]
    pub fn from_matrix(m: &M2) -> Self {
        let det = LogComplex::from_complex(mat_det(m));
        Self::normalized(*m, 0, det)
    }

    fn normalized(u: M2, exp2: i64, det: LogComplex) -> Self {
        let n = op_norm(&u);
        if n == 0.0 || !n.is_finite() {
            return Self { u, exp2, det };
        }
        let k = n.log2().floor() as i32;
        let mut u = mat_scale(&u, 2f64.powi(-k));
        let mut exp2 = exp2 + i64::from(k);
        // guard the [1, 2) window against log2 rounding
        let n2 = op_norm(&u);
        if n2 >= 2.0 {
            u = mat_scale(&u, 0.5);
            exp2 += 1;
        } else if n2 < 1.0 {
            u = mat_scale(&u, 2.0);
            exp2 -= 1;
        }
        Self { u, exp2, det }
    }

    /// Unit-scale factor with `1 ≤ ‖u‖ < 2`.
    #[must_use]
    pub fn u(&self) -> &M2 {
        &self.u
    }

    /// Natural-log scale factor.
    #[must_use]
    pub fn logscale(&self) -> f64 {
        self.exp2 as f64 * LN_2
    }

    /// Scale factor as a power of two.
    #[must_use]
    pub fn exp2(&self) -> i64 {
        self.exp2
    }

    /// `ln‖M‖`.
    #[must_use]
    pub fn log_norm(&self) -> f64 {
        self.logscale() + op_norm(&self.u).ln()
    }

    /// `ln‖M‖` as an exact power-of-two part and a remainder in [0, ln 2).
    #[must_use]
    pub fn log_norm_parts(&self) -> (i64, f64) {
        (self.exp2, op_norm(&self.u).ln())
    }

    /// Determinant tracked multiplicatively through every factorization step.
    #[must_use]
    pub fn det(&self) -> LogComplex {
        self.det
    }

    /// Determinant recomputed from the stored entries; loses all accuracy once
    /// the product is strongly hyperbolic.
    #[must_use]
    pub fn det_from_entries(&self) -> LogComplex {
        LogComplex::from_scaled(mat_det(&self.u), 2.0 * self.logscale())
    }

    /// Entry `(i, j)` of the represented matrix.
    #[must_use]
    pub fn entry(&self, i: usize, j: usize) -> LogComplex {
        LogComplex::from_scaled(self.u[i][j], self.logscale())
    }

    #[must_use]
    pub fn trace(&self) -> LogComplex {
        LogComplex::from_scaled(self.u[0][0] + self.u[1][1], self.logscale())
    }

    /// `self · rhs`.
    #[must_use]
    pub fn mul(&self, rhs: &Self) -> Self {
        Self::normalized(mat_mul(&self.u, &rhs.u), self.exp2 + rhs.exp2, self.det * rhs.det)
    }

    /// Represented matrix as plain complex entries (may overflow).
    #[must_use]
    pub fn to_matrix(&self) -> M2 {
        mat_scale(&self.u, self.logscale().exp())
    }
}

/// Checks `|z|` against the potential's annulus once for a whole window.
pub(crate) fn check_radius(pot: &Potential, z: Complex64) -> Result<()> {
    let r = z.norm();
    if r > 1.0 - pot.rho0() && r < 1.0 + pot.rho0() {
        Ok(())
    } else {
        Err(Error::OutOfAnnulus { z, rho0: pot.rho0() })
    }
}

/// `z·e(nω)`.
#[inline]
#[must_use]
pub fn shifted(z: Complex64, omega: f64, n: i64) -> Complex64 {
    z * e(n as f64 * omega)
}

/// `V(z e(nω)) − E`.
#[inline]
fn diag(pot: &Potential, z: Complex64, omega: f64, e_val: Complex64, n: i64) -> Complex64 {
    pot.eval_unchecked(shifted(z, omega, n)) - e_val
}

/// One transfer step `[[V(z e(nω)) − E, −1], [1, 0]]`.
pub fn transfer_step(pot: &Potential, z: Complex64, omega: f64, e_val: Complex64, n: i64) -> Result<M2> {
    check_radius(pot, z)?;
    Ok([[diag(pot, z, omega, e_val, n), -ONE], [ONE, ZERO]])
}

/// `M_{[a,b]} = A_b ⋯ A_a`, accumulated as `Q·R` with `Q` unitary and `R`
/// upper triangular so the contracted direction and the determinant stay
/// accurate however hyperbolic the product becomes.
pub fn monodromy(
    pot: &Potential,
    a: i64,
    b: i64,
    z: Complex64,
    omega: f64,
    e_val: Complex64,
) -> Result<ScaledMatrix2> {
    precondition(a <= b + 1, format!("monodromy needs a ≤ b (a={a}, b={b})"))?;
    check_radius(pot, z)?;
    Ok(monodromy_unchecked(pot, a, b, z, omega, e_val))
}

pub(crate) fn monodromy_unchecked(
    pot: &Potential,
    a: i64,
    b: i64,
    z: Complex64,
    omega: f64,
    e_val: Complex64,
) -> ScaledMatrix2 {
    let mut q: M2 = [[ONE, ZERO], [ZERO, ONE]];
    // R = 2^s·[[alpha, beta], [0, delta·2^{ds}/2^s]]
    let (mut alpha, mut beta, mut s) = (ONE, ZERO, 0i64);
    let (mut delta, mut ds) = (ONE, 0i64);
    let (mut detq_acc, mut det_exp) = (ONE, 0i64);
    for n in a..=b {
        let d = diag(pot, z, omega, e_val, n);
        // P = A·Q
        let p = [[d * q[0][0] - q[1][0], d * q[0][1] - q[1][1]], [q[0][0], q[0][1]]];
        let rho = (p[0][0].norm_sqr() + p[1][0].norm_sqr()).sqrt();
        let c0 = p[0][0] / rho;
        let c1 = p[1][0] / rho;
        let r12 = c0.conj() * p[0][1] + c1.conj() * p[1][1];
        let r22 = c0 * p[1][1] - c1 * p[0][1];
        // det P = rho·r22 exactly in exact arithmetic; track it as the det increment
        detq_acc *= rho * r22;
        q = [[c0, -c1.conj()], [c1, c0.conj()]];
        let delta_rel = delta * 2f64.powi((ds - s).clamp(-1100, 1100) as i32);
        beta = rho * beta + r12 * delta_rel;
        alpha *= rho;
        delta *= r22;
        // renormalize the three running quantities by powers of two
        let top = alpha.norm().max(beta.norm());
        if !(0.5..=2.0).contains(&top) {
            let k = top.log2().floor() as i32;
            let f = 2f64.powi(-k);
            alpha *= f;
            beta *= f;
            s += i64::from(k);
        }
        let dn = delta.norm();
        if dn != 0.0 && !(1e-100..=1e100).contains(&dn) {
            let k = dn.log2().floor() as i32;
            delta *= 2f64.powi(-k);
            ds += i64::from(k);
        }
        let an = detq_acc.norm();
        if !(1e-100..=1e100).contains(&an) {
            let k = an.log2().floor() as i32;
            detq_acc *= 2f64.powi(-k);
            det_exp += i64::from(k);
        }
    }
    let delta_rel = delta * 2f64.powi((ds - s).clamp(-1100, 1100) as i32);
    let r: M2 = [[alpha, beta], [ZERO, delta_rel]];
    let m = mat_mul(&q, &r);
    let det = LogComplex::from_scaled(detq_acc * mat_det(&q), det_exp as f64 * LN_2);
    ScaledMatrix2::normalized(m, s, det)
}

/// Log-scaled pair `(f_{[a,n]}, f_{[a,n−1]})` carried by the recursion.
#[derive(Clone, Copy, Debug)]
struct DetState {
    f: Complex64,
    f_prev: Complex64,
    exp2: i64,
}

impl DetState {
    fn start() -> Self {
        Self { f: ONE, f_prev: ZERO, exp2: 0 }
    }

    #[inline]
    fn step(&mut self, d: Complex64) {
        let next = d * self.f - self.f_prev;
        self.f_prev = self.f;
        self.f = next;
        let m = self.f.norm_sqr().max(self.f_prev.norm_sqr());
        if m > BIG * BIG {
            let s = 2f64.powi(-BIG_EXP);
            self.f *= s;
            self.f_prev *= s;
            self.exp2 += i64::from(BIG_EXP);
        } else if m < 1.0 / (BIG * BIG) && m > 0.0 {
            let s = 2f64.powi(BIG_EXP);
            self.f *= s;
            self.f_prev *= s;
            self.exp2 -= i64::from(BIG_EXP);
        }
    }

    fn values(&self) -> (LogComplex, LogComplex) {
        let ls = self.exp2 as f64 * LN_2;
        (LogComplex::from_scaled(self.f, ls), LogComplex::from_scaled(self.f_prev, ls))
    }
}

/// `(f_{[a,b]}, f_{[a,b−1]})`.
fn det_pair(pot: &Potential, a: i64, b: i64, z: Complex64, omega: f64, e_val: Complex64) -> (LogComplex, LogComplex) {
    if b < a - 1 {
        // f_{[a,a−2]} = 0, and its predecessor is never needed
        return (LogComplex::ZERO, LogComplex::ZERO);
    }
    let mut st = DetState::start();
    for n in a..=b {
        st.step(diag(pot, z, omega, e_val, n));
    }
    if b == a - 1 {
        return (LogComplex::ONE, LogComplex::ZERO);
    }
    st.values()
}

/// `f_{[a,b]}(z, ω, E)`; `b = a − 1` gives 1 and `b = a − 2` gives 0.
pub fn dirichlet_det(pot: &Potential, a: i64, b: i64, z: Complex64, omega: f64, e_val: Complex64) -> Result<LogComplex> {
    precondition(b >= a - 2, format!("dirichlet_det needs b ≥ a − 2 (a={a}, b={b})"))?;
    check_radius(pot, z)?;
    Ok(det_pair(pot, a, b, z, omega, e_val).0)
}

/// `f_{[a,b]}` together with its logarithmic derivative in `z`.
pub fn dirichlet_det_dz(
    pot: &Potential,
    a: i64,
    b: i64,
    z: Complex64,
    omega: f64,
    e_val: Complex64,
) -> Result<(LogComplex, Complex64)> {
    check_radius(pot, z)?;
    Ok(dirichlet_det_dz_unchecked(pot, a, b, z, omega, e_val))
}

/// `dirichlet_det_dz` without the annulus check; trigonometric polynomials
/// extend to all of `ℂ∖{0}`.
pub(crate) fn dirichlet_det_dz_unchecked(
    pot: &Potential,
    a: i64,
    b: i64,
    z: Complex64,
    omega: f64,
    e_val: Complex64,
) -> (LogComplex, Complex64) {
    if b < a {
        let v = if b == a - 1 { LogComplex::ONE } else { LogComplex::ZERO };
        return (v, ZERO);
    }
    // (f, f_prev, g, g_prev) with g = ∂f/∂z, sharing one scale
    let (mut f, mut fp, mut g, mut gp) = (ONE, ZERO, ZERO, ZERO);
    let mut exp2 = 0i64;
    for n in a..=b {
        let w0 = e(n as f64 * omega);
        let (v, dv) = pot.eval_with_derivative(z * w0);
        let d = v - e_val;
        let dd = dv * w0;
        let f_next = d * f - fp;
        let g_next = dd * f + d * g - gp;
        fp = f;
        f = f_next;
        gp = g;
        g = g_next;
        let m = f.norm_sqr().max(fp.norm_sqr()).max(g.norm_sqr()).max(gp.norm_sqr());
        if m > BIG * BIG {
            let s = 2f64.powi(-BIG_EXP);
            (f, fp, g, gp) = (f * s, fp * s, g * s, gp * s);
            exp2 += i64::from(BIG_EXP);
        }
    }
    (LogComplex::from_scaled(f, exp2 as f64 * LN_2), g / f)
}

/// `f_{[a,b]}` at phase `e(x)` as a function of complex `E`, with `∂_E log f`.
pub fn dirichlet_det_de(pot: &Potential, a: i64, b: i64, x: f64, omega: f64, e_val: Complex64) -> (LogComplex, Complex64) {
    if b < a {
        let v = if b == a - 1 { LogComplex::ONE } else { LogComplex::ZERO };
        return (v, ZERO);
    }
    let (mut f, mut fp, mut g, mut gp) = (ONE, ZERO, ZERO, ZERO);
    let mut exp2 = 0i64;
    for n in a..=b {
        let d = Complex64::new(pot.at_phase(x + n as f64 * omega), 0.0) - e_val;
        let f_next = d * f - fp;
        let g_next = d * g - f - gp;
        fp = f;
        f = f_next;
        gp = g;
        g = g_next;
        let m = f.norm_sqr().max(fp.norm_sqr()).max(g.norm_sqr()).max(gp.norm_sqr());
        if m > BIG * BIG {
            let s = 2f64.powi(-BIG_EXP);
            (f, fp, g, gp) = (f * s, fp * s, g * s, gp * s);
            exp2 += i64::from(BIG_EXP);
        }
    }
    (LogComplex::from_scaled(f, exp2 as f64 * LN_2), g / f)
}

/// `(f_{[1,N]}, f_{[1,N−1]}, f_{[2,N]}, f_{[2,N−1]})`.
pub fn entry_quadruple(
    pot: &Potential,
    z: Complex64,
    omega: f64,
    e_val: Complex64,
    n: i64,
) -> Result<[LogComplex; 4]> {
    precondition(n >= 1, "entry_quadruple needs N ≥ 1")?;
    check_radius(pot, z)?;
    let (f1n, f1m) = det_pair(pot, 1, n, z, omega, e_val);
    let (f2n, f2m) = det_pair(pot, 2, n, z, omega, e_val);
    let f2m = if n == 1 { LogComplex::ZERO } else { f2m };
    let f2n = if n == 1 { LogComplex::ONE } else { f2n };
    Ok([f1n, f1m, f2n, f2m])
}

/// `−f_{[1,N]} f_{[2,N−1]} + f_{[1,N−1]} f_{[2,N]}`, which equals `det M_N = 1`.
#[must_use]
pub fn quadruple_det(q: &[LogComplex; 4]) -> LogComplex {
    (q[1] * q[2]).sub(&(q[0] * q[3]))
}

/// Hill's discriminant `h_N = tr M_N = f_{[1,N]} − f_{[2,N−1]}`, computed
/// through both the monodromy and the determinants.
pub fn hill_trace(pot: &Potential, z: Complex64, omega: f64, e_val: Complex64, n: i64) -> Result<LogComplex> {
    let q = entry_quadruple(pot, z, omega, e_val, n)?;
    let by_det = q[0].sub(&q[3]);
    let m = monodromy_unchecked(pot, 1, n, z, omega, e_val);
    let by_trace = m.trace();
    let scale = m.log_norm().exp().max(1.0);
    let diff = by_det.rel_diff(&by_trace, scale);
    if diff > 1e-8 {
        return Err(Error::Mismatch { what: "hill_trace", lhs: by_det.mag, rhs: by_trace.mag });
    }
    Ok(by_det)
}

/// Boundary condition sign: `Periodic` is `ψ(n + N) = ψ(n)`, `Antiperiodic` flips the sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Periodic,
    Antiperiodic,
}

impl Sign {
    /// The constant in `g^{(±)} = h_N ∓ 2`.
    #[must_use]
    pub fn offset(self) -> f64 {
        match self {
            Sign::Periodic => 2.0,
            Sign::Antiperiodic => -2.0,
        }
    }
}

/// `g_N^{(±)} = det(H^{(±P)}_N − E)` by the determinant route, with the
/// log-magnitude of its largest term, the scale of its rounding error.
#[cfg(test)]
pub(crate) fn periodic_det_scaled(pot: &Potential, x: f64, omega: f64, e_val: f64, n: i64, sign: Sign) -> (LogComplex, f64) {
    let z = e(x);
    let ev = Complex64::new(e_val, 0.0);
    let (f1n, _) = det_pair(pot, 1, n, z, omega, ev);
    let (_, f2m) = if n >= 2 { det_pair(pot, 2, n, z, omega, ev) } else { (LogComplex::ONE, LogComplex::ZERO) };
    let g = f1n.sub(&f2m).sub(&LogComplex::from_real(sign.offset()));
    (g, f1n.mag.max(f2m.mag).max(LN_2))
}

/// `g_N^{(±)}(z, ω, E) = h_N ∓ 2`.
pub fn periodic_det(pot: &Potential, z: Complex64, omega: f64, e_val: Complex64, n: i64, sign: Sign) -> Result<LogComplex> {
    let h = hill_trace(pot, z, omega, e_val, n)?;
    Ok(h.sub(&LogComplex::from_real(sign.offset())))
}

/// `(H_{[lo,hi]}(x, ω) − E)^{-1}(k, m) = f_{[lo,k−1]} f_{[m+1,hi]} / f_{[lo,hi]}` for `k ≤ m`.
pub fn green_entry_window(
    pot: &Potential,
    x: f64,
    omega: f64,
    e_val: f64,
    lo: i64,
    hi: i64,
    k: i64,
    m: i64,
) -> Result<f64> {
    let (k, m) = if k <= m { (k, m) } else { (m, k) };
    precondition(lo <= k && m <= hi, format!("green_entry needs {lo} ≤ k ≤ m ≤ {hi}"))?;
    let z = e(x);
    let ev = Complex64::new(e_val, 0.0);
    let (fn_, fn1) = det_pair(pot, lo, hi, z, omega, ev);
    let fk = det_pair(pot, lo, k - 1, z, omega, ev).0;
    let fm = det_pair(pot, m + 1, hi, z, omega, ev).0;
    // f_{[lo,hi]} is small only relative to its neighbours near an eigenvalue
    let floor = fn1.mag.max(det_pair(pot, lo + 1, hi, z, omega, ev).0.mag).max(0.0);
    if fn_.is_zero() || fn_.mag < floor + (1e-12f64).ln() {
        return Err(Error::Singular(fn_.abs()));
    }
    Ok((fk * fm * fn_.inv()).re())
}

/// Green function of `H_{[1,N]}` by Cramer's rule.
pub fn green_entry(pot: &Potential, x: f64, omega: f64, e_val: f64, n: i64, k: i64, m: i64) -> Result<f64> {
    green_entry_window(pot, x, omega, e_val, 1, n, k, m)
}
