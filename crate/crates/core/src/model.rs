//! Trigonometric-polynomial potentials on an annulus and frequency utilities.
//!
//! The phase variable is `x ∈ T = R/Z` and `e(x) = exp(2πix)`. A potential is
//! `V(z) = Σ_{|k|≤k0} a_k z^k` with `a_{-k} = conj(a_k)`, so that `V(e(x))` is
//! real. The almost Mathieu operator uses `a_{±1} = λ`, i.e. `V(e(x)) = 2λcos(2πx)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{dist_to_int, frac};

/// `e(t) = exp(2πit)` for real `t`.
#[inline]
#[must_use]
pub fn e(t: f64) -> Complex64 {
    let (s, c) = (TAU * frac(t)).sin_cos();
    Complex64::new(c, s)
}

/// `e(x + iy) = exp(-2πy)·e(x)`.
#[inline]
#[must_use]
pub fn e_complex(x: f64, y: f64) -> Complex64 {
    e(x) * (-TAU * y).exp()
}

/// Hermitian Fourier coefficients `a_k`, `|k| ≤ k0`, analytic on `1 - ρ0 < |z| < 1 + ρ0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialRepr", into = "PotentialRepr")]
pub struct Potential {
    /// `pos[k] = a_k` for `k = 0..=k0`; negative modes are conjugates.
    pos: Vec<Complex64>,
    rho0: f64,
}

#[derive(Serialize, Deserialize)]
struct PotentialRepr {
    coeffs: Vec<(i32, f64, f64)>,
    rho0: f64,
}

impl TryFrom<PotentialRepr> for Potential {
    type Error = Error;
    fn try_from(r: PotentialRepr) -> Result<Self> {
        let coeffs: Vec<(i32, Complex64)> =
            r.coeffs.into_iter().map(|(k, re, im)| (k, Complex64::new(re, im))).collect();
        Potential::new(&coeffs, r.rho0)
    }
}

impl From<Potential> for PotentialRepr {
    fn from(p: Potential) -> Self {
        let k0 = p.degree() as i32;
        let coeffs = (-k0..=k0)
            .map(|k| {
                let a = p.coeff(k);
                (k, a.re, a.im)
            })
            .filter(|&(k, re, im)| k == 0 || re != 0.0 || im != 0.0)
            .collect();
        PotentialRepr { coeffs, rho0: p.rho0 }
    }
}

impl Potential {
    /// Builds a potential from `(k, a_k)` pairs. Missing negative modes are
    /// filled in by conjugation; supplied ones must be Hermitian to 1e-14.
    pub fn new(coeffs: &[(i32, Complex64)], rho0: f64) -> Result<Self> {
        if !(rho0 > 0.0 && rho0 < 1.0) {
            return Err(Error::Precondition(format!("rho0 = {rho0} must lie in (0, 1)")));
        }
        let k0 = coeffs.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut pos = vec![Complex64::new(0.0, 0.0); k0 + 1];
        let mut neg = vec![None::<Complex64>; k0 + 1];
        for &(k, a) in coeffs {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::Precondition(format!("coefficient a_{k} is not finite")));
            }
            if k >= 0 {
                pos[k as usize] += a;
            } else {
                let slot = &mut neg[k.unsigned_abs() as usize];
                *slot = Some(slot.unwrap_or_default() + a);
            }
        }
        let scale: f64 = 1.0 + pos.iter().map(|a| a.norm()).sum::<f64>();
        if pos[0].im.abs() > 1e-14 * scale {
            return Err(Error::Precondition("a_0 must be real".into()));
        }
        pos[0].im = 0.0;
        for (k, slot) in neg.iter().enumerate().skip(1) {
            match slot {
                Some(b) if (b - pos[k].conj()).norm() > 1e-14 * scale => {
                    if pos[k] == Complex64::default() && coeffs.iter().all(|&(j, _)| j != k as i32) {
                        pos[k] = b.conj();
                    } else {
                        return Err(Error::Precondition(format!("a_-{k} is not conj(a_{k})")));
                    }
                }
                _ => {}
            }
        }
        while pos.len() > 1 && pos.last().is_some_and(|a| *a == Complex64::default()) {
            pos.pop();
        }
        Ok(Self { pos, rho0 })
    }

    /// Almost Mathieu potential `V(e(x)) = 2λcos(2πx)`.
    #[must_use]
    pub fn amo(lambda: f64) -> Self {
        Self { pos: vec![Complex64::default(), Complex64::new(lambda, 0.0)], rho0: 0.5 }
    }

    /// Constant potential `V ≡ c`.
    #[must_use]
    pub fn constant(c: f64) -> Self {
        Self { pos: vec![Complex64::new(c, 0.0)], rho0: 0.5 }
    }

    /// Free Laplacian.
    #[must_use]
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    #[must_use]
    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    #[must_use]
    pub fn with_rho0(mut self, rho0: f64) -> Self {
        assert!(rho0 > 0.0 && rho0 < 1.0, "rho0 must lie in (0, 1)");
        self.rho0 = rho0;
        self
    }

    /// Trigonometric degree `k0`.
    #[must_use]
    pub fn degree(&self) -> usize {
        self.pos.len() - 1
    }

    /// `a_k` for any integer `k`.
    #[must_use]
    pub fn coeff(&self, k: i32) -> Complex64 {
        match self.pos.get(k.unsigned_abs() as usize) {
            None => Complex64::default(),
            Some(a) if k >= 0 => *a,
            Some(a) => a.conj(),
        }
    }

    /// `Σ |a_k|` over all `k`, an upper bound for `sup |V|` on the circle.
    #[must_use]
    pub fn abs_sum(&self) -> f64 {
        self.pos[0].norm() + 2.0 * self.pos[1..].iter().map(|a| a.norm()).sum::<f64>()
    }

    /// Bound for `sup_x |V(e(x))|`.
    #[must_use]
    pub fn sup_norm(&self) -> f64 {
        self.abs_sum()
    }

    /// Bound for `sup_x |d/dx V(e(x))|`.
    #[must_use]
    pub fn lipschitz(&self) -> f64 {
        2.0 * self.pos.iter().enumerate().map(|(k, a)| TAU * k as f64 * a.norm()).sum::<f64>()
    }

    /// `C(V) = sup|V'| + 1`, the phase-motion bound for eigenvalues.
    #[must_use]
    pub fn motion_constant(&self) -> f64 {
        self.lipschitz() + 1.0
    }

    #[must_use]
    pub fn is_constant(&self) -> bool {
        self.pos.len() == 1
    }

    /// `V(z)` on the annulus.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let r = z.norm();
        if !(r > 1.0 - self.rho0 && r < 1.0 + self.rho0) {
            return Err(Error::OutOfAnnulus { z, rho0: self.rho0 });
        }
        Ok(self.eval_unchecked(z))
    }

    /// `V(z)` without the annulus check (callers validate the radius once).
    #[inline]
    #[must_use]
    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        let mut acc = self.pos[0];
        if self.pos.len() > 1 {
            let zi = z.inv();
            let (mut zp, mut zm) = (z, zi);
            for a in &self.pos[1..] {
                acc += a * zp + a.conj() * zm;
                zp *= z;
                zm *= zi;
            }
        }
        acc
    }

    /// `(V(z), V'(z))` with `V'(z) = Σ k a_k z^{k−1}`.
    #[must_use]
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut v = self.pos[0];
        let mut dv = Complex64::default();
        if self.pos.len() > 1 {
            let zi = z.inv();
            // zp = z^k, zm = z^{-k}
            let (mut zp, mut zm) = (z, zi);
            for (k, a) in self.pos.iter().enumerate().skip(1) {
                let kf = k as f64;
                v += a * zp + a.conj() * zm;
                dv += (a * zp - a.conj() * zm) * kf * zi;
                zp *= z;
                zm *= zi;
            }
        }
        (v, dv)
    }

    /// `V(e(x))` for real `x`.
    #[inline]
    #[must_use]
    pub fn at_phase(&self, x: f64) -> f64 {
        let mut acc = self.pos[0].re;
        if self.pos.len() > 1 {
            let w = e(x);
            let mut wp = w;
            for a in &self.pos[1..] {
                acc += 2.0 * (a * wp).re;
                wp *= w;
            }
        }
        acc
    }

    /// `d/dx V(e(x)) = Σ a_k 2πik e(kx)`.
    #[must_use]
    pub fn deriv_phase(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        let w = e(x);
        let mut wp = w;
        for (k, a) in self.pos.iter().enumerate().skip(1) {
            // a_k·2πik·w^k + conj(...) = 2 Re(2πik a_k w^k)
            acc += 2.0 * (Complex64::new(0.0, TAU * k as f64) * a * wp).re;
            wp *= w;
        }
        acc
    }
}

/// Parses a frequency: a decimal in (0, 1) or one of the aliases `golden`, `silver`.
pub fn parse_omega(s: &str) -> Result<f64> {
    let t = s.trim();
    let w = match t.to_ascii_lowercase().as_str() {
        "golden" => golden_mean(),
        "silver" => silver_mean(),
        _ => t.parse::<f64>().map_err(|_| Error::Precondition(format!("bad frequency '{t}'")))?,
    };
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::Precondition(format!("frequency {w} not in (0, 1)")));
    }
    Ok(w)
}

/// `(√5 − 1)/2`.
#[must_use]
pub fn golden_mean() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// `√2 − 1`.
#[must_use]
pub fn silver_mean() -> f64 {
    2f64.sqrt() - 1.0
}

/// A frequency with its continued-fraction data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub omega: f64,
    /// Partial quotients `a_1, a_2, …` (the integer part `a_0 = 0` is implicit).
    pub quotients: Vec<u64>,
    /// Convergents `p_k/q_k`, `k = 0..=depth`, starting with `0/1`.
    pub convergents: Vec<(u64, u64)>,
    /// Report-only Diophantine parameters `(c, a)`.
    pub dioph: Option<(f64, f64)>,
}

impl Frequency {
    /// Convergent denominators `q_1, q_2, …`.
    #[must_use]
    pub fn denominators(&self) -> Vec<u64> {
        self.convergents.iter().skip(1).map(|c| c.1).collect()
    }
}

/// Expands the binary64 value `omega` exactly. The expansion counts as
/// terminated once a convergent lies within half an ulp of `omega`.
pub fn continued_fraction(omega: f64, depth: usize) -> Result<Frequency> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::Precondition(format!("omega = {omega} not in (0, 1)")));
    }
    if depth > 40 {
        return Err(Error::Precondition(format!("depth {depth} exceeds 40")));
    }
    let (num, den) = exact_ratio(omega)
        .ok_or_else(|| Error::Frequency(format!("omega = {omega} too small to expand")))?;
    let half_ulp = omega_ulp(omega) / 2.0;

    let mut quotients = Vec::with_capacity(depth);
    let mut convergents = vec![(0u64, 1u64)];
    // p_{-1}/q_{-1} = 1/0, p_0/q_0 = 0/1
    let (mut pm1, mut qm1, mut p0, mut q0) = (1u128, 0u128, 0u128, 1u128);
    let (mut r0, mut r1) = (den, num); // complete quotient x_1 = den/num
    let mut terminated = false;
    while quotients.len() < depth {
        if r1 == 0 {
            terminated = true;
            break;
        }
        let a = r0 / r1;
        let r2 = r0 - a * r1;
        let p = a * p0 + pm1;
        let q = a * q0 + qm1;
        if p > u64::MAX as u128 || q > u64::MAX as u128 || a > u64::MAX as u128 {
            terminated = true;
            break;
        }
        quotients.push(a as u64);
        convergents.push((p as u64, q as u64));
        (pm1, qm1, p0, q0) = (p0, q0, p, q);
        (r0, r1) = (r1, r2);
        // |ω − p/q| = 1/(q (q·x + q_prev)) with x = r0/r1 the next complete quotient.
        let err = if r1 == 0 {
            0.0
        } else {
            let x = r0 as f64 / r1 as f64;
            1.0 / (q as f64 * (q as f64 * x + qm1 as f64))
        };
        if err <= half_ulp {
            terminated = true;
            break;
        }
    }
    if terminated && quotients.len() >= 2 && quotients.last() == Some(&1) {
        // [.., a, 1] = [.., a + 1]
        quotients.pop();
        let last = convergents.pop().expect("nonempty");
        *quotients.last_mut().expect("nonempty") += 1;
        *convergents.last_mut().expect("nonempty") = last;
    }
    if quotients.len() < depth {
        return Err(Error::RationalInput { omega, terms: quotients.len(), depth });
    }
    Ok(Frequency { omega, quotients, convergents, dioph: None })
}

fn omega_ulp(omega: f64) -> f64 {
    let next = f64::from_bits(omega.to_bits() + 1);
    next - omega
}

/// `omega = num/den` exactly, with `den` a power of two.
fn exact_ratio(omega: f64) -> Option<(u128, u128)> {
    let bits = omega.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    if exp == 0 {
        return None;
    }
    let mut mant = ((bits & ((1u64 << 52) - 1)) | (1u64 << 52)) as u128;
    let mut shift = 1075 - exp;
    if shift > 126 {
        return None;
    }
    while mant % 2 == 0 && shift > 0 {
        mant /= 2;
        shift -= 1;
    }
    Some((mant, 1u128 << shift))
}

/// `min_{1≤t≤N} ‖tω‖` and the smallest minimizing `t`.
#[must_use]
pub fn min_shift_distance(omega: f64, n: u64) -> (f64, u64) {
    let mut best = (f64::INFINITY, 1);
    for t in 1..=n.max(1) {
        let d = dist_to_int(t as f64 * omega);
        if d < best.0 {
            best = (d, t);
        }
    }
    best
}

/// Smallest `m ∈ [m_lo, m_hi]` with `{mω} ∈ (y1, y2)`.
#[must_use]
pub fn find_shift_hitting_interval(omega: f64, y1: f64, y2: f64, m_lo: i64, m_hi: i64) -> Option<i64> {
    (m_lo..=m_hi).find(|&m| {
        let f = frac(m as f64 * omega);
        f > y1 && f < y2
    })
}

/// `sup_x |V(e(x))|` estimated on a fine grid (tighter than [`Potential::sup_norm`]).
#[must_use]
pub fn sampled_sup(pot: &Potential, grid: usize) -> f64 {
    (0..grid).map(|i| pot.at_phase(i as f64 / grid as f64).abs()).fold(0.0, f64::max)
}
