//! Zero counting by the argument principle, zero location by contour moments,
//! Jensen double averages, and zero densities of `f_N` in annuli.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::{dirichlet_eigs, Window};
use crate::error::{precondition, Error, Result};
use crate::model::Potential;
use crate::transfer::{dirichlet_det_de, dirichlet_det_dz_unchecked, LogComplex};
use crate::util::{gauss_legendre, pairwise_sum, par_range};

/// Contours whose `min|f|/max|f|` falls below this are rejected.
pub const MARGIN_FLOOR: f64 = 1e-12;
const MAX_ATTEMPTS: usize = 5;
const MIN_NODES: usize = 64;
const MAX_NODES: usize = 1 << 16;
const DEDUP_TOL: f64 = 1e-10;
/// Disks with more zeros than this are subdivided before taking moments.
const MOMENT_ORDER: usize = 4;

/// A function holomorphic near the contours it is evaluated on.
pub trait Holomorphic: Sync {
    /// `f(z)` in log-scaled form and the logarithmic derivative `f′(z)/f(z)`.
    fn eval_log(&self, z: Complex64) -> Result<(LogComplex, Complex64)>;

    /// Rough number of Fourier modes of `f` on a unit-size circle; sets the
    /// initial node count.
    fn degree_hint(&self) -> usize {
        0
    }
}

/// Wraps a closure returning `(f(z), f′(z))`.
pub struct Analytic<F>(pub F);

impl<F> Holomorphic for Analytic<F>
where
    F: Fn(Complex64) -> (Complex64, Complex64) + Sync,
{
    fn eval_log(&self, z: Complex64) -> Result<(LogComplex, Complex64)> {
        let (f, df) = (self.0)(z);
        Ok((LogComplex::from_complex(f), df / f))
    }
}

/// `z ↦ f_window(z, ω, E)`, a Laurent polynomial in `z`.
pub struct PhaseDeterminant<'a> {
    pot: &'a Potential,
    window: Window,
    omega: f64,
    e_val: Complex64,
}

impl<'a> PhaseDeterminant<'a> {
    #[must_use]
    pub fn new(pot: &'a Potential, window: Window, omega: f64, e_val: Complex64) -> Self {
        Self { pot, window, omega, e_val }
    }
}

impl Holomorphic for PhaseDeterminant<'_> {
    fn eval_log(&self, z: Complex64) -> Result<(LogComplex, Complex64)> {
        precondition(z != Complex64::new(0.0, 0.0), "f_N has a pole at z = 0")?;
        Ok(dirichlet_det_dz_unchecked(self.pot, self.window.lo, self.window.hi, z, self.omega, self.e_val))
    }

    fn degree_hint(&self) -> usize {
        2 * self.window.len() * self.pot.degree().max(1)
    }
}

/// `E ↦ f_window(e(x), ω, E)`, a polynomial of degree `|window|`.
pub struct EnergyDeterminant<'a> {
    pot: &'a Potential,
    window: Window,
    x: f64,
    omega: f64,
}

impl<'a> EnergyDeterminant<'a> {
    #[must_use]
    pub fn new(pot: &'a Potential, window: Window, x: f64, omega: f64) -> Self {
        Self { pot, window, x, omega }
    }
}

impl Holomorphic for EnergyDeterminant<'_> {
    fn eval_log(&self, e_val: Complex64) -> Result<(LogComplex, Complex64)> {
        Ok(dirichlet_det_de(self.pot, self.window.lo, self.window.hi, self.x, self.omega, e_val))
    }

    fn degree_hint(&self) -> usize {
        self.window.len()
    }
}

/// Zeros of `f` in an open disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroCountResult {
    pub count: usize,
    pub center: Complex64,
    /// Radius actually used, after any perturbation away from zeros.
    pub radius: f64,
    /// `min|f| / max|f|` on the contour.
    pub contour_margin: f64,
    pub zeros: Option<Vec<Complex64>>,
}

/// Trapezoid data on one circle.
struct Contour {
    winding: i64,
    margin: f64,
}

enum Attempt {
    Done(Contour),
    Retry(f64),
}

fn node(c: Complex64, r: f64, k: usize, m: usize) -> Complex64 {
    c + Complex64::from_polar(r, TAU * k as f64 / m as f64)
}

/// Samples `(log|f|, (f′/f)(z)·(z − c))` at `m` equispaced nodes.
fn sample<F: Holomorphic + ?Sized>(f: &F, c: Complex64, r: f64, m: usize) -> Result<Vec<(f64, Complex64)>> {
    par_range(m, |k| {
        let z = node(c, r, k, m);
        f.eval_log(z).map(|(v, d)| (v.mag, d * (z - c)))
    })
    .into_iter()
    .collect()
}

fn mean_complex(xs: impl Iterator<Item = Complex64>, m: usize) -> Complex64 {
    let (re, im): (Vec<f64>, Vec<f64>) = xs.map(|w| (w.re, w.im)).unzip();
    Complex64::new(pairwise_sum(&re), pairwise_sum(&im)) / m as f64
}

/// Winding number of `f` around one circle, doubling the node count until
/// two successive levels round to the same integer.
fn try_contour<F: Holomorphic + ?Sized>(f: &F, c: Complex64, r: f64) -> Result<Attempt> {
    let mut m = (4 * f.degree_hint()).next_power_of_two().max(MIN_NODES);
    let mut prev: Option<Complex64> = None;
    while m <= MAX_NODES {
        let s = sample(f, c, r, m)?;
        let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (l, _)| (a.min(*l), b.max(*l)));
        let margin = (lo - hi).exp();
        if !(margin >= MARGIN_FLOOR) {
            return Ok(Attempt::Retry(margin));
        }
        let w = mean_complex(s.iter().map(|p| p.1), m);
        let n = w.re.round();
        if let Some(p) = prev {
            if (w - n).norm() < 1e-2 && (p - n).norm() < 1e-1 {
                return Ok(Attempt::Done(Contour { winding: n as i64, margin }));
            }
        }
        prev = Some(w);
        m *= 2;
    }
    // unresolved trapezoid means a zero sits within a node spacing
    Ok(Attempt::Retry(0.0))
}

/// Winding number on `|z − c| = r`, moving the radius by `±k·step` when the
/// contour passes too close to a zero. Returns the contour and the radius used.
fn contour_with_retry<F: Holomorphic + ?Sized>(f: &F, c: Complex64, r: f64, step: f64) -> Result<(Contour, f64)> {
    let mut worst = f64::INFINITY;
    for attempt in 0..MAX_ATTEMPTS {
        let k = attempt.div_ceil(2) as f64;
        let rr = if attempt % 2 == 1 { r + k * step } else { r - k * step };
        match try_contour(f, c, rr)? {
            Attempt::Done(ct) => return Ok((ct, rr)),
            Attempt::Retry(m) => {
                log::debug!("contour |z-{c}|={rr} rejected (margin {m:e})");
                worst = worst.min(m);
            }
        }
    }
    Err(Error::ContourTooClose { margin: worst, attempts: MAX_ATTEMPTS })
}

/// Number of zeros of `f` in the open disk `|z − c| < r`.
pub fn count_zeros<F: Holomorphic + ?Sized>(f: &F, c: Complex64, r: f64) -> Result<ZeroCountResult> {
    precondition(r > 0.0 && r.is_finite(), "radius must be positive")?;
    let (ct, rr) = contour_with_retry(f, c, r, 0.01 * r)?;
    if ct.winding < 0 {
        return Err(Error::Precondition(format!("negative winding {} around {c}: f has poles inside", ct.winding)));
    }
    Ok(ZeroCountResult { count: ct.winding as usize, center: c, radius: rr, contour_margin: ct.margin, zeros: None })
}

/// Like `count_zeros`, with every zero located and Newton-polished.
pub fn locate_zeros<F: Holomorphic + ?Sized>(f: &F, c: Complex64, r: f64) -> Result<ZeroCountResult> {
    let mut res = count_zeros(f, c, r)?;
    let zeros = zeros_in_disk(f, c, res.radius, res.count, 0)?;
    res.zeros = Some(zeros);
    Ok(res)
}

/// Newton's method on `f`; keeps the seed if the iteration leaves `limit`.
fn polish<F: Holomorphic + ?Sized>(f: &F, seed: Complex64, c: Complex64, limit: f64) -> Complex64 {
    let mut z = seed;
    for _ in 0..50 {
        let Ok((v, d)) = f.eval_log(z) else { return seed };
        if v.is_zero() {
            return z;
        }
        let step = 1.0 / d;
        if !step.re.is_finite() || !step.im.is_finite() {
            return z;
        }
        let next = z - step;
        if (next - c).norm() > limit {
            return seed;
        }
        z = next;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

fn dedup(zs: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(zs.len());
    for z in zs {
        if !out.iter().any(|w| (w - z).norm() <= tol * (1.0 + z.norm())) {
            out.push(z);
        }
    }
    out
}

/// `s_p = Σ w_j^p`, `p = 1..=order`, over zeros `ζ_j = c + r·w_j` in the
/// disk, doubling nodes until two levels agree.
fn power_sums<F: Holomorphic + ?Sized>(f: &F, c: Complex64, r: f64, order: usize) -> Result<Vec<Complex64>> {
    let mut m = (4 * f.degree_hint()).next_power_of_two().max(4 * MIN_NODES);
    let mut prev: Option<Vec<Complex64>> = None;
    loop {
        let s = sample(f, c, r, m)?;
        let sums: Vec<Complex64> = (1..=order)
            .map(|p| mean_complex(s.iter().enumerate().map(|(k, v)| v.1 * Complex64::from_polar(1.0, TAU * ((p * k) % m) as f64 / m as f64)), m))
            .collect();
        let settled = prev.as_ref().is_some_and(|q| q.iter().zip(&sums).all(|(a, b)| (a - b).norm() <= 1e-11 * order as f64));
        if settled || 2 * m > MAX_NODES {
            return Ok(sums);
        }
        prev = Some(sums);
        m *= 2;
    }
}

/// Locates the `count` zeros inside `|z − c| < r`: power sums and Newton's
/// identities for few zeros, hexagonal subdivision otherwise.
fn zeros_in_disk<F: Holomorphic + ?Sized>(f: &F, c: Complex64, r: f64, count: usize, depth: usize) -> Result<Vec<Complex64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if count <= MOMENT_ORDER || depth >= 12 {
        let sums = power_sums(f, c, r, count)?;
        let mut e = vec![Complex64::new(1.0, 0.0)];
        for k in 1..=count {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 1..=k {
                let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
                acc += e[k - i] * sums[i - 1] * sign;
            }
            e.push(acc / k as f64);
        }
        // monic Π(w − w_j) = Σ (−1)^k e_k w^{n−k}
        let coeffs: Vec<Complex64> = (0..=count).map(|j| e[count - j] * if (count - j) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let ws = crate::resultant::poly_roots(&coeffs)?;
        return Ok(ws.into_iter().map(|w| polish(f, c + w * r, c, 1.5 * r)).collect());
    }
    let (rho, d) = (0.6 * r, 0.8 * r);
    let mut centers = vec![c];
    centers.extend((0..6).map(|k| c + Complex64::from_polar(d, PI / 3.0 * k as f64)));
    let mut found = Vec::new();
    for cc in centers {
        let (ct, rr) = contour_with_retry(f, cc, rho, 0.02 * rho)?;
        let n = usize::try_from(ct.winding).map_err(|_| Error::Precondition("pole inside subdisk".into()))?;
        found.extend(zeros_in_disk(f, cc, rr, n, depth + 1)?);
    }
    let mut inside: Vec<Complex64> = found.into_iter().filter(|z| (z - c).norm() < r).collect();
    inside = dedup(inside, DEDUP_TOL);
    if inside.len() != count {
        log::warn!("located {} zeros in disk({c}, {r}), winding says {count}", inside.len());
    }
    Ok(inside)
}

/// Lens area of `D(0, r1) ∩ D(ρ, r2)`.
fn lens_area(rho: f64, r1: f64, r2: f64) -> f64 {
    if rho <= (r1 - r2).abs() {
        return PI * r1.min(r2).powi(2);
    }
    if rho >= r1 + r2 {
        return 0.0;
    }
    let a1 = ((rho * rho + r1 * r1 - r2 * r2) / (2.0 * rho * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((rho * rho + r2 * r2 - r1 * r1) / (2.0 * rho * r2)).clamp(-1.0, 1.0).acos();
    let k = ((-rho + r1 + r2) * (rho + r1 - r2) * (rho - r1 + r2) * (rho + r1 + r2)).max(0.0);
    r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k.sqrt()
}

/// Circle mean of `log|f|` on `|z − c| = ρ` with `m` trapezoid nodes;
/// nodes where `|f| < 1e−300` are skipped.
fn circle_log_mean_fixed<F: Holomorphic + ?Sized>(f: &F, c: Complex64, rho: f64, m: usize) -> Result<f64> {
    let vals: Vec<f64> = par_range(m, |k| f.eval_log(node(c, rho, k, m)).map(|(v, _)| v.mag)).into_iter().collect::<Result<_>>()?;
    let floor = 1e-300f64.ln();
    let kept: Vec<f64> = vals.iter().copied().filter(|v| *v >= floor).collect();
    if kept.len() < vals.len() {
        log::debug!("jensen: skipped {} nodes at radius {rho}", vals.len() - kept.len());
    }
    precondition(!kept.is_empty(), "log|f| undefined on a whole circle")?;
    Ok(pairwise_sum(&kept) / kept.len() as f64)
}

/// Circle mean with nodes doubled from `m` until two rounds agree to
/// `1e−12`. The trapezoid error decays like `(ρ/|ζ|)^m` for a zero `ζ`
/// near the circle, so close zeros need many nodes.
fn circle_log_mean<F: Holomorphic + ?Sized>(f: &F, c: Complex64, rho: f64, m: usize) -> Result<f64> {
    let mut m = m;
    let mut prev = circle_log_mean_fixed(f, c, rho, m)?;
    while m < MAX_NODES {
        m *= 2;
        let next = circle_log_mean_fixed(f, c, rho, m)?;
        if (next - prev).abs() <= 1e-12 * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    log::debug!("jensen: circle mean at radius {rho} unsettled at {m} nodes");
    Ok(prev)
}

/// Jensen double average `J(f, z0, r1, r2)`: the mean of `log|f|` over
/// `r2`-disks centered in `D(z0, r1)` minus its mean over `D(z0, r1)`.
///
/// Both averages reduce to radial integrals of the circle means `m(ρ)`;
/// their weights are normalized so a constant `m` gives exactly zero.
pub fn jensen_average<F: Holomorphic + ?Sized>(f: &F, z0: Complex64, r1: f64, r2: f64) -> Result<f64> {
    precondition(r2 > 0.0 && r2 < r1, "need 0 < r2 < r1")?;
    let (gx, gw) = gauss_legendre(16);
    let panels = 12;
    let breaks = [0.0, r1 - r2, r1, r1 + r2];
    let mut nodes = Vec::new();
    for seg in breaks.windows(2) {
        let h = (seg[1] - seg[0]) / panels as f64;
        for p in 0..panels {
            let a = seg[0] + p as f64 * h;
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push((a + 0.5 * h * (x + 1.0), 0.5 * h * w));
            }
        }
    }
    let degree = f.degree_hint().max(16);
    let m = (8 * degree).next_power_of_two().max(256);
    let means: Vec<f64> = nodes.iter().map(|&(rho, _)| circle_log_mean(f, z0, rho, m)).collect::<Result<_>>()?;
    let norm1 = PI * PI * r1 * r1 * r2 * r2;
    let wa: Vec<f64> = nodes.iter().map(|&(rho, w)| w * TAU * rho * lens_area(rho, r1, r2) / norm1).collect();
    let wb: Vec<f64> = nodes.iter().map(|&(rho, w)| if rho < r1 { w * 2.0 * rho / (r1 * r1) } else { 0.0 }).collect();
    let (sa, sb) = (pairwise_sum(&wa), pairwise_sum(&wb));
    let terms: Vec<f64> = means.iter().zip(wa.iter().zip(&wb)).map(|(mv, (a, b))| mv * (a / sa - b / sb)).collect();
    Ok(pairwise_sum(&terms))
}

fn check_annulus(pot: &Potential, r1: f64, r2: f64) -> Result<()> {
    let rho0 = pot.rho0();
    if !(r1 > 1.0 - rho0 && r2 < 1.0 + rho0) {
        let z = Complex64::new(if r1 <= 1.0 - rho0 { r1 } else { r2 }, 0.0);
        return Err(Error::OutOfAnnulus { z, rho0 });
    }
    precondition(r1 < r2, "need R1 < R2")
}

/// Zeros of a function holomorphic near `r_lo ≤ |z| ≤ r_hi` with the two
/// boundary radii actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusCount {
    pub count: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub margin: f64,
}

/// Zeros in `r_lo < |z| < r_hi` as the difference of the winding numbers on
/// the two boundary circles; a pole at the origin cancels.
pub fn annulus_count<F: Holomorphic + ?Sized>(f: &F, r_lo: f64, r_hi: f64) -> Result<AnnulusCount> {
    precondition(0.0 < r_lo && r_lo < r_hi, "need 0 < R1 < R2")?;
    let step = 0.02 * (r_hi - r_lo);
    let o = Complex64::new(0.0, 0.0);
    let (inner, a) = contour_with_retry(f, o, r_lo, step)?;
    let (outer, b) = contour_with_retry(f, o, r_hi, step)?;
    let d = outer.winding - inner.winding;
    let count = usize::try_from(d).map_err(|_| Error::Precondition(format!("negative zero count {d} in annulus")))?;
    Ok(AnnulusCount { count, r_lo: a, r_hi: b, margin: inner.margin.min(outer.margin) })
}

/// Located zeros in `r_lo < |z| < r_hi`, by covering the annulus with rings of
/// overlapping disks, counting and locating per disk, and merging duplicates
/// in lattice order.
pub fn annulus_zeros<F: Holomorphic + ?Sized>(f: &F, r_lo: f64, r_hi: f64) -> Result<Vec<Complex64>> {
    let total = annulus_count(f, r_lo, r_hi)?;
    if total.count == 0 {
        return Ok(Vec::new());
    }
    let w = r_hi - r_lo;
    let rings = (w / (0.8 * r_lo)).ceil().max(1.0) as usize;
    let h = 0.75 * w / rings as f64;
    let mut disks = Vec::new();
    for i in 0..rings {
        let rc = r_lo + (i as f64 + 0.5) * w / rings as f64;
        let k = ((TAU * rc) / (0.9 * h)).ceil().max(3.0) as usize;
        disks.extend((0..k).map(|j| Complex64::from_polar(rc, TAU * j as f64 / k as f64)));
    }
    precondition(disks.len() <= 100_000, format!("annulus cover needs {} disks", disks.len()))?;
    let per_disk: Vec<Result<Vec<Complex64>>> = disks
        .iter()
        .map(|&c| {
            let (ct, rr) = contour_with_retry(f, c, h, 0.02 * h)?;
            let n = usize::try_from(ct.winding).map_err(|_| Error::Precondition("pole inside cover disk".into()))?;
            zeros_in_disk(f, c, rr, n, 0)
        })
        .collect();
    let mut all = Vec::new();
    for z in per_disk {
        all.extend(z?);
    }
    let inside: Vec<Complex64> = all.into_iter().filter(|z| z.norm() > total.r_lo && z.norm() < total.r_hi).collect();
    let zeros = dedup(inside, DEDUP_TOL);
    if zeros.len() != total.count {
        log::warn!("annulus cover located {} zeros, winding count {}", zeros.len(), total.count);
    }
    Ok(zeros)
}

/// Zero density of `f_window(·, ω, E)` in an annulus, as a JSON-ready report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusDensity {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    pub count: usize,
    pub density: f64,
    pub zeros: Vec<[f64; 2]>,
}

/// `#zeros of f_window(·, ω, E) in R1 < |z| < R2`, divided by `|window|`.
pub fn annulus_density(pot: &Potential, omega: f64, e_val: f64, window: Window, r1: f64, r2: f64, locate: bool) -> Result<AnnulusDensity> {
    check_annulus(pot, r1, r2)?;
    precondition(!window.is_empty(), "empty window")?;
    let f = PhaseDeterminant::new(pot, window, omega, Complex64::new(e_val, 0.0));
    let c = annulus_count(&f, r1, r2)?;
    let zeros = if locate { annulus_zeros(&f, r1, r2)?.iter().map(|z| [z.re, z.im]).collect() } else { Vec::new() };
    log::debug!("annulus ({r1}, {r2}) E={e_val} window {window:?}: {} zeros", c.count);
    Ok(AnnulusDensity {
        energy: e_val,
        n: window.len(),
        r1,
        r2,
        count: c.count,
        density: c.count as f64 / window.len() as f64,
        zeros,
    })
}

/// Densities at two scales with the margin `r2 = n^{−1/4}(R2 − R1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleStability {
    /// `M_n` and `M_N` on the shrunk annulus `(R1 + r2, R2 − r2)`.
    pub inner: (f64, f64),
    /// `M_n` and `M_N` on the grown annulus `(R1 − r2, R2 + r2)`.
    pub outer: (f64, f64),
    /// `max(M_N(in) − M_n(out), M_n(in) − M_N(out))`; both comparisons hold
    /// when this is at most `n^{−1/4}`.
    pub defect: f64,
    pub allowance: f64,
}

/// Compares zero densities of `f_n` and `f_N` on windows starting at site 1.
#[allow(clippy::too_many_arguments)]
pub fn scale_stability(pot: &Potential, omega: f64, e_val: f64, n: i64, big_n: i64, r1: f64, r2: f64) -> Result<ScaleStability> {
    precondition(n >= 1 && big_n >= n, "need N ≥ n ≥ 1")?;
    let q = (n as f64).powf(-0.25);
    let m = q * (r2 - r1);
    precondition(2.0 * m < r2 - r1, "n too small for the margin")?;
    check_annulus(pot, r1 - m, r2 + m)?;
    let dens = |len: i64, a: f64, b: f64| annulus_density(pot, omega, e_val, Window::from_one(len), a, b, false).map(|d| d.density);
    let inner = (dens(n, r1 + m, r2 - m)?, dens(big_n, r1 + m, r2 - m)?);
    let outer = (dens(n, r1 - m, r2 + m)?, dens(big_n, r1 - m, r2 + m)?);
    let defect = (inner.1 - outer.0).max(inner.0 - outer.1);
    Ok(ScaleStability { inner, outer, defect, allowance: q })
}

/// Zeros of `E ↦ f_window(e(x), ω, E)` in `|E − E0| < radius`, checked
/// against the eigenvalues of `H_window(x)`.
pub fn count_zeros_in_e(pot: &Potential, x: f64, omega: f64, window: Window, e0: Complex64, radius: f64) -> Result<ZeroCountResult> {
    precondition(!window.is_empty(), "empty window")?;
    let f = EnergyDeterminant::new(pot, window, x, omega);
    let res = locate_zeros(&f, e0, radius)?;
    let eigs = dirichlet_eigs(pot, x, omega, window).eigs;
    let want = eigs.iter().filter(|&&ev| (Complex64::new(ev, 0.0) - e0).norm() < res.radius).count();
    if want != res.count {
        return Err(Error::CrossCheck(format!(
            "{} zeros in disk({e0}, {}) but {want} eigenvalues",
            res.count, res.radius
        )));
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::golden_mean;
    use crate::resultant::Poly;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_poly(rng: &mut ChaCha8Rng, deg: usize, spread: f64) -> (Poly, Vec<Complex64>) {
        let roots: Vec<Complex64> = (0..deg).map(|_| c(rng.gen_range(-spread..spread), rng.gen_range(-spread..spread))).collect();
        (Poly::from_roots(&roots), roots)
    }

    #[test]
    fn polynomial_examples() {
        let p = Poly::from_real(&[-0.25, 0.0, 1.0]).unwrap();
        assert_eq!(count_zeros(&p, c(0.0, 0.0), 1.0).unwrap().count, 2);
        let q = Poly::from_real(&[-0.5, 1.0]).unwrap();
        let r = count_zeros(&q, c(0.0, 0.0), 0.4).unwrap();
        assert_eq!(r.count, 0);
        assert!(r.contour_margin > 0.0);
        let f = Analytic(|z: Complex64| (z.exp() - 1.0, z.exp()));
        assert_eq!(count_zeros(&f, c(0.0, 0.0), 7.0).unwrap().count, 3);
    }

    #[test]
    fn contour_on_a_zero_is_moved() {
        let p = Poly::from_real(&[-1.0, 1.0]).unwrap();
        let r = count_zeros(&p, c(0.0, 0.0), 1.0).unwrap();
        assert!(r.radius != 1.0);
        assert_eq!(r.count, usize::from(r.radius > 1.0));
    }

    #[test]
    fn degree_eight_against_companion_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let coeffs: Vec<Complex64> = (0..=8).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let p = Poly::new(coeffs).unwrap();
            let res = locate_zeros(&p, c(0.0, 0.0), 2.0).unwrap();
            let truth = p.roots().unwrap();
            let want = truth.iter().filter(|z| z.norm() < res.radius).count();
            assert_eq!(res.count, want);
            for &z in res.zeros.as_ref().unwrap() {
                assert!(truth.iter().any(|t| (t - z).norm() < 1e-8), "{z} not a root: {truth:?} count {} r {}", res.count, res.radius);
            }
        }
    }

    #[test]
    fn subdivision_locates_many_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (p, roots) = random_poly(&mut rng, 11, 0.7);
        let res = locate_zeros(&p, c(0.0, 0.0), 1.0).unwrap();
        assert_eq!(res.count, 11);
        let zs = res.zeros.unwrap();
        assert_eq!(zs.len(), 11);
        for r in roots {
            assert!(zs.iter().any(|z| (z - r).norm() < 1e-9));
        }
    }

    #[test]
    fn jensen_examples() {
        let id = Poly::from_real(&[0.0, 1.0]).unwrap();
        for (r1, r2) in [(1.0, 0.5), (0.8, 0.1), (2.0, 1.5)] {
            let j = jensen_average(&id, c(0.0, 0.0), r1, r2).unwrap();
            assert!((j - r2 * r2 / (4.0 * r1 * r1)).abs() < 1e-6, "({r1},{r2}): {j}");
        }
        let far = Poly::from_real(&[-5.0, 1.0]).unwrap();
        assert!(jensen_average(&far, c(0.0, 0.0), 1.0, 0.5).unwrap().abs() < 1e-8);
        let ex = Analytic(|z: Complex64| (z.exp(), z.exp()));
        assert!(jensen_average(&ex, c(0.3, 0.1), 1.0, 0.3).unwrap().abs() < 1e-8);
    }

    #[test]
    fn jensen_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..10 {
            let deg = rng.gen_range(1..=6);
            let (p, roots) = random_poly(&mut rng, deg, 1.5);
            let r1 = rng.gen_range(0.5..1.5);
            let r2 = rng.gen_range(0.05..0.9) * r1;
            let j = jensen_average(&p, c(0.0, 0.0), r1, r2).unwrap();
            let nu = |r: f64| roots.iter().filter(|z| z.norm() < r).count() as f64;
            let v = 4.0 * r1 * r1 / (r2 * r2) * j;
            assert!(nu(r1 - r2) - 1e-6 <= v && v <= nu(r1 + r2) + 1e-6, "{} ≤ {v} ≤ {}", nu(r1 - r2), nu(r1 + r2));
        }
    }

    #[test]
    fn energy_zeros_examples() {
        let zero = Potential::zero();
        let w = Window::from_one(2);
        let r = count_zeros_in_e(&zero, 0.1, golden_mean(), w, c(0.0, 0.0), 1.5).unwrap();
        assert_eq!(r.count, 2);
        let mut z = r.zeros.unwrap();
        z.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((z[0] - c(-1.0, 0.0)).norm() < 1e-12 && (z[1] - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(count_zeros_in_e(&zero, 0.1, golden_mean(), w, c(0.0, 0.0), 0.5).unwrap().count, 0);
    }

    #[test]
    fn energy_zeros_match_amo_eigenvalues() {
        let pot = Potential::amo(3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..5 {
            let e0 = c(rng.gen_range(-8.0..8.0), 0.0);
            let x = rng.gen_range(0.0..1.0);
            let r = count_zeros_in_e(&pot, x, golden_mean(), Window::from_one(40), e0, 1.0).unwrap();
            for z in r.zeros.unwrap() {
                assert!(z.im.abs() < 1e-8, "non-real zero {z}");
            }
        }
    }

    #[test]
    fn far_energy_has_no_zeros_near_the_circle() {
        let pot = Potential::amo(3.0);
        let e_val = pot.sup_norm() + 3.0;
        let d = annulus_density(&pot, golden_mean(), e_val, Window::from_one(60), 0.995, 1.005, true).unwrap();
        assert_eq!(d.count, 0);
        assert_eq!(d.density, 0.0);
    }

    #[test]
    fn amo_density_bounds() {
        let pot = Potential::amo(3.0);
        let n = 60;
        for e_val in [-4.0, -1.3, 0.2, 2.5, 5.0] {
            let d = annulus_density(&pot, golden_mean(), e_val, Window::from_one(n), 0.6, 1.4, false).unwrap();
            assert!(d.density <= 2.0 + 1.0 / n as f64, "E={e_val}: {}", d.density);
        }
    }

    #[test]
    fn annulus_cover_matches_count() {
        let pot = Potential::amo(3.0);
        let f = PhaseDeterminant::new(&pot, Window::from_one(12), golden_mean(), c(0.7, 0.0));
        let zs = annulus_zeros(&f, 0.7, 1.3).unwrap();
        let n = annulus_count(&f, 0.7, 1.3).unwrap().count;
        assert_eq!(zs.len(), n);
        for z in zs {
            let (v, _) = f.eval_log(z).unwrap();
            let (s, _) = f.eval_log(z * 1.001).unwrap();
            assert!(v.mag < s.mag - 5.0, "{z} is not a zero");
        }
    }

    #[test]
    fn free_scale_stability() {
        let s = scale_stability(&Potential::zero(), golden_mean(), 3.0, 32, 64, 0.9, 1.1).unwrap();
        assert_eq!(s.inner, (0.0, 0.0));
        assert_eq!(s.outer, (0.0, 0.0));
        assert!(s.defect <= 0.0);
    }

    #[test]
    fn same_scale_defect_is_margin_loss_only() {
        let pot = Potential::amo(3.0);
        let s = scale_stability(&pot, golden_mean(), 0.5, 40, 40, 0.9, 1.1).unwrap();
        assert!(s.defect <= 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn count_stable_under_radius_perturbation(seed in 0u64..5000, deg in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (p, roots) = random_poly(&mut rng, deg, 1.5);
            let r = 1.0;
            let shell_free = roots.iter().all(|z| (z.norm() - r).abs() > 0.1 * r);
            prop_assume!(shell_free);
            let base = count_zeros(&p, c(0.0, 0.0), r).unwrap().count;
            for s in [0.9, 0.95, 1.05, 1.1] {
                prop_assert_eq!(count_zeros(&p, c(0.0, 0.0), r * s).unwrap().count, base);
            }
            prop_assert_eq!(base, roots.iter().filter(|z| z.norm() < r).count());
        }
    }
}
