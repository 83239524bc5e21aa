//! Finite-volume spectra unions and gaps, resonances between Rellich
//! branches, pre-gaps opened by their splitting, and the zero-count
//! diagnostics that accompany a gap.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::{bisect_eigs, ring_count, site_values, sturm_count, tridiagonal_eigs, tridiagonal_eigs_ql, twisted_center, Boundary, Window};
use crate::error::{precondition, Error, Result};
use crate::lyapunov::finite_lyapunov;
use crate::model::{continued_fraction, e as phase, Potential};
use crate::rellich::{branch_energy, extract_segments, trace_graph, RellichGraph, Segment};
use crate::transfer::{monodromy, Sign};
use crate::util::{dist_to_int, frac, par_map, par_range};
use crate::zerocount::{annulus_count, count_zeros_in_e, locate_zeros, Holomorphic, PhaseDeterminant};

/// Schema version of serialized gap reports.
pub const GAP_REPORT_SCHEMA: u32 = 1;

/// Spectra union, gaps, and the pre-gap pipeline results at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub schema: u32,
    #[serde(rename = "N")]
    pub n: i64,
    pub bc: Boundary,
    pub grid: usize,
    pub hull: (f64, f64),
    pub bands: Vec<(f64, f64)>,
    pub gaps: Vec<(f64, f64)>,
    pub resonances: Vec<Resonance>,
    pub pregaps: Vec<PreGap>,
    pub zero_sequences: Vec<Vec<ZeroSeqEntry>>,
}

impl GapReport {
    /// Gaps wider than `w`.
    #[must_use]
    pub fn gaps_wider_than(&self, w: f64) -> Vec<(f64, f64)> {
        self.gaps.iter().copied().filter(|g| g.1 - g.0 > w).collect()
    }

    /// Whether `(lo, hi)` meets no band.
    #[must_use]
    pub fn avoids(&self, lo: f64, hi: f64) -> bool {
        self.bands.iter().all(|b| b.1 <= lo || b.0 >= hi)
    }

    /// Plot-ready rows `N,kind,lo,hi`.
    #[must_use]
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows: Vec<String> = self.bands.iter().map(|b| format!("{},band,{},{}", self.n, b.0, b.1)).collect();
        rows.extend(self.gaps.iter().map(|g| format!("{},gap,{},{}", self.n, g.0, g.1)));
        rows
    }
}

/// Sorted union of closed intervals.
fn merge(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in iv {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Eigenvalues whose localization center keeps `√N` away from the window ends.
fn regular_dirichlet(pot: &Potential, x: f64, omega: f64, n: i64) -> Vec<f64> {
    let w = Window::centered(n);
    let d = site_values(pot, x, omega, w);
    let margin = (n as f64).sqrt();
    tridiagonal_eigs_ql(&d)
        .into_iter()
        .filter(|&ev| {
            let c = w.site(twisted_center(&d, ev)) as f64;
            c >= -(n as f64) + margin && c <= n as f64 - margin
        })
        .collect()
}

fn ring_eigs(pot: &Potential, x: f64, omega: f64, n: i64, sign: Sign) -> Vec<f64> {
    crate::eigen::periodic_eigs_fast(pot, x, omega, n, sign)
}

/// Union over `grid_size` phases of the finite-volume spectra, each eigenvalue
/// fattened by `C(V)/grid_size` so that phase motion between nodes is covered.
///
/// Dirichlet spectra live on `[−N, N]` and keep regular eigenvalues only:
/// states pinned to a window end sweep through every gap as the phase moves.
/// Periodic and antiperiodic spectra live on the ring `[1, N]`.
pub fn spectrum_union(pot: &Potential, omega: f64, n: i64, bc: Boundary, grid_size: usize) -> Result<GapReport> {
    precondition(grid_size >= 128, "spectrum_union needs grid_size ≥ 128")?;
    precondition(n >= 1, "N ≥ 1")?;
    let fat = pot.motion_constant() / grid_size as f64;
    let cols: Vec<Vec<f64>> = par_range(grid_size, |k| {
        let x = k as f64 / grid_size as f64;
        match bc {
            Boundary::Dirichlet => regular_dirichlet(pot, x, omega, n),
            Boundary::Periodic => ring_eigs(pot, x, omega, n, Sign::Periodic),
            Boundary::Antiperiodic => ring_eigs(pot, x, omega, n, Sign::Antiperiodic),
        }
    });
    let bands = merge(cols.iter().flatten().map(|&ev| (ev - fat, ev + fat)).collect());
    let hull = (bands.first().map_or(f64::NAN, |b| b.0), bands.last().map_or(f64::NAN, |b| b.1));
    let gaps = bands.windows(2).map(|w| (w[0].1, w[1].0)).collect();
    Ok(GapReport {
        schema: GAP_REPORT_SCHEMA,
        n,
        bc,
        grid: grid_size,
        hull,
        bands,
        gaps,
        resonances: Vec::new(),
        pregaps: Vec::new(),
        zero_sequences: Vec::new(),
    })
}

/// Length of the overlap of two intervals.
#[must_use]
pub fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// The gap of `later` overlapping `gap` the most, and the fraction of `gap`
/// it covers.
#[must_use]
pub fn gap_survival(gap: (f64, f64), later: &GapReport) -> Option<((f64, f64), f64)> {
    later
        .gaps
        .iter()
        .map(|&g| (g, overlap(gap, g) / (gap.1 - gap.0)))
        .filter(|p| p.1 > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Eigenvalue branches as functions of the phase.
pub trait Branches: Sync {
    fn energy(&self, j: usize, x: f64) -> f64;
}

impl<F: Fn(usize, f64) -> f64 + Sync> Branches for F {
    fn energy(&self, j: usize, x: f64) -> f64 {
        self(j, x)
    }
}

/// `E_j(x)` of `H_window(x, ω)`.
pub struct DirichletBranches<'a> {
    pub pot: &'a Potential,
    pub omega: f64,
    pub window: Window,
}

impl Branches for DirichletBranches<'_> {
    fn energy(&self, j: usize, x: f64) -> f64 {
        branch_energy(self.pot, self.omega, self.window, j, x)
    }
}

/// A crossing `E_{j1}(x0) = E_{j2}(x0 + mω)` of a rising and a falling branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub x0: f64,
    pub m: i64,
    pub e0: f64,
    pub j1: usize,
    pub j2: usize,
    /// `|E_{j1}(x0) − E_{j2}(x0 + mω)|` on re-evaluation.
    pub mismatch: f64,
    /// Distance kept from the segment ends, `|I|/C(V)`.
    pub sep: f64,
    /// Half-width of the scale the segments come from.
    pub scale: i64,
}

/// Searches `m` in `m_range` (skipping 0, smallest `|m|` first) for a phase
/// `x0` in `pos` with `x0 + mω` in `neg` and `E_{j1}(x0) = E_{j2}(x0 + mω)`.
/// The crossing energy must sit in the middle half of the common range `I`,
/// and both phases must keep `|I|/c_v` away from the segment ends; with
/// `c_v ≥ 4·sup|E'|` the second follows from the first. The difference of
/// the branches is monotone, so `x0` comes from bisection.
#[allow(clippy::too_many_arguments)]
pub fn find_resonance<B: Branches + ?Sized>(
    branches: &B,
    omega: f64,
    pos: &Segment,
    neg: &Segment,
    m_range: (i64, i64),
    c_v: f64,
    scale: i64,
) -> Result<Resonance> {
    precondition(pos.slope_sign > 0 && neg.slope_sign < 0, "need a rising and a falling segment")?;
    let (ilo, ihi) = (pos.e_lo.max(neg.e_lo), pos.e_hi.min(neg.e_hi));
    if ilo >= ihi {
        return Err(Error::NotFound);
    }
    let sep = (ihi - ilo) / c_v;
    let quarter = 0.25 * (ihi - ilo);
    let mut ms: Vec<i64> = (m_range.0..=m_range.1).filter(|&m| m != 0).collect();
    ms.sort_by_key(|&m| (m.abs(), m < 0));
    for m in ms {
        let s = frac(m as f64 * omega);
        for t in [-1.0, 0.0, 1.0] {
            let shift = s + t;
            let u = (pos.x_lo + sep).max(neg.x_lo - shift + sep);
            let v = (pos.x_hi - sep).min(neg.x_hi - shift - sep);
            if u >= v {
                continue;
            }
            let diff = |x: f64| branches.energy(pos.j, x) - branches.energy(neg.j, x + shift);
            let (du, dv) = (diff(u), diff(v));
            if !(du <= 0.0 && dv >= 0.0) {
                continue;
            }
            let (mut a, mut b) = (u, v);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if diff(mid) <= 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let x0 = if diff(a).abs() <= diff(b).abs() { a } else { b };
            let e0 = branches.energy(pos.j, x0);
            if !(e0 > ilo + quarter && e0 < ihi - quarter) {
                continue;
            }
            let mismatch = diff(x0).abs();
            return Ok(Resonance { x0, m, e0, j1: pos.j, j2: neg.j, mismatch, sep, scale });
        }
    }
    Err(Error::NotFound)
}

/// Sampled branches of the 2×2 model
/// `E± = (E1+E2)/2 ± √((E1−E2)²/4 + ε²)` and its gap `min E⁺ − max E⁻`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLevel {
    pub xs: Vec<f64>,
    pub e_plus: Vec<f64>,
    pub e_minus: Vec<f64>,
    pub x_minus_max: f64,
    pub x_plus_min: f64,
    pub gap: f64,
}

/// Upper and lower eigenvalues of `[[E1, ε], [ε, E2]]`.
#[must_use]
pub fn split_pair(e1: f64, e2: f64, eps: f64) -> (f64, f64) {
    let (avg, half) = (0.5 * (e1 + e2), 0.5 * (e1 - e2));
    let r = half.hypot(eps);
    (avg + r, avg - r)
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if b - a <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd { (c, fc) } else { (d, fd) }
}

/// Maximum of `f` sampled at `xs`, polished by golden section around the best
/// node. `None` when the best node is an end point.
fn interior_max<F: Fn(f64) -> f64>(f: &F, xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let i = (0..ys.len()).max_by(|&a, &b| ys[a].total_cmp(&ys[b]))?;
    if i == 0 || i + 1 == ys.len() {
        return None;
    }
    let (x, y) = golden_max(f, xs[i - 1], xs[i + 1]);
    Some(if y >= ys[i] { (x, y) } else { (xs[i], ys[i]) })
}

/// The 2×2 splitting model on `grid + 1` points of `x_range`.
pub fn two_level_split<E1, E2, Ep>(e1: E1, e2: E2, eps: Ep, x_range: (f64, f64), grid: usize) -> Result<TwoLevel>
where
    E1: Fn(f64) -> f64,
    E2: Fn(f64) -> f64,
    Ep: Fn(f64) -> f64,
{
    precondition(grid >= 2 && x_range.0 < x_range.1, "need a nondegenerate range")?;
    let xs: Vec<f64> = (0..=grid).map(|k| x_range.0 + (x_range.1 - x_range.0) * k as f64 / grid as f64).collect();
    let plus = |x: f64| split_pair(e1(x), e2(x), eps(x)).0;
    let minus = |x: f64| split_pair(e1(x), e2(x), eps(x)).1;
    let e_plus: Vec<f64> = xs.iter().map(|&x| plus(x)).collect();
    let e_minus: Vec<f64> = xs.iter().map(|&x| minus(x)).collect();
    let neg_plus = |x: f64| -plus(x);
    let np: Vec<f64> = e_plus.iter().map(|v| -v).collect();
    let (x_minus_max, max_minus) = interior_max(&minus, &xs, &e_minus).unwrap_or_else(|| {
        let i = (0..xs.len()).max_by(|&a, &b| e_minus[a].total_cmp(&e_minus[b])).unwrap_or(0);
        (xs[i], e_minus[i])
    });
    let (x_plus_min, neg_min_plus) = interior_max(&neg_plus, &xs, &np).unwrap_or_else(|| {
        let i = (0..xs.len()).max_by(|&a, &b| np[a].total_cmp(&np[b])).unwrap_or(0);
        (xs[i], np[i])
    });
    Ok(TwoLevel { xs, e_plus, e_minus, x_minus_max, x_plus_min, gap: -neg_min_plus - max_minus })
}

/// An energy interval with no eigenvalue of the split pair over a phase window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreGap {
    pub lo: f64,
    pub hi: f64,
    /// `(max E⁻, min E⁺)` over the window, before the margin.
    pub edges: (f64, f64),
    pub x_max: f64,
    pub x_min: f64,
    /// Scale `N̄` of the window `[−N̄, N̄]`.
    pub scale: i64,
    /// Index of the resonance this came from.
    pub resonance: Option<usize>,
}

impl PreGap {
    #[must_use]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// The middle half of the interval.
    #[must_use]
    pub fn core(&self) -> (f64, f64) {
        let q = 0.25 * self.width();
        (self.lo + q, self.hi - q)
    }
}

/// Pre-gap `(max E_{j_lo} + margin, min E_{j_lo+1} − margin)` over
/// `x_window`. The lower branch must peak strictly inside the window and the
/// interval must be nonempty.
pub fn pregap_from_branches<B: Branches + ?Sized>(
    b: &B,
    j_lo: usize,
    x_window: (f64, f64),
    grid: usize,
    margin: f64,
    scale: i64,
) -> Result<PreGap> {
    precondition(grid >= 4 && x_window.0 < x_window.1, "need a nondegenerate window")?;
    let mut grid = grid;
    for _ in 0..4 {
        let xs: Vec<f64> = (0..=grid).map(|k| x_window.0 + (x_window.1 - x_window.0) * k as f64 / grid as f64).collect();
        let lower: Vec<f64> = par_map(&xs, |&x| b.energy(j_lo, x));
        let upper: Vec<f64> = par_map(&xs, |&x| b.energy(j_lo + 1, x));
        let low = |x: f64| b.energy(j_lo, x);
        let Some((x_max, lo)) = interior_max(&low, &xs, &lower) else {
            grid *= 2;
            continue;
        };
        let neg_up = |x: f64| -b.energy(j_lo + 1, x);
        let nu: Vec<f64> = upper.iter().map(|v| -v).collect();
        let i = (0..nu.len()).max_by(|&p, &q| nu[p].total_cmp(&nu[q])).unwrap_or(0);
        let (x_min, hi) = match interior_max(&neg_up, &xs, &nu) {
            Some((x, v)) => (x, -v),
            None => (xs[i], upper[i]),
        };
        let tol = 1e-12 * (1.0 + lo.abs());
        if hi - lo - 2.0 * margin <= tol {
            return Err(Error::NoSplit(format!("branches {j_lo}/{} split by only {:e}", j_lo + 1, hi - lo)));
        }
        return Ok(PreGap { lo: lo + margin, hi: hi - margin, edges: (lo, hi), x_max, x_min, scale, resonance: None });
    }
    Err(Error::NoSplit(format!("branch {j_lo} peaks at the window edge after refinement")))
}

/// The regular eigenvalues just below and above `e0` at phase `x` on
/// `[−N̄, N̄]`, skipping states pinned to the window ends.
struct SplitBranches<'a> {
    pot: &'a Potential,
    omega: f64,
    n: i64,
    e0: f64,
}

impl SplitBranches<'_> {
    fn neighbors(&self, x: f64) -> (f64, f64) {
        let w = Window::centered(self.n);
        let d = site_values(self.pot, x, self.omega, w);
        let k = sturm_count(&d, self.e0);
        let margin = (self.n as f64).sqrt();
        let regular = |ev: f64| {
            let c = w.site(twisted_center(&d, ev)) as f64;
            c >= -(self.n as f64) + margin && c <= self.n as f64 - margin
        };
        let mut below = f64::NEG_INFINITY;
        let mut j = k;
        while j > 0 {
            j -= 1;
            let ev = bisect_eigs(&d, j, j + 1)[0];
            if regular(ev) {
                below = ev;
                break;
            }
        }
        let mut above = f64::INFINITY;
        for j in k..d.len() {
            let ev = bisect_eigs(&d, j, j + 1)[0];
            if regular(ev) {
                above = ev;
                break;
            }
        }
        (below, above)
    }
}

impl Branches for SplitBranches<'_> {
    fn energy(&self, j: usize, x: f64) -> f64 {
        let (a, b) = self.neighbors(x);
        if j == 0 { a } else { b }
    }
}

/// Tunables of the pre-gap construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PregapParams {
    /// Phase half-width of the window around `x0`; `None` uses `res.sep`.
    pub half_width: Option<f64>,
    pub grid: usize,
    /// Trimmed from both edges of the split.
    pub margin: f64,
}

impl Default for PregapParams {
    fn default() -> Self {
        Self { half_width: None, grid: 64, margin: 0.0 }
    }
}

/// At scale `N̄`, the split of the resonant pair near `E0` over the phase
/// window around `x0`: `(max E⁻, min E⁺)` with `E⁻` peaking inside.
pub fn build_pregap(pot: &Potential, omega: f64, res: &Resonance, n_bar: i64, params: PregapParams) -> Result<PreGap> {
    precondition(n_bar >= 4 * res.scale.max(1), "N̄ must be at least 4 times the segment scale")?;
    let w = params.half_width.unwrap_or(res.sep);
    precondition(w > 0.0, "phase window must be nonempty")?;
    let b = SplitBranches { pot, omega, n: n_bar, e0: res.e0 };
    pregap_from_branches(&b, 0, (res.x0 - w, res.x0 + w), params.grid, params.margin, n_bar)
}

/// Zeros of `f_{[−N,N]}(·, ω, E)` in one disk of the sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSeqEntry {
    pub k: i64,
    pub count: usize,
    /// `(x, y)` with `z = e(x + iy)`.
    pub zeros: Vec<(f64, f64)>,
}

impl ZeroSeqEntry {
    /// Zeros pair up under `y ↦ −y` within `tol`.
    #[must_use]
    pub fn conjugate_paired(&self, tol: f64) -> bool {
        self.zeros.iter().all(|&(x, y)| {
            self.zeros.iter().any(|&(x2, y2)| dist_to_int(x - x2) <= tol && (y + y2).abs() <= tol)
        })
    }

    /// At least two zeros, all off the unit circle.
    #[must_use]
    pub fn has_complex_pair(&self, y_floor: f64) -> bool {
        self.count >= 2 && self.zeros.iter().filter(|z| z.1.abs() > y_floor).count() >= 2
    }
}

/// `(x, y)` with `z = e(x + iy)`.
#[must_use]
pub fn phase_coords(z: Complex64) -> (f64, f64) {
    (frac(z.arg() / TAU), -z.norm().ln() / TAU)
}

/// Zeros of `f_{[−N,N]}(·, ω, E)` in the disks of radius `r` about
/// `e(x0 + kω)`, `k` in `k_range`.
#[allow(clippy::too_many_arguments)]
pub fn complex_zero_sequence(
    pot: &Potential,
    omega: f64,
    e_val: f64,
    n: i64,
    x0: f64,
    k_range: (i64, i64),
    r: f64,
) -> Result<Vec<ZeroSeqEntry>> {
    precondition(r > 0.0 && r <= 1e-2, "disk radius must lie in (0, 1e−2]")?;
    let f = PhaseDeterminant::new(pot, Window::centered(n), omega, Complex64::new(e_val, 0.0));
    let ks: Vec<i64> = (k_range.0..=k_range.1).collect();
    par_map(&ks, |&k| {
        let c = phase(x0 + k as f64 * omega);
        let res = locate_zeros(&f, c, r)?;
        let zeros = res.zeros.unwrap_or_default().into_iter().map(phase_coords).collect();
        Ok(ZeroSeqEntry { k, count: res.count, zeros })
    })
    .into_iter()
    .collect()
}

/// Radii of the wide and narrow annuli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropAnnuli {
    pub wide: (f64, f64),
    pub narrow: (f64, f64),
}

impl DropAnnuli {
    /// Annuli `1 ± wide` and `1 ± narrow`.
    #[must_use]
    pub fn symmetric(wide: f64, narrow: f64) -> Self {
        Self { wide: (1.0 - wide, 1.0 + wide), narrow: (1.0 - narrow, 1.0 + narrow) }
    }
}

/// Zero densities in the wide and narrow annuli and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityDrop {
    pub count_wide: usize,
    pub count_narrow: usize,
    pub m_wide: f64,
    pub m_narrow: f64,
    pub drop: f64,
}

/// `M(f, wide) − M(g, narrow)` for functions with lattice lengths `len_f`, `len_g`.
pub fn density_drop_for<F, G>(f: &F, len_f: usize, g: &G, len_g: usize, annuli: DropAnnuli) -> Result<DensityDrop>
where
    F: Holomorphic + ?Sized,
    G: Holomorphic + ?Sized,
{
    let a = annulus_count(f, annuli.wide.0, annuli.wide.1)?;
    let b = annulus_count(g, annuli.narrow.0, annuli.narrow.1)?;
    let (m_wide, m_narrow) = (a.count as f64 / len_f as f64, b.count as f64 / len_g as f64);
    Ok(DensityDrop { count_wide: a.count, count_narrow: b.count, m_wide, m_narrow, drop: m_wide - m_narrow })
}

/// `M_N(wide) − M_{N1}(narrow)` for `f` on `[1, N]` and `[1, N1]`.
pub fn density_drop(pot: &Potential, omega: f64, e_val: f64, n: i64, n1: i64, annuli: DropAnnuli) -> Result<DensityDrop> {
    precondition(n1 > n && n >= 1, "need N1 > N ≥ 1")?;
    let rho0 = pot.rho0();
    for r in [annuli.wide.0, annuli.wide.1, annuli.narrow.0, annuli.narrow.1] {
        if !(r > 1.0 - rho0 && r < 1.0 + rho0) {
            return Err(Error::OutOfAnnulus { z: Complex64::new(r, 0.0), rho0 });
        }
    }
    let ev = Complex64::new(e_val, 0.0);
    let f = PhaseDeterminant::new(pot, Window::from_one(n), omega, ev);
    let g = PhaseDeterminant::new(pot, Window::from_one(n1), omega, ev);
    density_drop_for(&f, n as usize, &g, n1 as usize, annuli)
}

/// True iff one of `f_{[1,ℓ]}, f_{[1,ℓ−1]}, f_{[2,ℓ]}, f_{[2,ℓ−1]}` at `e(x0)`
/// has no zero in `|E − E0| < r0`.
pub fn ns_condition(pot: &Potential, x0: f64, omega: f64, e0: f64, ell: i64, r0: f64) -> Result<bool> {
    precondition(ell >= 4, "ℓ ≥ 4")?;
    precondition(r0 > 0.0, "r0 > 0")?;
    let windows = [Window::new(1, ell), Window::new(1, ell - 1), Window::new(2, ell), Window::new(2, ell - 1)];
    for w in windows {
        if count_zeros_in_e(pot, x0, omega, w, Complex64::new(e0, 0.0), r0)?.count == 0 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Distances from `E0 = E_{j0}` of `H_{[1,N]}(x0)` to the spectra of the
/// trimmed windows, and the monodromy norm dip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Unconditional {
    pub e0: f64,
    pub d_left: f64,
    pub d_right: f64,
    pub d_inner: f64,
    pub unconditional: bool,
    /// `log‖M_N(e(x0), E0)‖ − N·L_N(E0)`.
    pub norm_dip: f64,
}

fn dist_to_spectrum(pot: &Potential, x: f64, omega: f64, w: Window, e0: f64) -> f64 {
    tridiagonal_eigs(&site_values(pot, x, omega, w)).iter().map(|v| (v - e0).abs()).fold(f64::INFINITY, f64::min)
}

/// `E0` is unconditional when both one-site-trimmed windows have spectrum
/// within `r0`; `r0 = ∞` accepts everything.
pub fn unconditional_check(pot: &Potential, x0: f64, omega: f64, n: i64, j0: usize, r0: f64, lyap_grid: usize) -> Result<Unconditional> {
    precondition(n >= 3, "N ≥ 3")?;
    let full = tridiagonal_eigs(&site_values(pot, x0, omega, Window::new(1, n)));
    precondition(j0 < full.len(), "j0 outside the spectrum")?;
    let e0 = full[j0];
    let d_left = dist_to_spectrum(pot, x0, omega, Window::new(1, n - 1), e0);
    let d_right = dist_to_spectrum(pot, x0, omega, Window::new(2, n), e0);
    let d_inner = dist_to_spectrum(pot, x0, omega, Window::new(2, n - 1), e0);
    let m = monodromy(pot, 1, n, phase(x0), omega, Complex64::new(e0, 0.0))?;
    let l = finite_lyapunov(pot, omega, e0, n, 0.0, lyap_grid)?.value;
    Ok(Unconditional {
        e0,
        d_left,
        d_right,
        d_inner,
        unconditional: d_left <= r0 && d_right <= r0,
        norm_dip: m.log_norm() - n as f64 * l,
    })
}

/// Convergent denominators of `ω` strictly above `lo`, ascending, at most `count`.
pub fn fibonacci_scales(omega: f64, lo: i64, count: usize) -> Result<Vec<i64>> {
    let fr = continued_fraction(omega, 40).or_else(|_| continued_fraction(omega, 30))?;
    Ok(fr.denominators().into_iter().map(|q| q as i64).filter(|&q| q > lo).take(count).collect())
}

/// True iff no periodic or antiperiodic eigenvalue of the ring `[1, N]`,
/// fattened by `C(V)/grid`, meets `interval` for any admissible `N` in the
/// list. `N` is admissible when `‖Nω‖ ≤ 0.25`.
pub fn spectrum_free_check(pot: &Potential, omega: f64, interval: (f64, f64), n_list: &[i64], grid: usize) -> Result<bool> {
    precondition(grid >= 128, "grid ≥ 128")?;
    let admissible: Vec<i64> = n_list.iter().copied().filter(|&n| n >= 2 && dist_to_int(n as f64 * omega) <= 0.25).collect();
    if admissible.is_empty() {
        return Err(Error::Frequency(format!("no N in {n_list:?} has ‖Nω‖ ≤ 0.25")));
    }
    let fat = pot.motion_constant() / grid as f64;
    let (lo, hi) = (interval.0 - fat, interval.1 + fat);
    for n in admissible {
        let hits = par_range(grid, |k| {
            let x = k as f64 / grid as f64;
            let d = site_values(pot, x, omega, Window::new(1, n));
            [Sign::Periodic, Sign::Antiperiodic].iter().any(|&s| ring_count(&d, s, hi) > ring_count(&d, s, lo))
        });
        if hits.iter().any(|&h| h) {
            log::debug!("periodic spectrum at N={n} meets ({lo}, {hi})");
            return Ok(false);
        }
    }
    Ok(true)
}

/// Tunables of the dichotomy scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    /// Upper cap on the scale, applied on top of `ℓ⁴`.
    pub scale_cap: i64,
    pub grid: usize,
    pub tau: f64,
    /// Smallest common energy range accepted for a pair.
    pub min_width: f64,
    /// Periodic scales tried for the spectrum-free branch.
    pub free_scales: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self { scale_cap: 64, grid: 256, tau: 1e-3, min_width: 1e-4, free_scales: 3 }
    }
}

/// Outcome of the dichotomy scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dichotomy {
    SpectrumFree((f64, f64)),
    RegularPair { scale: i64, pos: Segment, neg: Segment, common: (f64, f64) },
}

/// Regular rising and falling segments with a common range in `interval`,
/// at scales `ℓ² ≤ N ≤ min(ℓ⁴, cap)` (doubling); failing that, the middle
/// half of the interval checked for periodic spectra.
pub fn dichotomy_scan(pot: &Potential, omega: f64, interval: (f64, f64), ell: i64, params: ScanParams) -> Result<Dichotomy> {
    if !(interval.1 > interval.0) {
        return Err(Error::Undecided("zero-width interval".into()));
    }
    precondition(ell >= 1, "ℓ ≥ 1")?;
    let top = ell.pow(4).min(params.scale_cap).max(ell * ell);
    let mut n = ell * ell;
    while n <= top {
        let g = trace_graph(pot, omega, n, params.grid)?;
        if let Some(d) = best_pair(&g, params.tau, interval, params.min_width) {
            return Ok(d);
        }
        n *= 2;
    }
    let q = 0.25 * (interval.1 - interval.0);
    let shrunk = (interval.0 + q, interval.1 - q);
    let scales = fibonacci_scales(omega, ell * ell, params.free_scales)?;
    if spectrum_free_check(pot, omega, shrunk, &scales, params.grid.max(128))? {
        Ok(Dichotomy::SpectrumFree(shrunk))
    } else {
        Err(Error::Undecided(format!("no regular pair and periodic spectra meet {shrunk:?}")))
    }
}

/// The regular rising/falling pair with the widest common range.
#[must_use]
pub fn best_pair(g: &RellichGraph, tau: f64, interval: (f64, f64), min_width: f64) -> Option<Dichotomy> {
    let segs = extract_segments(g, tau, interval);
    let mut best: Option<(f64, &Segment, &Segment)> = None;
    for p in segs.iter().filter(|s| s.regular && s.slope_sign > 0) {
        for q in segs.iter().filter(|s| s.regular && s.slope_sign < 0) {
            let w = p.e_hi.min(q.e_hi) - p.e_lo.max(q.e_lo);
            if w >= min_width && best.map_or(true, |b| w > b.0) {
                best = Some((w, p, q));
            }
        }
    }
    best.map(|(_, p, q)| Dichotomy::RegularPair {
        scale: g.n,
        pos: p.clone(),
        neg: q.clone(),
        common: (p.e_lo.max(q.e_lo), p.e_hi.min(q.e_hi)),
    })
}

/// A phase where three branches nearly coincide under two shifts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub x: f64,
    pub j1: usize,
    pub j2: usize,
    pub j3: usize,
    pub m1: i64,
    pub m2: i64,
}

/// Index of the eigenvalue nearest `e` within `tol` (strict).
fn nearest_within(eigs: &[f64], e: f64, tol: f64) -> Option<usize> {
    let k = eigs.partition_point(|&v| v < e);
    [k.wrapping_sub(1), k]
        .into_iter()
        .filter(|&i| i < eigs.len())
        .filter(|&i| (eigs[i] - e).abs() < tol)
        .min_by(|&a, &b| (eigs[a] - e).abs().total_cmp(&(eigs[b] - e).abs()))
}

/// All `(x, j1, j2, j3, m1, m2)` over the graph's nodes with
/// `|E_{j2}(x + m1ω) − E_{j1}(x)| < tol` and `|E_{j3}(x + m2ω) − E_{j1}(x)| < tol`.
/// With `segments`, `j1` is restricted to nodes lying on a segment.
pub fn triple_resonance_scan(
    pot: &Potential,
    graph: &RellichGraph,
    m1_range: (i64, i64),
    m2_range: (i64, i64),
    tol: f64,
    segments: Option<&[Segment]>,
) -> Vec<Triple> {
    let window = graph.window();
    let omega = graph.omega;
    let idx: Vec<usize> = (0..graph.xs.len()).collect();
    let per_node: Vec<Vec<Triple>> = par_map(&idx, |&i| {
        let x = graph.xs[i];
        let bands: Vec<usize> = match segments {
            Some(segs) => {
                let mut b: Vec<usize> = segs.iter().filter(|s| s.i_lo <= i && i <= s.i_hi).map(|s| s.j).collect();
                b.sort_unstable();
                b.dedup();
                b
            }
            None => (0..graph.bands()).collect(),
        };
        if bands.is_empty() || !(tol > 0.0) {
            return Vec::new();
        }
        let spectrum = |m: i64| tridiagonal_eigs_ql(&site_values(pot, x + m as f64 * omega, omega, window));
        let mut out = Vec::new();
        let mut second: Option<Vec<(i64, Vec<f64>)>> = None;
        for m1 in m1_range.0..=m1_range.1 {
            if m1 == 0 {
                continue;
            }
            let s1 = spectrum(m1);
            for &j1 in &bands {
                let e1 = graph.energies[i][j1];
                let Some(j2) = nearest_within(&s1, e1, tol) else { continue };
                let shifted = second.get_or_insert_with(|| {
                    (m2_range.0..=m2_range.1).filter(|&m| m != 0).map(|m| (m, spectrum(m))).collect()
                });
                for (m2, s2) in shifted.iter() {
                    if let Some(j3) = nearest_within(s2, e1, tol) {
                        out.push(Triple { x, j1, j2, j3, m1, m2: *m2 });
                    }
                }
            }
        }
        out
    });
    per_node.into_iter().flatten().collect()
}

/// Constant of the phase separation kept by resonances, `4·(sup|V'| + 2)`.
#[must_use]
pub fn resonance_constant(pot: &Potential) -> f64 {
    4.0 * (pot.lipschitz() + 2.0)
}

/// Tunables of the full gap pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub ell: i64,
    pub scan: ScanParams,
    pub m_range: (i64, i64),
    pub n_bar: i64,
    pub pregap_grid: usize,
    /// Trim of the split edges; `None` uses twice the fattening of the
    /// spectrum-free sweep.
    pub margin: Option<f64>,
    /// Fibonacci scales above `N̄` checked for periodic spectra.
    pub free_count: usize,
    pub free_grid: usize,
    pub zero_n: i64,
    pub k_range: (i64, i64),
    pub disk_r: f64,
    /// Energy of the zero diagnostics, above the lower split edge.
    pub e_offset: f64,
    pub drop_scales: (i64, i64),
    pub annuli: DropAnnuli,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            ell: 1,
            scan: ScanParams::default(),
            m_range: (-30, 30),
            n_bar: 150,
            pregap_grid: 64,
            margin: None,
            free_count: 2,
            free_grid: 1 << 16,
            zero_n: 60,
            k_range: (-40, 40),
            disk_r: 1e-2,
            e_offset: 2e-3,
            drop_scales: (60, 180),
            annuli: DropAnnuli::symmetric(0.1, 1e-3),
        }
    }
}

/// Everything the pipeline certified along the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub pair: Dichotomy,
    pub resonance: Resonance,
    pub pregap: PreGap,
    pub free_scales: Vec<i64>,
    /// Periodic spectra at `free_scales` avoid the middle half of the pre-gap.
    pub spectrum_free: bool,
    pub energy: f64,
    pub zeros: Vec<ZeroSeqEntry>,
    /// Fraction of disks holding a conjugate pair off the circle.
    pub paired_fraction: f64,
    pub drop: DensityDrop,
}

/// Dichotomy scan, resonance, pre-gap at `N̄`, spectrum-free check of its
/// middle half, then the zero sequence and density drop at an energy inside
/// the pre-gap. A spectrum-free scan outcome has no resonance to follow and
/// is reported as `NotFound`.
pub fn gap_pipeline(pot: &Potential, omega: f64, interval: (f64, f64), params: PipelineParams) -> Result<PipelineOutcome> {
    let pair = dichotomy_scan(pot, omega, interval, params.ell, params.scan)?;
    let Dichotomy::RegularPair { scale, pos, neg, .. } = &pair else {
        return Err(Error::NotFound);
    };
    let branches = DirichletBranches { pot, omega, window: Window::centered(*scale) };
    let resonance = find_resonance(&branches, omega, pos, neg, params.m_range, resonance_constant(pot), *scale)?;
    let margin = params.margin.unwrap_or(2.0 * pot.motion_constant() / params.free_grid as f64);
    let pp = PregapParams { half_width: None, grid: params.pregap_grid, margin };
    let mut pregap = build_pregap(pot, omega, &resonance, params.n_bar, pp)?;
    pregap.resonance = Some(0);
    let free_scales = fibonacci_scales(omega, params.n_bar, params.free_count)?;
    let spectrum_free = spectrum_free_check(pot, omega, pregap.core(), &free_scales, params.free_grid)?;
    let energy = pregap.edges.0 + params.e_offset;
    precondition(energy > pregap.lo && energy < pregap.hi, "diagnostic energy must lie in the pre-gap")?;
    let zeros = complex_zero_sequence(pot, omega, energy, params.zero_n, resonance.x0, params.k_range, params.disk_r)?;
    let paired = zeros.iter().filter(|z| z.has_complex_pair(0.0) && z.conjugate_paired(1e-6)).count();
    let paired_fraction = paired as f64 / zeros.len().max(1) as f64;
    let drop = density_drop(pot, omega, energy, params.drop_scales.0, params.drop_scales.1, params.annuli)?;
    Ok(PipelineOutcome { pair, resonance, pregap, free_scales, spectrum_free, energy, zeros, paired_fraction, drop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::golden_mean;
    use crate::zerocount::Analytic;

    #[test]
    fn constant_potential_bands_are_fattened_points() {
        let pot = Potential::constant(0.5);
        let n = 3;
        let r = spectrum_union(&pot, golden_mean(), n, Boundary::Dirichlet, 128).unwrap();
        let fat = pot.motion_constant() / 128.0;
        // window [−3, 3] has 7 sites; regular centers only, so compare to a subset
        for b in &r.bands {
            let mid = 0.5 * (b.0 + b.1);
            assert!((b.1 - b.0 - 2.0 * fat).abs() < 1e-12);
            assert!((1..=7).any(|k| (mid - (0.5 - 2.0 * (std::f64::consts::PI * k as f64 / 8.0).cos())).abs() < 1e-10));
        }
        let p = spectrum_union(&pot, golden_mean(), 7, Boundary::Periodic, 128).unwrap();
        for b in &p.bands {
            let mid = 0.5 * (b.0 + b.1);
            assert!((0..7).any(|k| (mid - (0.5 - 2.0 * (TAU * k as f64 / 7.0).cos())).abs() < 1e-9));
        }
    }

    #[test]
    fn amo_hull_and_gaps() {
        let pot = Potential::amo(3.0);
        let r = spectrum_union(&pot, golden_mean(), 50, Boundary::Dirichlet, 512).unwrap();
        let bound = 2.0 + pot.sup_norm() + pot.motion_constant() / 512.0;
        assert!(r.hull.0 >= -bound && r.hull.1 <= bound);
        assert!(r.gaps_wider_than(1.0).len() >= 2, "{:?}", r.gaps);
        for w in r.bands.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
    }

    fn seg(j: usize, x: (f64, f64), e: (f64, f64), sign: i8) -> Segment {
        Segment { j, x_lo: x.0, x_hi: x.1, i_lo: 0, i_hi: 0, e_lo: e.0, e_hi: e.1, slope_sign: sign, min_abs_slope: 1.0, regular: true }
    }

    #[test]
    fn synthetic_resonance() {
        let b = |j: usize, x: f64| {
            let x = frac(x);
            if j == 0 { x } else { 1.0 - x }
        };
        let pos = seg(0, (0.1, 0.9), (0.1, 0.9), 1);
        let neg = seg(1, (0.1, 0.9), (0.1, 0.9), -1);
        let r = find_resonance(&b, 0.25, &pos, &neg, (1, 3), 3.0, 1).unwrap();
        assert_eq!(r.m, 1);
        assert!((r.x0 - 0.375).abs() < 1e-10, "{r:?}");
        assert!(r.mismatch < 1e-12);
        let far = seg(1, (0.1, 0.9), (0.95, 0.99), -1);
        assert_eq!(find_resonance(&b, 0.25, &pos, &far, (1, 3), 3.0, 1), Err(Error::NotFound));
    }

    #[test]
    fn two_level_examples() {
        let e = 0.3;
        let t = two_level_split(|x| -x, |x| x, |_| e, (-1.0, 1.0), 200).unwrap();
        assert!((t.gap - 2.0 * e).abs() < 1e-12);
        for (i, &x) in t.xs.iter().enumerate() {
            assert!((t.e_plus[i] - x.hypot(e)).abs() < 1e-12);
            assert!((t.e_minus[i] + x.hypot(e)).abs() < 1e-12);
        }
        let z = two_level_split(|x| -x, |x| x, |_| 0.0, (-1.0, 1.0), 200).unwrap();
        assert!(z.gap.abs() < 1e-12);
        let v = two_level_split(|x| -x, |x| x, |x| e * (1.0 + x * x), (-1.0, 0.7), 171).unwrap();
        assert!((v.gap - 2.0 * e).abs() < 1e-9, "{}", v.gap);
    }

    #[test]
    fn synthetic_pregap() {
        let e = 0.2;
        let b = move |j: usize, x: f64| {
            let (p, m) = split_pair(-x, x, e);
            if j == 0 { m } else { p }
        };
        let tol = 1e-3;
        let g = pregap_from_branches(&b, 0, (-0.5, 0.6), 64, tol, 1).unwrap();
        assert!((g.lo - (-e + tol)).abs() < 1e-10 && (g.hi - (e - tol)).abs() < 1e-10, "{g:?}");
        assert!((g.x_max.abs()) < 1e-6 && g.x_min.abs() < 1e-6);
        let flat = |j: usize, x: f64| {
            let (p, m) = split_pair(-x, x, 0.0);
            if j == 0 { m } else { p }
        };
        assert!(matches!(pregap_from_branches(&flat, 0, (-0.5, 0.6), 64, 0.0, 1), Err(Error::NoSplit(_))));
    }

    #[test]
    fn zero_sequence_outside_hull_is_empty() {
        let pot = Potential::amo(3.0);
        let e_val = pot.sup_norm() + 3.0;
        let seq = complex_zero_sequence(&pot, golden_mean(), e_val, 20, 0.1, (-3, 3), 1e-2).unwrap();
        assert_eq!(seq.len(), 7);
        assert!(seq.iter().all(|s| s.count == 0));
    }

    #[test]
    fn zero_sequence_conjugate_symmetry() {
        let pot = Potential::amo(3.0);
        let f = PhaseDeterminant::new(&pot, Window::centered(8), golden_mean(), Complex64::new(1.3, 0.0));
        let zs = crate::zerocount::annulus_zeros(&f, 0.9, 1.1).unwrap();
        assert!(!zs.is_empty());
        let entry = ZeroSeqEntry { k: 0, count: zs.len(), zeros: zs.iter().map(|&z| phase_coords(z)).collect() };
        assert!(entry.conjugate_paired(1e-8));
    }

    #[test]
    fn density_drop_examples() {
        let pot = Potential::amo(3.0);
        let far = pot.sup_norm() + 3.0;
        let d = density_drop(&pot, golden_mean(), far, 20, 60, DropAnnuli::symmetric(0.1, 1e-3)).unwrap();
        assert_eq!((d.m_wide, d.m_narrow, d.drop), (0.0, 0.0, 0.0));
        // planted ladder: zeros at radii 1.05 and 1/1.05 on n lattice angles
        let ladder = |n: usize| {
            move |z: Complex64| {
                let (mut f, mut dlog) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
                for k in 1..=n {
                    for rad in [1.05, 1.0 / 1.05] {
                        let zk = Complex64::from_polar(rad, TAU * k as f64 * golden_mean());
                        f *= z - zk;
                        dlog += 1.0 / (z - zk);
                    }
                }
                (f, f * dlog)
            }
        };
        let d = density_drop_for(&Analytic(ladder(10)), 10, &Analytic(ladder(30)), 30, DropAnnuli::symmetric(0.1, 1e-3)).unwrap();
        assert_eq!(d.drop, 2.0);
    }

    #[test]
    fn ns_examples() {
        let zero = Potential::zero();
        assert!(ns_condition(&zero, 0.1, golden_mean(), 3.0, 6, 0.5).unwrap());
        // windows of 5, 4, 4, 3 free sites all have spectrum within 0.7 of 0
        assert!(!ns_condition(&zero, 0.1, golden_mean(), 0.0, 5, 0.7).unwrap());
        assert!(ns_condition(&zero, 0.1, golden_mean(), 0.0, 5, 0.1).unwrap());
    }

    #[test]
    fn unconditional_examples() {
        let pot = Potential::constant(0.3);
        let u = unconditional_check(&pot, 0.0, golden_mean(), 20, 7, f64::INFINITY, 16).unwrap();
        assert!(u.unconditional);
        let free = |n: usize, k: usize| 0.3 - 2.0 * (std::f64::consts::PI * k as f64 / (n + 1) as f64).cos();
        let want = (1..=19).map(|k| (free(19, k) - u.e0).abs()).fold(f64::INFINITY, f64::min);
        assert!((u.d_left - want).abs() < 1e-12 && (u.d_right - want).abs() < 1e-12);
        assert!(!unconditional_check(&pot, 0.0, golden_mean(), 20, 7, 1e-6, 16).unwrap().unconditional);
    }

    #[test]
    fn spectrum_free_examples() {
        let zero = Potential::zero();
        let scales = fibonacci_scales(golden_mean(), 10, 3).unwrap();
        assert_eq!(scales, vec![13, 21, 34]);
        assert!(spectrum_free_check(&zero, golden_mean(), (3.0, 4.0), &scales, 128).unwrap());
        assert!(!spectrum_free_check(&zero, golden_mean(), (-0.1, 0.1), &scales, 128).unwrap());
        assert!(matches!(spectrum_free_check(&zero, 0.5, (3.0, 4.0), &[3, 5], 128), Err(Error::Frequency(_))));
    }

    #[test]
    fn dichotomy_examples() {
        let zero = Potential::zero();
        let p = ScanParams { grid: 128, ..ScanParams::default() };
        assert!(matches!(dichotomy_scan(&zero, golden_mean(), (3.0, 4.0), 2, p).unwrap(), Dichotomy::SpectrumFree(_)));
        assert!(matches!(dichotomy_scan(&zero, golden_mean(), (3.0, 3.0), 2, p), Err(Error::Undecided(_))));
        let amo = Potential::amo(3.0);
        match dichotomy_scan(&amo, golden_mean(), (-1.0, 1.0), 2, p).unwrap() {
            Dichotomy::RegularPair { common, .. } => assert!(common.1 - common.0 >= 1e-4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn triple_scan_examples() {
        let flat = Potential::constant(1.0);
        let g = crate::rellich::trace_graph(&flat, golden_mean(), 3, 64).unwrap();
        assert!(!triple_resonance_scan(&flat, &g, (1, 2), (3, 4), 1e-8, None).is_empty());
        let amo = Potential::amo(3.0);
        let g = crate::rellich::trace_graph(&amo, golden_mean(), 3, 64).unwrap();
        assert!(triple_resonance_scan(&amo, &g, (1, 5), (6, 9), 0.0, None).is_empty());
    }
}
