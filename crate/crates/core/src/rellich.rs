//! Eigenvalues `E_j(x)` of `H_{[−N,N]}(x, ω)` as functions of the phase.
//!
//! Dirichlet spectra are simple, so sorting labels the branches; cells where
//! branches move more than half their local gap are bisected.

use serde::{Deserialize, Serialize};

use crate::eigen::{bisect_eigs, eigenvector, eigenvector_relaxed, localization_center, site_values, tridiagonal_eigs, Window};
use crate::error::{precondition, Result};
use crate::model::Potential;
use crate::util::{frac, par_map};

/// Maximal bisection depth per grid cell.
pub const REFINE_DEPTH: usize = 10;
/// Extra nodes allowed per grid cell.
const REFINE_BUDGET: usize = 16;
/// Branch pairs closer than this are treated as unresolvable avoided crossings.
const CROSSING_FLOOR: f64 = 1e-9;

/// Sampled Rellich graph over `x ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RellichGraph {
    pub omega: f64,
    /// Half-width: the window is `[−n, n]`.
    pub n: i64,
    pub xs: Vec<f64>,
    /// `energies[i][j] = E_j(xs[i])`, ascending in `j`.
    pub energies: Vec<Vec<f64>>,
    pub slopes: Vec<Vec<f64>>,
    /// Lattice sites of the localization centers.
    pub centers: Vec<Vec<i64>>,
    /// Node inserted by refinement.
    pub refined: Vec<bool>,
    /// Cell `[xs[i], xs[i+1]]` still moves faster than half its local gap.
    pub near_crossing: Vec<bool>,
}

impl RellichGraph {
    pub const CSV_HEADER: &'static str = "x,j,E,slope,center";

    #[must_use]
    pub fn window(&self) -> Window {
        Window::centered(self.n)
    }

    #[must_use]
    pub fn bands(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    /// Graph from precomputed columns; no refinement flags.
    #[must_use]
    pub fn from_parts(omega: f64, n: i64, xs: Vec<f64>, energies: Vec<Vec<f64>>, slopes: Vec<Vec<f64>>, centers: Vec<Vec<i64>>) -> Self {
        let k = xs.len();
        Self { omega, n, xs, energies, slopes, centers, refined: vec![false; k], near_crossing: vec![false; k.saturating_sub(1)] }
    }

    #[must_use]
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::new();
        for (i, x) in self.xs.iter().enumerate() {
            for j in 0..self.energies[i].len() {
                rows.push(format!("{},{},{},{},{}", x, j, self.energies[i][j], self.slopes[i][j], self.centers[i][j]));
            }
        }
        rows
    }

    /// Smallest `E_{j+1} − E_j` at each node.
    #[must_use]
    pub fn min_gaps(&self) -> Vec<f64> {
        self.energies.iter().map(|e| e.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)).collect()
    }
}

/// One node: sorted eigenvalues, Feynman slopes, centers.
struct Column {
    energies: Vec<f64>,
    slopes: Vec<f64>,
    centers: Vec<i64>,
}

/// `∂_x E = Σ_ℓ V′(x + ℓω) ψ(ℓ)²` over the window.
#[must_use]
pub fn feynman_slope(pot: &Potential, x: f64, omega: f64, window: Window, psi: &[f64]) -> f64 {
    (window.lo..=window.hi).zip(psi).map(|(l, p)| pot.deriv_phase(x + l as f64 * omega) * p * p).sum()
}

fn column(pot: &Potential, omega: f64, window: Window, x: f64) -> Result<Column> {
    let energies = tridiagonal_eigs(&site_values(pot, x, omega, window));
    let mut slopes = Vec::with_capacity(energies.len());
    let mut centers = Vec::with_capacity(energies.len());
    for &ev in &energies {
        let psi = eigenvector_relaxed(pot, x, omega, window, ev)?;
        slopes.push(feynman_slope(pot, x, omega, window, &psi));
        centers.push(window.site(localization_center(&psi)));
    }
    Ok(Column { energies, slopes, centers })
}

/// Some branch moves more than half its local gap across the cell; gaps
/// below the crossing floor do not count.
fn cell_violates(a: &[f64], b: &[f64]) -> bool {
    let gap = |e: &[f64], j: usize| {
        let below = if j > 0 { e[j] - e[j - 1] } else { f64::INFINITY };
        let above = if j + 1 < e.len() { e[j + 1] - e[j] } else { f64::INFINITY };
        below.min(above)
    };
    (0..a.len()).any(|j| {
        let g = gap(a, j).min(gap(b, j));
        g > CROSSING_FLOOR && (b[j] - a[j]).abs() > 0.5 * g
    })
}

fn crossing_cell(a: &[f64], b: &[f64]) -> bool {
    let g = |e: &[f64]| e.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    cell_violates(a, b) || g(a).min(g(b)) <= CROSSING_FLOOR
}

/// Refines one cell; returns the inserted nodes in order.
fn refine_cell(pot: &Potential, omega: f64, window: Window, xa: f64, a: &Column, xb: f64, b: &Column) -> Result<Vec<(f64, Column)>> {
    // in-order insertion; `spent` counts columns across the whole cell
    #[allow(clippy::too_many_arguments)]
    fn rec(
        pot: &Potential,
        omega: f64,
        window: Window,
        (xa, ea): (f64, &[f64]),
        (xb, eb): (f64, &[f64]),
        depth: usize,
        spent: &mut usize,
        out: &mut Vec<(f64, Column)>,
    ) -> Result<()> {
        if depth >= REFINE_DEPTH || *spent >= REFINE_BUDGET || !cell_violates(ea, eb) {
            return Ok(());
        }
        *spent += 1;
        let xm = 0.5 * (xa + xb);
        let cm = column(pot, omega, window, xm)?;
        let em = cm.energies.clone();
        rec(pot, omega, window, (xa, ea), (xm, &em), depth + 1, spent, out)?;
        out.push((xm, cm));
        rec(pot, omega, window, (xm, &em), (xb, eb), depth + 1, spent, out)
    }
    let mut out = Vec::new();
    let mut spent = 0;
    rec(pot, omega, window, (xa, &a.energies), (xb, &b.energies), 0, &mut spent, &mut out)?;
    Ok(out)
}

/// Rellich graph of `H_{[−n,n]}` on `grid_size` equispaced phases in `[0, 1)`,
/// refined where branches move faster than half their local gap.
pub fn trace_graph(pot: &Potential, omega: f64, n: i64, grid_size: usize) -> Result<RellichGraph> {
    precondition(grid_size >= 64, "trace_graph needs grid_size ≥ 64")?;
    trace_graph_unchecked(pot, omega, n, grid_size)
}

pub(crate) fn trace_graph_unchecked(pot: &Potential, omega: f64, n: i64, grid_size: usize) -> Result<RellichGraph> {
    precondition(n >= 0, "window half-width must be ≥ 0")?;
    let window = Window::centered(n);
    let xs: Vec<f64> = (0..grid_size).map(|k| k as f64 / grid_size as f64).collect();
    let base: Vec<Column> = par_map(&xs, |&x| column(pot, omega, window, x)).into_iter().collect::<Result<_>>()?;
    let cells: Vec<usize> = (0..grid_size).collect();
    let inserted: Vec<Vec<(f64, Column)>> = par_map(&cells, |&i| {
        if i + 1 == grid_size {
            return Ok(Vec::new());
        }
        refine_cell(pot, omega, window, xs[i], &base[i], xs[i + 1], &base[i + 1])
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut g = RellichGraph {
        omega,
        n,
        xs: Vec::new(),
        energies: Vec::new(),
        slopes: Vec::new(),
        centers: Vec::new(),
        refined: Vec::new(),
        near_crossing: Vec::new(),
    };
    for ((x, col), extra) in xs.iter().zip(base).zip(inserted) {
        let mut push = |x: f64, c: Column, refined: bool| {
            g.xs.push(x);
            g.energies.push(c.energies);
            g.slopes.push(c.slopes);
            g.centers.push(c.centers);
            g.refined.push(refined);
        };
        push(*x, col, false);
        for (xm, c) in extra {
            push(xm, c, true);
        }
    }
    g.near_crossing = g.energies.windows(2).map(|w| crossing_cell(&w[0], &w[1])).collect();
    Ok(g)
}

/// Feynman slopes recomputed at every node of the graph.
pub fn feynman_slopes(graph: &RellichGraph, pot: &Potential) -> Result<Vec<Vec<f64>>> {
    let window = graph.window();
    let omega = graph.omega;
    let idx: Vec<usize> = (0..graph.xs.len()).collect();
    par_map(&idx, |&i| {
        let x = graph.xs[i];
        graph.energies[i]
            .iter()
            .map(|&ev| eigenvector_relaxed(pot, x, omega, window, ev).map(|psi| feynman_slope(pot, x, omega, window, &psi)))
            .collect::<Result<Vec<f64>>>()
    })
    .into_iter()
    .collect()
}

/// `E_j(x)` alone, by bisection.
#[must_use]
pub fn branch_energy(pot: &Potential, omega: f64, window: Window, j: usize, x: f64) -> f64 {
    bisect_eigs(&site_values(pot, x, omega, window), j, j + 1)[0]
}

/// Central difference `(E_j(x+h) − E_j(x−h))/2h`.
#[must_use]
pub fn fd_slope(pot: &Potential, omega: f64, window: Window, j: usize, x: f64, h: f64) -> f64 {
    (branch_energy(pot, omega, window, j, x + h) - branch_energy(pot, omega, window, j, x - h)) / (2.0 * h)
}

/// A monotone piece of one branch with slope bounded away from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub j: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    /// Node index range `i_lo..=i_hi` inside the segment.
    pub i_lo: usize,
    pub i_hi: usize,
    /// Energy range attained, `I′ ⊆ I`.
    pub e_lo: f64,
    pub e_hi: f64,
    pub slope_sign: i8,
    pub min_abs_slope: f64,
    pub regular: bool,
}

impl Segment {
    #[must_use]
    pub fn width(&self) -> f64 {
        self.e_hi - self.e_lo
    }

    #[must_use]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.x_lo + self.x_hi)
    }
}

/// Maximal runs of nodes per branch with `|slope| ≥ tau`, constant sign and
/// `E ∈ (e_lo, e_hi)`. Ends cut by the energy window are moved to the linear
/// interpolation of the crossing; ends cut by the slope stay on nodes.
#[must_use]
pub fn extract_segments(graph: &RellichGraph, tau: f64, interval: (f64, f64)) -> Vec<Segment> {
    let (lo, hi) = interval;
    let mut out = Vec::new();
    let m = graph.xs.len();
    for j in 0..graph.bands() {
        let sign = |i: usize| if graph.slopes[i][j] > 0.0 { 1i8 } else { -1 };
        let slope_ok = |i: usize| graph.slopes[i][j].abs() >= tau;
        let inside = |i: usize| graph.energies[i][j] > lo && graph.energies[i][j] < hi;
        let mut i = 0;
        while i < m {
            if !(slope_ok(i) && inside(i)) {
                i += 1;
                continue;
            }
            let s = sign(i);
            let start = i;
            while i + 1 < m && slope_ok(i + 1) && inside(i + 1) && sign(i + 1) == s {
                i += 1;
            }
            let end = i;
            i += 1;
            if end == start {
                continue;
            }
            // extend an end into the neighboring cell when only the energy window cuts it
            let crossing = |a: usize, b: usize| -> Option<f64> {
                if !(slope_ok(a) && sign(a) == s) {
                    return None;
                }
                let (ea, eb) = (graph.energies[a][j], graph.energies[b][j]);
                let target = if ea <= lo { lo } else if ea >= hi { hi } else { return None };
                let t = (target - eb) / (ea - eb);
                Some(graph.xs[b] + t * (graph.xs[a] - graph.xs[b]))
            };
            let x_lo = if start > 0 { crossing(start - 1, start).unwrap_or(graph.xs[start]) } else { graph.xs[start] };
            let x_hi = if end + 1 < m { crossing(end + 1, end).unwrap_or(graph.xs[end]) } else { graph.xs[end] };
            let (mut e_min, mut e_max, mut smin) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
            for k in start..=end {
                e_min = e_min.min(graph.energies[k][j]);
                e_max = e_max.max(graph.energies[k][j]);
                smin = smin.min(graph.slopes[k][j].abs());
            }
            if x_lo < graph.xs[start] || x_hi > graph.xs[end] {
                // interpolated ends reach the window boundary
                if s > 0 {
                    if x_lo < graph.xs[start] {
                        e_min = lo;
                    }
                    if x_hi > graph.xs[end] {
                        e_max = hi;
                    }
                } else {
                    if x_lo < graph.xs[start] {
                        e_max = hi;
                    }
                    if x_hi > graph.xs[end] {
                        e_min = lo;
                    }
                }
            }
            let mut seg = Segment {
                j,
                x_lo,
                x_hi,
                i_lo: start,
                i_hi: end,
                e_lo: e_min,
                e_hi: e_max,
                slope_sign: s,
                min_abs_slope: smin,
                regular: false,
            };
            seg.regular = regularity_check(&seg, graph);
            out.push(seg);
        }
    }
    out
}

/// `−N + √N ≤ ν_j(x) ≤ N − √N` at every node of the segment.
#[must_use]
pub fn regularity_check(seg: &Segment, graph: &RellichGraph) -> bool {
    let n = graph.n as f64;
    let (lo, hi) = (-n + n.sqrt(), n - n.sqrt());
    (seg.i_lo..=seg.i_hi).all(|i| {
        let c = graph.centers[i][seg.j] as f64;
        lo <= c && c <= hi
    })
}

/// Errors of the translated eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslateErrors {
    pub x: f64,
    pub k: i64,
    pub center: i64,
    pub err_e: f64,
    pub err_slope: f64,
    pub err_vec: f64,
}

/// Compares `(E_j, ∂_x E_j, ψ_j)` at the segment midpoint `x` with the nearest
/// eigenpair of `H_{[−N,N]}(x + kω)`, whose eigenvector should be `ψ_j(· + k)`
/// centered at `ν − k`.
pub fn translate_check(pot: &Potential, seg: &Segment, graph: &RellichGraph, k: i64) -> Result<TranslateErrors> {
    let window = graph.window();
    let omega = graph.omega;
    let x = seg.midpoint();
    let eigs = tridiagonal_eigs(&site_values(pot, x, omega, window));
    precondition(seg.j < eigs.len(), "band index outside the window")?;
    let ev = eigs[seg.j];
    let psi = eigenvector(pot, x, omega, window, ev)?;
    let nu = window.site(localization_center(&psi));
    let n = graph.n as f64;
    let shifted = (nu - k) as f64;
    precondition(
        -n + n.sqrt() / 2.0 < shifted && shifted < n - n.sqrt() / 2.0,
        format!("shifted center {} leaves the admissible part of [−{n}, {n}]", nu - k),
    )?;
    let xk = x + k as f64 * omega;
    let eigs_k = tridiagonal_eigs(&site_values(pot, xk, omega, window));
    let ev_k = eigs_k.iter().copied().min_by(|a, b| (a - ev).abs().total_cmp(&(b - ev).abs())).unwrap_or(f64::NAN);
    let phi = eigenvector(pot, xk, omega, window, ev_k)?;
    let slope = feynman_slope(pot, x, omega, window, &psi);
    let slope_k = feynman_slope(pot, xk, omega, window, &phi);
    let (mut plus, mut minus) = (0.0, 0.0);
    for (i, m) in (window.lo..=window.hi).enumerate() {
        let s = if window.contains(m + k) { psi[window.index(m + k)] } else { 0.0 };
        plus += (phi[i] - s).powi(2);
        minus += (phi[i] + s).powi(2);
    }
    Ok(TranslateErrors {
        x: frac(x),
        k,
        center: nu,
        err_e: (ev_k - ev).abs(),
        err_slope: (slope_k - slope).abs(),
        err_vec: plus.min(minus).sqrt(),
    })
}

/// Smallest node gap after discarding the fraction `exclude` of nodes with
/// the smallest gaps.
#[must_use]
pub fn separation_profile(graph: &RellichGraph, exclude: f64) -> f64 {
    let mut g = graph.min_gaps();
    g.sort_by(f64::total_cmp);
    let skip = ((g.len() as f64) * exclude).floor() as usize;
    g.get(skip.min(g.len().saturating_sub(1))).copied().unwrap_or(f64::INFINITY)
}
