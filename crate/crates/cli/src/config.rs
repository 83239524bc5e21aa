//! Experiment configuration: a `key = value` file, then `--set` pairs, then
//! explicit flags, each layer overriding the previous one.

use std::collections::BTreeMap;
use std::path::PathBuf;

use qplab_core::eigen::Boundary;
use qplab_core::model::{parse_omega, Potential};
use serde::Serialize;

/// How the scale list is extended beyond the scales given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ladder {
    None,
    /// `N_{t+1} = 3·N_t`.
    Geometric,
    /// `N_{t+1} = ⌈exp(N_t^δ)⌉`, only sensible for tiny `N_1`.
    Delta,
}

/// Every tunable of every subcommand, validated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub potential: Potential,
    pub potential_spec: String,
    pub omega: f64,
    pub omega_spec: String,
    pub scales: Vec<i64>,
    pub ladder: Ladder,
    pub ladder_steps: usize,
    pub delta: f64,
    pub grid: usize,
    pub threads: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub energies: Vec<f64>,
    pub y: f64,
    pub bc: Boundary,
    pub tau: f64,
    pub interval: (f64, f64),
    pub ell: i64,
    pub m_max: i64,
    pub n_bar: i64,
    pub zero_n: i64,
    pub disk_r: f64,
    pub k_max: i64,
    pub r1: f64,
    pub r2: f64,
    pub locate: bool,
    pub annulus_wide: f64,
    pub annulus_narrow: f64,
    pub drop_scales: (i64, i64),
    pub e_offset: f64,
    pub free_grid: usize,
    pub sep_shifts: Vec<i64>,
    pub sep_radii: (f64, f64),
    pub samples: usize,
}

pub const KEYS: &[&str] = &[
    "potential", "lambda", "constant", "coeffs", "rho0", "omega", "N", "ladder", "ladder_steps", "delta", "grid",
    "threads", "seed", "out", "E", "e_lo", "e_hi", "e_count", "y", "bc", "tau", "interval", "ell", "m_max", "n_bar", "zero_n",
    "disk_r", "k_max", "r1", "r2", "locate", "annulus_wide", "annulus_narrow", "drop_scales", "e_offset",
    "free_grid", "sep_shifts", "sep_radii", "samples",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        insert(&mut map, k.trim(), v.trim())?;
    }
    Ok(map)
}

/// Adds one `key=value`, rejecting unknown keys.
pub fn insert(map: &mut BTreeMap<String, String>, key: &str, value: &str) -> Result<(), String> {
    if !KEYS.contains(&key) {
        return Err(format!("unknown key '{key}'"));
    }
    map.insert(key.to_string(), value.to_string());
    Ok(())
}

fn get<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, String> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| format!("{key}: cannot parse '{v}'")),
    }
}

fn list<T: std::str::FromStr>(v: &str, key: &str) -> Result<Vec<T>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("{key}: cannot parse '{s}'")))
        .collect()
}

fn pair<T: std::str::FromStr + Copy>(map: &BTreeMap<String, String>, key: &str, default: (T, T)) -> Result<(T, T), String> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => match list::<T>(v, key)?.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(format!("{key}: expected two comma-separated values")),
        },
    }
}

fn positive(key: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{key} must be positive (got {v})"))
    }
}

fn potential(map: &BTreeMap<String, String>) -> Result<(Potential, String), String> {
    let kind = map.get("potential").map_or("amo", String::as_str);
    let rho0: f64 = get(map, "rho0", 0.5)?;
    let pot = match kind {
        "amo" => {
            let lambda: f64 = get(map, "lambda", 3.0)?;
            if !lambda.is_finite() {
                return Err("lambda must be finite".into());
            }
            (Potential::amo(lambda).with_rho0(rho0), format!("amo(lambda={lambda})"))
        }
        "constant" => {
            let c: f64 = get(map, "constant", 0.0)?;
            (Potential::constant(c).with_rho0(rho0), format!("constant({c})"))
        }
        "zero" => (Potential::zero().with_rho0(rho0), "zero".to_string()),
        "trig" => {
            // k:re:im, comma separated
            let spec = map.get("coeffs").ok_or("potential = trig needs coeffs")?;
            let mut coeffs = Vec::new();
            for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let parts: Vec<&str> = item.split(':').collect();
                let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("coeffs: bad number '{s}'"));
                let (k, re, im) = match parts.as_slice() {
                    [k, re] => (k, parse(re)?, 0.0),
                    [k, re, im] => (k, parse(re)?, parse(im)?),
                    _ => return Err(format!("coeffs: expected k:re[:im], got '{item}'")),
                };
                let k: i32 = k.trim().parse().map_err(|_| format!("coeffs: bad mode '{k}'"))?;
                coeffs.push((k, num_complex::Complex64::new(re, im)));
            }
            let p = Potential::new(&coeffs, rho0).map_err(|e| e.to_string())?;
            (p, format!("trig({spec})"))
        }
        other => return Err(format!("unknown potential '{other}'")),
    };
    if !(rho0 > 0.0 && rho0 < 1.0) {
        return Err(format!("rho0 = {rho0} must lie in (0, 1)"));
    }
    Ok(pot)
}

fn ladder(scales: &[i64], ladder: Ladder, steps: usize, delta: f64) -> Result<Vec<i64>, String> {
    let mut out = scales.to_vec();
    let Some(&last) = scales.last() else { return Ok(out) };
    let mut n = last;
    for _ in 0..steps {
        n = match ladder {
            Ladder::None => break,
            Ladder::Geometric => n.checked_mul(3).ok_or("scale ladder overflows")?,
            Ladder::Delta => {
                let next = (n as f64).powf(delta).exp().ceil();
                if next > 1e6 {
                    return Err(format!("δ-ladder from {n} reaches {next:e}, beyond desk scale"));
                }
                (next as i64).max(n + 1)
            }
        };
        out.push(n);
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Validates a layered key map into a configuration.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, String> {
        let (potential, potential_spec) = potential(map)?;
        let omega_spec = map.get("omega").cloned().unwrap_or_else(|| "golden".into());
        let omega = parse_omega(&omega_spec).map_err(|e| e.to_string())?;

        let scales: Vec<i64> = list(map.get("N").map_or("50", String::as_str), "N")?;
        if scales.is_empty() || scales.iter().any(|&n| n < 1) {
            return Err("N: scales must be positive integers".into());
        }
        if scales.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("N: scales must be strictly ascending, got {scales:?}"));
        }
        let ladder_kind = match map.get("ladder").map_or("none", String::as_str) {
            "none" => Ladder::None,
            "geometric" => Ladder::Geometric,
            "delta" => Ladder::Delta,
            other => return Err(format!("ladder: unknown kind '{other}'")),
        };
        let ladder_steps: usize = get(map, "ladder_steps", 2)?;
        let delta: f64 = get(map, "delta", 0.5)?;
        positive("delta", delta)?;
        let scales = ladder(&scales, ladder_kind, ladder_steps, delta)?;

        let grid: usize = get(map, "grid", 512)?;
        if grid < 128 {
            return Err(format!("grid must be at least 128 (got {grid})"));
        }
        let threads: Option<usize> = map.get("threads").map(|v| v.parse().map_err(|_| format!("threads: cannot parse '{v}'"))).transpose()?;
        if threads == Some(0) {
            return Err("threads must be positive".into());
        }

        let energies = match map.get("E") {
            Some(v) => list::<f64>(v, "E")?,
            None => {
                let bound = 2.0 + potential.sup_norm();
                let lo: f64 = get(map, "e_lo", -bound)?;
                let hi: f64 = get(map, "e_hi", bound)?;
                let count: usize = get(map, "e_count", 21)?;
                if count == 0 || !(hi >= lo) {
                    return Err("energy range needs e_lo ≤ e_hi and e_count ≥ 1".into());
                }
                (0..count).map(|i| if count == 1 { lo } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 }).collect()
            }
        };
        if energies.iter().any(|e| !e.is_finite()) {
            return Err("E: energies must be finite".into());
        }

        let bc = match map.get("bc").map_or("dirichlet", String::as_str) {
            "dirichlet" => Boundary::Dirichlet,
            "periodic" => Boundary::Periodic,
            "antiperiodic" => Boundary::Antiperiodic,
            other => return Err(format!("bc: unknown boundary condition '{other}'")),
        };

        let c = Self {
            potential,
            potential_spec,
            omega,
            omega_spec,
            scales,
            ladder: ladder_kind,
            ladder_steps,
            delta,
            grid,
            threads,
            seed: get(map, "seed", 1)?,
            out: PathBuf::from(map.get("out").map_or("qplab-out", String::as_str)),
            energies,
            y: get(map, "y", 0.0)?,
            bc,
            tau: get(map, "tau", 1e-3)?,
            interval: pair(map, "interval", (4.3, 5.2))?,
            ell: get(map, "ell", 1)?,
            m_max: get(map, "m_max", 30)?,
            n_bar: get(map, "n_bar", 150)?,
            zero_n: get(map, "zero_n", 60)?,
            disk_r: get(map, "disk_r", 1e-2)?,
            k_max: get(map, "k_max", 40)?,
            r1: get(map, "r1", 0.9)?,
            r2: get(map, "r2", 1.1)?,
            locate: get(map, "locate", false)?,
            annulus_wide: get(map, "annulus_wide", 0.1)?,
            annulus_narrow: get(map, "annulus_narrow", 1e-3)?,
            drop_scales: pair(map, "drop_scales", (60, 180))?,
            e_offset: get(map, "e_offset", 2e-3)?,
            free_grid: get(map, "free_grid", 1 << 16)?,
            sep_shifts: list(map.get("sep_shifts").map_or("1,2,3", String::as_str), "sep_shifts")?,
            sep_radii: pair(map, "sep_radii", (0.95, 1.05))?,
            samples: get(map, "samples", 200)?,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), String> {
        for (k, v) in [
            ("tau", self.tau),
            ("disk_r", self.disk_r),
            ("r1", self.r1),
            ("r2", self.r2),
            ("annulus_wide", self.annulus_wide),
            ("annulus_narrow", self.annulus_narrow),
            ("e_offset", self.e_offset),
        ] {
            positive(k, v)?;
        }
        for (k, v) in [("ell", self.ell), ("m_max", self.m_max), ("n_bar", self.n_bar), ("zero_n", self.zero_n), ("k_max", self.k_max)] {
            positive(k, v as f64)?;
        }
        if self.samples == 0 || self.free_grid < 128 {
            return Err("samples must be positive and free_grid at least 128".into());
        }
        if self.r1 >= self.r2 {
            return Err(format!("need r1 < r2 (got {} and {})", self.r1, self.r2));
        }
        if self.interval.0 >= self.interval.1 {
            return Err(format!("interval {:?} is empty", self.interval));
        }
        if self.drop_scales.0 < 1 || self.drop_scales.1 <= self.drop_scales.0 {
            return Err("drop_scales needs 1 ≤ N < N1".into());
        }
        if self.sep_radii.0 >= self.sep_radii.1 || self.sep_radii.0 <= 0.0 {
            return Err("sep_radii needs 0 < r_lo < r_hi".into());
        }
        if self.y.abs() >= self.potential.rho0() {
            return Err(format!("|y| = {} must stay below rho0 = {}", self.y.abs(), self.potential.rho0()));
        }
        Ok(())
    }
}
