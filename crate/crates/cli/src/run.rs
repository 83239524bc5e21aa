//! Subcommands. Each one computes its files in memory; they are written
//! only once the whole computation has succeeded, next to a manifest. A
//! failed computation leaves the manifest alone.

use std::path::Path;
use std::time::Instant;

use qplab_core::eigen::{Boundary, Window};
use qplab_core::gaps::{gap_pipeline, spectrum_union, DropAnnuli, PipelineOutcome, PipelineParams, ScanParams, GAP_REPORT_SCHEMA};
use qplab_core::gaps::{dichotomy_scan, find_resonance, resonance_constant, Dichotomy, DirichletBranches, Resonance};
use qplab_core::lyapunov::{finite_lyapunov, LyapunovEstimate};
use qplab_core::rellich::{extract_segments, trace_graph, RellichGraph};
use qplab_core::resultant::{zero_separation_experiment, SeparationSample};
use qplab_core::util::par_map;
use qplab_core::zerocount::annulus_density;
use qplab_core::Error;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::merge::GENEALOGY_SCHEMA;
use crate::verify::{self, CheckRow};

pub const MANIFEST_SCHEMA: u32 = 1;
pub const SPECTRUM_CSV_HEADER: &str = "N,kind,lo,hi";
pub const SEGMENTS_CSV_HEADER: &str = "j,x_lo,x_hi,e_lo,e_hi,slope_sign,min_abs_slope,regular";
pub const ZEROS_CSV_HEADER: &str = "E,N,R1,R2,count,density";
pub const ZERO_SEQUENCE_CSV_HEADER: &str = "k,count,x,y";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Lyapunov,
    Spectrum,
    Rellich,
    Resonance,
    Pregap,
    Zeros,
    Resultant,
    Verify,
}

impl Command {
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Command::Lyapunov => "lyapunov",
            Command::Spectrum => "spectrum",
            Command::Rellich => "rellich",
            Command::Resonance => "resonance",
            Command::Pregap => "pregap",
            Command::Zeros => "zeros",
            Command::Resultant => "resultant",
            Command::Verify => "verify",
        }
    }
}

/// Why a run did not succeed; maps onto the exit code.
#[derive(Debug)]
pub enum Failure {
    /// A numerical routine failed; the name goes into the manifest.
    Numerical { name: &'static str, message: String },
    /// Checks ran but some did not pass.
    Checks(Vec<&'static str>),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numerical { name: e.name(), message: e.to_string() }
    }
}

type Files = Vec<(String, String)>;

fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

/// First error in input order, so the reported failure does not depend on scheduling.
fn collect<T>(v: Vec<qplab_core::Result<T>>) -> Result<Vec<T>, Failure> {
    v.into_iter().collect::<qplab_core::Result<Vec<T>>>().map_err(Failure::from)
}

fn grid_pairs(cfg: &ExperimentConfig) -> Vec<(i64, f64)> {
    cfg.scales.iter().flat_map(|&n| cfg.energies.iter().map(move |&e| (n, e))).collect()
}

fn lyapunov(cfg: &ExperimentConfig) -> Result<Files, Failure> {
    let pairs = grid_pairs(cfg);
    let est = collect(par_map(&pairs, |&(n, e)| finite_lyapunov(&cfg.potential, cfg.omega, e, n, cfg.y, cfg.grid)))?;
    Ok(vec![("lyapunov.csv".into(), csv(LyapunovEstimate::CSV_HEADER, est.iter().map(LyapunovEstimate::csv_row)))])
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Files, Failure> {
    let mut files = Vec::new();
    for &n in &cfg.scales {
        let r = spectrum_union(&cfg.potential, cfg.omega, n, cfg.bc, cfg.grid)?;
        files.push((format!("spectrum_N{n}.csv"), csv(SPECTRUM_CSV_HEADER, r.csv_rows())));
        files.push((format!("gaps_N{n}.json"), json(&r)));
    }
    Ok(files)
}

fn segment_rows(g: &RellichGraph, tau: f64, interval: (f64, f64)) -> Vec<String> {
    extract_segments(g, tau, interval)
        .iter()
        .map(|s| format!("{},{},{},{},{},{},{},{}", s.j, s.x_lo, s.x_hi, s.e_lo, s.e_hi, s.slope_sign, s.min_abs_slope, s.regular))
        .collect()
}

fn rellich(cfg: &ExperimentConfig) -> Result<Files, Failure> {
    let bound = 2.0 + cfg.potential.sup_norm() + 1.0;
    let mut files = Vec::new();
    for &n in &cfg.scales {
        let g = trace_graph(&cfg.potential, cfg.omega, n, cfg.grid)?;
        files.push((format!("rellich_N{n}.csv"), csv(RellichGraph::CSV_HEADER, g.csv_rows())));
        files.push((format!("segments_N{n}.csv"), csv(SEGMENTS_CSV_HEADER, segment_rows(&g, cfg.tau, (-bound, bound)))));
    }
    Ok(files)
}

fn scan_params(cfg: &ExperimentConfig) -> ScanParams {
    ScanParams { grid: cfg.grid, tau: cfg.tau, ..ScanParams::default() }
}

#[derive(Serialize)]
struct ResonanceReport {
    schema: u32,
    interval: (f64, f64),
    ell: i64,
    pair: Dichotomy,
    /// Absent when the scan found the interval free of periodic spectra.
    resonance: Option<Resonance>,
}

fn resonance(cfg: &ExperimentConfig) -> Result<Files, Failure> {
    let pot = &cfg.potential;
    let pair = dichotomy_scan(pot, cfg.omega, cfg.interval, cfg.ell, scan_params(cfg))?;
    let resonance = match &pair {
        Dichotomy::SpectrumFree(_) => None,
        Dichotomy::RegularPair { scale, pos, neg, .. } => {
            let b = DirichletBranches { pot, omega: cfg.omega, window: Window::centered(*scale) };
            Some(find_resonance(&b, cfg.omega, pos, neg, (-cfg.m_max, cfg.m_max), resonance_constant(pot), *scale)?)
        }
    };
    let report = ResonanceReport { schema: 1, interval: cfg.interval, ell: cfg.ell, pair, resonance };
    Ok(vec![("resonance.json".into(), json(&report))])
}

fn pipeline_params(cfg: &ExperimentConfig) -> PipelineParams {
    PipelineParams {
        ell: cfg.ell,
        scan: scan_params(cfg),
        m_range: (-cfg.m_max, cfg.m_max),
        n_bar: cfg.n_bar,
        free_grid: cfg.free_grid,
        zero_n: cfg.zero_n,
        k_range: (-cfg.k_max, cfg.k_max),
        disk_r: cfg.disk_r,
        e_offset: cfg.e_offset,
        drop_scales: cfg.drop_scales,
        annuli: DropAnnuli::symmetric(cfg.annulus_wide, cfg.annulus_narrow),
        ..PipelineParams::default()
    }
}

fn zero_sequence_rows(out: &PipelineOutcome) -> Vec<String> {
    let mut rows = Vec::new();
    for z in &out.zeros {
        if z.zeros.is_empty() {
            rows.push(format!("{},{},,", z.k, z.count));
        }
        rows.extend(z.zeros.iter().map(|(x, y)| format!("{},{},{x},{y}", z.k, z.count)));
    }
    rows
}

fn pregap(cfg: &ExperimentConfig) -> Result<Files, Failure> {
    let out = gap_pipeline(&cfg.potential, cfg.omega, cfg.interval, pipeline_params(cfg))?;
    let mut report = spectrum_union(&cfg.potential, cfg.omega, cfg.n_bar, Boundary::Dirichlet, cfg.grid)?;
    report.resonances.push(out.resonance);
    report.pregaps.push(out.pregap.clone());
    report.zero_sequences.push(out.zeros.clone());
    Ok(vec![
        ("pregap.json".into(), json(&out)),
        ("zero_sequence.csv".into(), csv(ZERO_SEQUENCE_CSV_HEADER, zero_sequence_rows(&out))),
        (format!("gaps_N{}.json", cfg.n_bar), json(&report)),
    ])
}

fn zeros(cfg: &ExperimentConfig) -> Result<Files, Failure> {
    let pairs = grid_pairs(cfg);
    let dens = collect(par_map(&pairs, |&(n, e)| {
        annulus_density(&cfg.potential, cfg.omega, e, Window::from_one(n), cfg.r1, cfg.r2, cfg.locate)
    }))?;
    let rows = dens.iter().map(|d| format!("{},{},{},{},{},{}", d.energy, d.n, d.r1, d.r2, d.count, d.density));
    let mut files = vec![("zeros.csv".to_string(), csv(ZEROS_CSV_HEADER, rows))];
    if cfg.locate {
        files.push(("zeros.json".into(), json(&dens)));
    }
    Ok(files)
}

fn resultant(cfg: &ExperimentConfig) -> Result<Files, Failure> {
    let jobs: Vec<(i64, f64, i64)> =
        grid_pairs(cfg).into_iter().flat_map(|(n, e)| cfg.sep_shifts.iter().map(move |&t| (n, e, t))).collect();
    let (r_lo, r_hi) = cfg.sep_radii;
    let samples = collect(par_map(&jobs, |&(n, e, t)| zero_separation_experiment(&cfg.potential, cfg.omega, e, n, n, t, r_lo, r_hi)))?;
    Ok(vec![("separation.csv".into(), csv(SeparationSample::CSV_HEADER, samples.iter().map(SeparationSample::csv_row)))])
}

/// The table is written even when checks fail; the failure rides alongside.
fn verify_files(cfg: &ExperimentConfig) -> (Files, Option<Failure>) {
    let rows = verify::run_checks(cfg.seed);
    for r in &rows {
        log::info!("{}", r.csv_row());
    }
    let failed: Vec<&'static str> = rows.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    let text = csv(verify::CSV_HEADER, rows.iter().map(CheckRow::csv_row));
    (vec![("verify.csv".into(), text)], (!failed.is_empty()).then_some(Failure::Checks(failed)))
}

#[derive(Serialize)]
struct ErrorInfo {
    name: &'static str,
    message: String,
}

#[derive(Serialize)]
struct Schemas {
    manifest: u32,
    gap_report: u32,
    genealogy: u32,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: u32,
    command: &'static str,
    code_version: &'static str,
    config: &'a ExperimentConfig,
    threads: usize,
    wall_time_s: f64,
    status: &'static str,
    error: Option<ErrorInfo>,
    files: Vec<String>,
    schemas: Schemas,
}

fn write_all(dir: &Path, files: &Files) -> Result<(), Failure> {
    for (name, text) in files {
        std::fs::write(dir.join(name), text).map_err(|e| Failure::Io(format!("{}: {e}", dir.join(name).display())))?;
    }
    Ok(())
}

/// Runs one subcommand and writes its files and manifest into `cfg.out`.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<(), Failure> {
    let start = Instant::now();
    let computed = match cmd {
        Command::Lyapunov => lyapunov(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::Rellich => rellich(cfg),
        Command::Resonance => resonance(cfg),
        Command::Pregap => pregap(cfg),
        Command::Zeros => zeros(cfg),
        Command::Resultant => resultant(cfg),
        Command::Verify => Ok(Vec::new()),
    };
    let (files, outcome) = match (cmd, computed) {
        (Command::Verify, _) => match verify_files(cfg) {
            (files, None) => (files, Ok(())),
            (files, Some(f)) => (files, Err(f)),
        },
        (_, Ok(files)) => (files, Ok(())),
        // a failed computation leaves only the manifest
        (_, Err(f)) => (Vec::new(), Err(f)),
    };

    std::fs::create_dir_all(&cfg.out).map_err(|e| Failure::Io(format!("{}: {e}", cfg.out.display())))?;
    write_all(&cfg.out, &files)?;
    let error = match &outcome {
        Ok(()) => None,
        Err(Failure::Numerical { name, message }) => Some(ErrorInfo { name, message: message.clone() }),
        Err(Failure::Checks(names)) => Some(ErrorInfo { name: "VerifyFailed", message: names.join(",") }),
        Err(Failure::Io(m)) => Some(ErrorInfo { name: "IoError", message: m.clone() }),
    };
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        command: cmd.name(),
        code_version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        status: if outcome.is_ok() { "ok" } else { "error" },
        error,
        files: files.iter().map(|f| f.0.clone()).collect(),
        schemas: Schemas { manifest: MANIFEST_SCHEMA, gap_report: GAP_REPORT_SCHEMA, genealogy: GENEALOGY_SCHEMA },
    };
    write_all(&cfg.out, &vec![("manifest.json".into(), json(&manifest))])?;
    outcome
}
