//! `qplab`: experiment driver for finite-volume quasi-periodic Schrödinger
//! operators.
//!
//! Exit codes: 0 success, 2 configuration error (nothing written), 3
//! numerical failure, failed check, or report schema mismatch, 1 I/O error.

mod config;
mod merge;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{insert, parse_pairs, ExperimentConfig};
use run::{Command, Failure};

#[derive(Parser)]
#[command(name = "qplab", version, about = "Finite-volume spectra, Lyapunov exponents, zero counts and gap construction")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Opts {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// amo, constant, zero or trig.
    #[arg(long, global = true)]
    potential: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Decimal, golden or silver.
    #[arg(long, global = true)]
    omega: Option<String>,
    /// Comma-separated scales, ascending.
    #[arg(long = "N", global = true)]
    scales: Option<String>,
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    threads: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Comma-separated energies.
    #[arg(long = "E", global = true, allow_hyphen_values = true)]
    energies: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Finite-scale Lyapunov exponents over energies and scales.
    Lyapunov,
    /// Union of finite-volume spectra over phases, with bands and gaps.
    Spectrum,
    /// Eigenvalue graphs over the phase and their monotone segments.
    Rellich,
    /// Regular segment pair and resonance in the configured interval.
    Resonance,
    /// The full pre-gap pipeline with zero diagnostics.
    Pregap,
    /// Zero counts of Dirichlet determinants in an annulus.
    Zeros,
    /// Separation of zero sets of shifted determinants.
    Resultant,
    /// Identity and oracle checks.
    Verify,
    /// Link gap reports of several scales into a genealogy.
    #[command(name = "report-merge", alias = "report_merge")]
    ReportMerge { dir: PathBuf },
}

/// Defaults, then the file, then `--set`, then the dedicated flags.
fn layered_config(o: &Opts) -> Result<ExperimentConfig, String> {
    let mut map = match &o.config {
        Some(p) => parse_pairs(&std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?)?,
        None => Default::default(),
    };
    for kv in &o.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
        insert(&mut map, k.trim(), v.trim())?;
    }
    let flags = [
        ("potential", &o.potential),
        ("lambda", &o.lambda),
        ("omega", &o.omega),
        ("N", &o.scales),
        ("grid", &o.grid),
        ("threads", &o.threads),
        ("seed", &o.seed),
        ("E", &o.energies),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            insert(&mut map, k, v)?;
        }
    }
    if let Some(out) = &o.out {
        insert(&mut map, "out", &out.to_string_lossy())?;
    }
    ExperimentConfig::from_map(&map)
}

/// Configured count, else `QPLAB_THREADS`, else rayon's default.
fn init_threads(cfg: &ExperimentConfig) -> Result<(), String> {
    let n = match cfg.threads {
        Some(n) => Some(n),
        None => match std::env::var("QPLAB_THREADS") {
            Ok(v) => Some(v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or(format!("QPLAB_THREADS: bad value '{v}'"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn report_merge(dir: &std::path::Path) -> ExitCode {
    let g = match merge::read_reports(dir).and_then(merge::genealogy) {
        Ok(g) => g,
        Err(merge::MergeError::Schema(m)) => {
            eprintln!("qplab: schema mismatch: {m}");
            return ExitCode::from(3);
        }
        Err(merge::MergeError::Io(m)) => {
            eprintln!("qplab: {m}");
            return ExitCode::from(1);
        }
    };
    let path = dir.join("genealogy.json");
    let text = serde_json::to_string_pretty(&g).expect("plain data serializes") + "\n";
    if let Err(e) = std::fs::write(&path, text) {
        eprintln!("qplab: {}: {e}", path.display());
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cmd = match cli.cmd {
        Cmd::ReportMerge { dir } => return report_merge(&dir),
        Cmd::Lyapunov => Command::Lyapunov,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Rellich => Command::Rellich,
        Cmd::Resonance => Command::Resonance,
        Cmd::Pregap => Command::Pregap,
        Cmd::Zeros => Command::Zeros,
        Cmd::Resultant => Command::Resultant,
        Cmd::Verify => Command::Verify,
    };
    let cfg = match layered_config(&cli.opts).and_then(|c| init_threads(&c).map(|()| c)) {
        Ok(c) => c,
        Err(m) => {
            eprintln!("qplab: config error: {m}");
            return ExitCode::from(2);
        }
    };
    match run::run(cmd, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical { name, message }) => {
            eprintln!("qplab {}: {name}: {message}", cmd.name());
            ExitCode::from(3)
        }
        Err(Failure::Checks(names)) => {
            eprintln!("qplab verify: failed checks: {}", names.join(", "));
            ExitCode::from(3)
        }
        Err(Failure::Io(m)) => {
            eprintln!("qplab: {m}");
            ExitCode::from(1)
        }
    }
}
