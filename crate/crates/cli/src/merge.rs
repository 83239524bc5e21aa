//! Gap genealogy: links the intervals of per-scale gap reports across
//! ascending scales by maximal overlap.

use std::path::Path;

use qplab_core::gaps::{overlap, GapReport, GAP_REPORT_SCHEMA};
use serde::Serialize;

pub const GENEALOGY_SCHEMA: u32 = 1;

#[derive(Debug)]
pub enum MergeError {
    Io(String),
    Schema(String),
}

impl std::fmt::Display for MergeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MergeError::Io(m) => write!(f, "{m}"),
            MergeError::Schema(m) => write!(f, "schema mismatch: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Pregap,
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    #[serde(rename = "N")]
    pub n: i64,
    pub lo: f64,
    pub hi: f64,
    /// Fraction of this interval's width kept by the next node.
    pub kept: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chain {
    pub kind: Kind,
    pub nodes: Vec<Node>,
    /// The chain reaches the largest scale.
    pub survives: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Genealogy {
    pub schema: u32,
    pub scales: Vec<i64>,
    pub chains: Vec<Chain>,
}

/// Reads every `gaps_N*.json` in `dir`; any report with a foreign schema is
/// a schema mismatch.
pub fn read_reports(dir: &Path) -> Result<Vec<GapReport>, MergeError> {
    let entries = std::fs::read_dir(dir).map_err(|e| MergeError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("gaps_N") && n.ends_with(".json")))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p).map_err(|e| MergeError::Io(format!("{}: {e}", p.display())))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| MergeError::Schema(format!("{}: {e}", p.display())))?;
        let schema = v.get("schema").and_then(serde_json::Value::as_u64);
        if schema != Some(u64::from(GAP_REPORT_SCHEMA)) {
            return Err(MergeError::Schema(format!("{}: schema {schema:?}, expected {GAP_REPORT_SCHEMA}", p.display())));
        }
        out.push(serde_json::from_value(v).map_err(|e| MergeError::Schema(format!("{}: {e}", p.display())))?);
    }
    if out.is_empty() {
        return Err(MergeError::Io(format!("{}: no gaps_N*.json reports", dir.display())));
    }
    Ok(out)
}

fn intervals(r: &GapReport, kind: Kind) -> Vec<(f64, f64)> {
    match kind {
        Kind::Pregap => r.pregaps.iter().map(|p| (p.lo, p.hi)).collect(),
        Kind::Gap => r.gaps.clone(),
    }
}

/// Chains of one kind. At each step, candidate links are taken in order of
/// decreasing overlap, each interval joining at most one chain; intervals
/// left over start new chains.
fn link(reports: &[GapReport], kind: Kind) -> Vec<Chain> {
    let last_n = reports.last().map_or(0, |r| r.n);
    let mut chains: Vec<Chain> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    for r in reports {
        let ivs = intervals(r, kind);
        let mut cand: Vec<(f64, usize, usize)> = Vec::new();
        for (ci, &chain) in open.iter().enumerate() {
            let tail = chains[chain].nodes.last().expect("chains are nonempty");
            for (k, iv) in ivs.iter().enumerate() {
                let o = overlap((tail.lo, tail.hi), *iv);
                if o > 0.0 {
                    cand.push((o, ci, k));
                }
            }
        }
        // ties resolve by position, never by hashing
        cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut chain_taken = vec![false; open.len()];
        let mut iv_taken = vec![false; ivs.len()];
        let mut next_open = Vec::new();
        for (o, ci, k) in cand {
            if chain_taken[ci] || iv_taken[k] {
                continue;
            }
            chain_taken[ci] = true;
            iv_taken[k] = true;
            let ch = &mut chains[open[ci]];
            let tail = ch.nodes.last_mut().expect("chains are nonempty");
            tail.kept = Some(o / (tail.hi - tail.lo));
            ch.nodes.push(Node { n: r.n, lo: ivs[k].0, hi: ivs[k].1, kept: None });
            next_open.push(open[ci]);
        }
        for (k, iv) in ivs.iter().enumerate() {
            if !iv_taken[k] {
                chains.push(Chain { kind, nodes: vec![Node { n: r.n, lo: iv.0, hi: iv.1, kept: None }], survives: false });
                next_open.push(chains.len() - 1);
            }
        }
        next_open.sort_unstable();
        open = next_open;
    }
    for ch in &mut chains {
        ch.survives = ch.nodes.last().is_some_and(|n| n.n == last_n);
    }
    chains
}

/// Genealogy of the reports, sorted by scale. Two reports at one scale are
/// a schema mismatch: the ladder would be ambiguous.
pub fn genealogy(mut reports: Vec<GapReport>) -> Result<Genealogy, MergeError> {
    reports.sort_by_key(|r| r.n);
    if let Some(w) = reports.windows(2).find(|w| w[0].n == w[1].n) {
        return Err(MergeError::Schema(format!("two reports at N = {}", w[0].n)));
    }
    let mut chains = link(&reports, Kind::Pregap);
    chains.extend(link(&reports, Kind::Gap));
    Ok(Genealogy { schema: GENEALOGY_SCHEMA, scales: reports.iter().map(|r| r.n).collect(), chains })
}
