//! CSV and JSON emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuits::{CycleReport, MbqecStats};
use crate::cli::config::ExperimentConfig;
use crate::error::Result;

/// 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

pub const CYCLE_HEADER: &str = "cycle,time_us,fidelity,purity,parity";

pub fn cycles_csv(reports: &[CycleReport]) -> String {
    let mut out = format!("{CYCLE_HEADER}\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.cycle,
            fmt_sig(r.time_us),
            fmt_sig(r.fidelity),
            fmt_sig(r.purity),
            fmt_sig(r.parity)
        );
    }
    out
}

pub fn mbqec_csv(stats: &MbqecStats) -> String {
    let mut out = String::from("epoch,time_us,fidelity,stderr\n");
    for &(e, t, f, s) in &stats.fidelity {
        let _ = writeln!(out, "{e},{},{},{}", fmt_sig(t), fmt_sig(f), fmt_sig(s));
    }
    out
}

/// Histogram next to the Poisson expectation for mean `lambda`.
pub fn jump_histogram_csv(stats: &MbqecStats, lambda: f64) -> String {
    let total: usize = stats.jump_histogram.iter().sum();
    let mut out = String::from("jumps,count,poisson_expected\n");
    let mut pk = (-lambda).exp();
    for (k, c) in stats.jump_histogram.iter().enumerate() {
        if k > 0 {
            pk *= lambda / k as f64;
        }
        let _ = writeln!(out, "{k},{c},{}", fmt_sig(pk * total as f64));
    }
    out
}

/// Re-run of the headline metrics at a larger Fock cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub fock_dim: usize,
    pub reference_fock_dim: usize,
    /// `|a − b| / max(1, |a|)` per metric.
    pub deviations: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub config: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, f64>,
    pub convergence: Option<ConvergenceCheck>,
    /// False when a requested convergence check failed.
    pub publishable: bool,
    pub wall_clock_s: f64,
}

impl RunSummary {
    pub fn new(scenario: &str, config: &ExperimentConfig) -> Self {
        Self {
            scenario: scenario.to_string(),
            config: config.to_pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            metrics: BTreeMap::new(),
            convergence: None,
            publishable: true,
            wall_clock_s: 0.0,
        }
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Writes `(file name, contents)` pairs into `dir`, creating it if needed.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, contents) in files {
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}
