//! Scenario commands. Each returns a [`RunSummary`] plus the files it wants
//! written.

use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{
    fit_lifetime, kappa_eff, lifetime_window, phase_space_grid, predicted_fidelity, CorrectionBudget, GridSpec,
    LifetimeFit,
};
use crate::circuits::{
    build_correct, build_encode, coding_infidelity, correction_infidelity, qubit_vacuum_vector, run_aqec, run_mbqec,
    AqecOptions, AqecRun, MbqecOptions,
};
use crate::cli::config::ExperimentConfig;
use crate::cli::output::{cycles_csv, fmt_sig, jump_histogram_csv, mbqec_csv, ConvergenceCheck, RunSummary};
use crate::dynamics::IntegratorSettings;
use crate::error::{Error, Result};
use crate::gates::{Executor, PulseSequence};
use crate::hilbert::{partial_trace, JointState, Subsystem};
use crate::states::LogicalQubit;

/// Default waiting times for `sweep-tw`, μs.
pub const DEFAULT_TW_LIST: [f64; 5] = [40.0, 55.0, 65.0, 80.0, 100.0];

/// Extra Fock levels used by the convergence check.
pub const CONVERGENCE_EXTRA_LEVELS: usize = 10;
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

/// Checkpoints understood by `phase-portrait`.
pub const CHECKPOINTS: [&str; 4] = ["vacuum", "displaced", "encoded", "corrected"];

pub type Files = Vec<(String, String)>;

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub summary: RunSummary,
    pub files: Files,
}

fn settings() -> IntegratorSettings {
    IntegratorSettings::sector_exponential()
}

/// Runs `f` on `config`, optionally again with `fock_dim + 10`, and fills in
/// timing and the convergence verdict.
pub fn with_convergence<F>(config: &ExperimentConfig, check: bool, f: F) -> Result<CommandOutput>
where
    F: Fn(&ExperimentConfig) -> Result<CommandOutput>,
{
    let start = Instant::now();
    let mut out = f(config)?;
    if check {
        let bigger = ExperimentConfig {
            fock_dim: config.fock_dim + CONVERGENCE_EXTRA_LEVELS,
            ..config.clone()
        };
        let reference = f(&bigger)?.summary;
        let check = compare_metrics(&out.summary, &reference, None);
        out.summary.publishable = check.passed;
        out.summary.convergence = Some(check);
    }
    out.summary.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Compares the metrics of `run` against a reference run at a larger Fock
/// cutoff, all of them or only those named in `keys`.
pub fn compare_metrics(run: &RunSummary, reference: &RunSummary, keys: Option<&[&str]>) -> ConvergenceCheck {
    let mut deviations = std::collections::BTreeMap::new();
    for (k, &a) in &run.metrics {
        if keys.is_some_and(|ks| !ks.contains(&k.as_str())) {
            continue;
        }
        let b = reference.metric(k).unwrap_or(f64::NAN);
        let d = if a == b { 0.0 } else { (a - b).abs() / a.abs().max(1.0) };
        deviations.insert(k.clone(), if d.is_nan() { f64::INFINITY } else { d });
    }
    let passed = deviations.values().all(|&d| d <= CONVERGENCE_TOLERANCE);
    let fock = |s: &RunSummary| s.config.get("fock_dim").and_then(|v| v.parse().ok()).unwrap_or(0);
    ConvergenceCheck {
        fock_dim: fock(run),
        reference_fock_dim: fock(reference),
        deviations,
        tolerance: CONVERGENCE_TOLERANCE,
        passed,
    }
}

/// Encoder and decoder infidelities with noise.
pub fn cmd_encode_fidelity(config: &ExperimentConfig) -> Result<CommandOutput> {
    config.validate()?;
    let r = coding_infidelity(config, settings())?;
    let mut s = RunSummary::new("encode", config);
    s.metrics.insert("epsilon_encode".into(), r.epsilon_encode);
    s.metrics.insert("epsilon_decode".into(), r.epsilon_decode);
    s.metrics.insert("encode_duration_ns".into(), r.encode_duration_us * 1e3);
    s.metrics.insert("decode_duration_ns".into(), r.decode_duration_us * 1e3);
    Ok(CommandOutput {
        summary: s,
        files: Vec::new(),
    })
}

/// Worst-branch correction infidelity with noise.
pub fn cmd_correct_fidelity(config: &ExperimentConfig) -> Result<CommandOutput> {
    config.validate()?;
    let r = correction_infidelity(config, settings())?;
    let mut s = RunSummary::new("correct", config);
    s.metrics.insert("epsilon_correct".into(), r.epsilon_correct);
    s.metrics.insert("epsilon_correct_branch0".into(), r.per_branch[0]);
    s.metrics.insert("epsilon_correct_branch1".into(), r.per_branch[1]);
    s.metrics.insert("correct_duration_ns".into(), r.duration_us * 1e3);
    Ok(CommandOutput {
        summary: s,
        files: Vec::new(),
    })
}

fn fit_run(run: &AqecRun) -> Result<LifetimeFit> {
    let series: Vec<(usize, f64, f64)> = run.reports.iter().map(|r| (r.cycle, r.time_us, r.fidelity)).collect();
    fit_lifetime(&lifetime_window(&series))
}

/// Cycle length and count for the uncorrected baseline: twenty samples per
/// bare lifetime `T_cav/n̄`, two lifetimes long.
fn baseline_sampling(config: &ExperimentConfig) -> (f64, usize) {
    (config.tcav_us / config.nbar / 20.0, 40)
}

/// Stroboscopic correction run with lifetime fit and the model cross-checks.
pub fn cmd_aqec(config: &ExperimentConfig) -> Result<CommandOutput> {
    config.validate()?;
    let run = run_aqec(config, &AqecOptions::default())?;
    let fit = fit_run(&run)?;
    let eps = correction_infidelity(config, settings())?.epsilon_correct;
    let (kappa, nbar, t_w) = (config.kappa(), config.nbar, config.tw_us);
    let formula = kappa_eff(eps, kappa, nbar, t_w);
    let budget = CorrectionBudget::from_rates(eps, kappa, nbar, run.t_correct, t_w)?;
    let model_dev = run
        .reports
        .iter()
        .take(11)
        .map(|r| (r.fidelity - predicted_fidelity(r.cycle, &budget).0).abs())
        .fold(0.0, f64::max);

    let (cycle, n) = baseline_sampling(config);
    let base_cfg = ExperimentConfig {
        n_cycles: n,
        ..config.clone()
    };
    let base = run_aqec(
        &base_cfg,
        &AqecOptions {
            corrections_enabled: false,
            uncorrected_cycle_us: Some(cycle),
            ..AqecOptions::default()
        },
    )?;
    let base_fit = fit_run(&base)?;

    let mut s = RunSummary::new("aqec", config);
    let m = &mut s.metrics;
    m.insert("t_eff_us".into(), fit.t_eff);
    m.insert("fit_amplitude".into(), fit.amplitude);
    m.insert("fit_residual".into(), fit.residual);
    m.insert("kappa_eff_sim_per_us".into(), fit.decay_rate());
    m.insert("kappa_eff_formula_per_us".into(), formula);
    m.insert("kappa_eff_rel_deviation".into(), (fit.decay_rate() - formula).abs() / formula);
    m.insert("epsilon_correct".into(), eps);
    m.insert("tw_opt_analytic_us".into(), (2.0 * eps).sqrt() / (kappa * nbar));
    m.insert("model_max_abs_deviation_10_cycles".into(), model_dev);
    m.insert("correct_duration_ns".into(), run.t_correct * 1e3);
    m.insert("t_uncorrected_fit_us".into(), base_fit.t_eff);
    m.insert("cavity_baseline_us".into(), config.tcav_us / nbar);
    m.insert("qubit_baseline_us".into(), config.t1_us);
    Ok(CommandOutput {
        summary: s,
        files: vec![
            ("aqec.csv".into(), cycles_csv(&run.reports)),
            ("aqec_uncorrected.csv".into(), cycles_csv(&base.reports)),
        ],
    })
}

/// One point of a waiting-time sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub tw_us: f64,
    pub fit: LifetimeFit,
}

/// Correction loop at each waiting time (in parallel, ordered output).
pub fn sweep_tw(config: &ExperimentConfig, tw_list: &[f64]) -> Result<Vec<SweepPoint>> {
    if tw_list.is_empty() {
        return Err(Error::InvalidArgument("empty T_w list".into()));
    }
    tw_list
        .par_iter()
        .map(|&tw| {
            let c = ExperimentConfig {
                tw_us: tw,
                ..config.clone()
            };
            c.validate()?;
            let fit = fit_run(&run_aqec(&c, &AqecOptions::default())?)?;
            Ok(SweepPoint { tw_us: tw, fit })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn cmd_sweep_tw(config: &ExperimentConfig, tw_list: &[f64]) -> Result<CommandOutput> {
    config.validate()?;
    let points = sweep_tw(config, tw_list)?;
    let best = points
        .iter()
        .min_by(|a, b| a.fit.decay_rate().total_cmp(&b.fit.decay_rate()))
        .expect("non-empty");
    let eps = correction_infidelity(config, settings())?.epsilon_correct;
    let mut s = RunSummary::new("sweep-tw", config);
    s.metrics.insert("tw_opt_us".into(), best.tw_us);
    s.metrics.insert("t_eff_at_opt_us".into(), best.fit.t_eff);
    s.metrics.insert("epsilon_correct".into(), eps);
    s.metrics.insert("tw_opt_analytic_us".into(), (2.0 * eps).sqrt() / (config.kappa() * config.nbar));
    let mut csv = String::from("tw_us,t_eff_us,kappa_eff_per_us,fit_residual,fit_points\n");
    for p in &points {
        s.metrics.insert(format!("kappa_eff_per_us_tw_{}", p.tw_us), p.fit.decay_rate());
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig(p.tw_us),
            fmt_sig(p.fit.t_eff),
            fmt_sig(p.fit.decay_rate()),
            fmt_sig(p.fit.residual),
            p.fit.n_points
        ));
    }
    Ok(CommandOutput {
        summary: s,
        files: vec![("sweep_tw.csv".into(), csv)],
    })
}

/// Measurement-based ensemble.
pub fn cmd_mbqec(config: &ExperimentConfig, n_traj: usize, measurements_per_correction: usize) -> Result<CommandOutput> {
    config.validate()?;
    let options = MbqecOptions {
        measurements_per_correction,
        ..MbqecOptions::from_config(config, n_traj)
    };
    let stats = run_mbqec(config, &options)?;
    let lambda = config.kappa() * config.nbar * config.tw_us;
    let waits: usize = stats.jump_histogram.iter().sum();
    let mean_jumps =
        stats.jump_histogram.iter().enumerate().map(|(k, c)| (k * c) as f64).sum::<f64>() / waits as f64;
    let &(_, _, f, se) = stats.fidelity.last().expect("epoch 0 always present");
    let mut s = RunSummary::new("mbqec", config);
    s.metrics.insert("final_mean_fidelity".into(), f);
    s.metrics.insert("final_stderr".into(), se);
    s.metrics.insert("mean_jumps_per_wait".into(), mean_jumps);
    s.metrics.insert("poisson_mean".into(), lambda);
    s.metrics.insert("corrections_applied".into(), stats.corrections_applied as f64);
    s.metrics.insert("trajectories".into(), n_traj as f64);
    Ok(CommandOutput {
        summary: s,
        files: vec![
            ("mbqec.csv".into(), mbqec_csv(&stats)),
            ("mbqec_jumps.csv".into(), jump_histogram_csv(&stats, lambda)),
        ],
    })
}

/// Cavity states at named points of the encode/correct pipeline, starting
/// from the `+x` logical state.
pub fn portrait_states(config: &ExperimentConfig, checkpoints: &[String]) -> Result<Vec<(String, JointState)>> {
    config.validate()?;
    let cfg = config.hilbert()?;
    let p = config.protocol()?;
    let mut exec = Executor::new(cfg, p.chi, config.noise()?, config.gate_model(), settings())?;
    let vacuum = JointState::pure(cfg, qubit_vacuum_vector(&LogicalQubit::plus(), &cfg))?;
    let encode = build_encode(&p);
    let first = PulseSequence::new(encode.steps()[..1].to_vec())?;
    let mut out = Vec::new();
    let mut encoded: Option<JointState> = None;
    for name in checkpoints {
        let st = match name.as_str() {
            "vacuum" => vacuum.clone(),
            "displaced" => exec.run(&vacuum, &first)?,
            "encoded" | "corrected" => {
                if encoded.is_none() {
                    encoded = Some(exec.run(&vacuum, &encode)?);
                }
                let e = encoded.clone().expect("just set");
                if name == "encoded" {
                    e
                } else {
                    exec.run(&e, &build_correct(&p))?
                }
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown checkpoint '{other}' (expected one of {})",
                    CHECKPOINTS.join(", ")
                )))
            }
        };
        out.push((name.clone(), st));
    }
    Ok(out)
}

/// Grid covering the code with 0.1 spacing.
pub fn portrait_grid(config: &ExperimentConfig) -> GridSpec {
    let half = (config.nbar.sqrt() + 2.0).ceil();
    GridSpec::square(half, (20.0 * half) as usize + 1)
}

pub fn cmd_phase_portrait(config: &ExperimentConfig, checkpoints: &[String]) -> Result<CommandOutput> {
    let states = portrait_states(config, checkpoints)?;
    let grid = portrait_grid(config);
    let mut s = RunSummary::new("phase-portrait", config);
    let mut files = Vec::new();
    for (name, st) in states {
        let q = phase_space_grid(&partial_trace(&st, Subsystem::Cavity), &grid)?;
        let (peak, at) = q.peak();
        s.metrics.insert(format!("peak_{name}"), peak);
        s.metrics.insert(format!("peak_re_{name}"), at.re);
        s.metrics.insert(format!("peak_im_{name}"), at.im);
        files.push((format!("husimi_{name}.csv"), q.to_csv()));
    }
    Ok(CommandOutput { summary: s, files })
}
