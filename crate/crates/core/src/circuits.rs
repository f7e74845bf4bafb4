//! Encode, decode and correction sequences, the autonomous correction loop
//! and the measurement-based variant with parity tracking.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::config::{ExperimentConfig, InitMode};
use crate::dynamics::{Channel, IntegratorSettings, JumpRecord};
use crate::error::{Error, Result};
use crate::gates::{qubit_rotation_unitary, Executor, GateStep, PulseSequence};
use crate::hilbert::{
    fidelity_to_vector, fock_state, normalize, product_vector, CVector, HilbertConfig, JointState,
    Representation, C64, I, ONE, ZERO,
};
use crate::states::{cardinal_states, logical_state, CodeParams, JumpIndex, LogicalQubit};

/// Code and timing parameters of the protocol, with the damped-amplitude
/// quantities derived on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub code: CodeParams,
    /// rad/μs.
    pub chi: f64,
    /// 1/μs.
    pub kappa: f64,
    /// Waiting time between corrections, μs.
    pub t_w: f64,
    /// Duration assigned to each selective rotation, μs.
    pub t_sel: f64,
}

impl ProtocolParams {
    pub fn new(code: CodeParams, chi: f64, kappa: f64, t_w: f64, t_sel: f64) -> Result<Self> {
        if !(chi > 0.0) || !(kappa >= 0.0) || !(t_w >= 0.0) || !(t_sel >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid protocol parameters chi={chi}, kappa={kappa}, t_w={t_w}, t_sel={t_sel}"
            )));
        }
        Ok(Self {
            code,
            chi,
            kappa,
            t_w,
            t_sel,
        })
    }

    pub fn alpha(&self) -> C64 {
        self.code.alpha()
    }

    pub fn nbar(&self) -> f64 {
        self.code.nbar()
    }

    pub fn beta(&self) -> C64 {
        self.code.beta()
    }

    /// `α' = α e^{−κT_w/2}`.
    pub fn alpha_p(&self) -> C64 {
        self.alpha() * (-self.kappa * self.t_w / 2.0).exp()
    }

    pub fn nbar_p(&self) -> f64 {
        self.alpha_p().norm_sqr()
    }

    /// `β' = α'(i − 1)`.
    pub fn beta_p(&self) -> C64 {
        self.alpha_p() * C64::new(-1.0, 1.0)
    }

    /// Re-pump displacement `β'_d = (β − β')/2`: two kicks of `−β'_d` around
    /// a conditional π take `|−β'⟩` on the ground branch to `|−β⟩`.
    pub fn beta_d(&self) -> C64 {
        (self.beta() - self.beta_p()) / 2.0
    }

    /// `π/(2χ)`.
    pub fn quarter_wait(&self) -> f64 {
        PI / (2.0 * self.chi)
    }

    /// `π/χ`.
    pub fn half_wait(&self) -> f64 {
        PI / self.chi
    }

    fn x0(&self, theta: f64, eta: f64) -> GateStep {
        GateStep::SelectiveRotation {
            theta,
            eta,
            duration: self.t_sel,
        }
    }
}

fn seq(steps: Vec<GateStep>) -> PulseSequence {
    PulseSequence::new(steps).expect("compiled steps are finite")
}

/// Encoder: `(c_g|g⟩ + c_e|e⟩) ⊗ |0⟩ → |g⟩ ⊗ (c_g C⁺_α + c_e C⁺_{iα})`.
pub fn build_encode(p: &ProtocolParams) -> PulseSequence {
    let (a, b, nb) = (p.alpha(), p.beta(), p.nbar());
    let w = GateStep::ConditionalWait(p.quarter_wait());
    seq(vec![
        GateStep::Displace(a),
        w,
        GateStep::Displace(-I * a),
        p.x0(-PI / 2.0, 0.0),
        GateStep::Displace(b),
        w,
        p.x0(PI / 2.0, 0.0),
        GateStep::Displace(-I * b),
        w,
        p.x0(-PI, 2.0 * nb),
        GateStep::Displace(-b),
        p.x0(-PI, 2.0 * nb),
        GateStep::Displace(-a),
    ])
}

/// Decoder, mapping the code back onto the qubit with the cavity in `|0⟩`.
pub fn build_decode(p: &ProtocolParams) -> PulseSequence {
    let (a, b, nb) = (p.alpha(), p.beta(), p.nbar());
    let w = GateStep::ConditionalWait(p.quarter_wait());
    seq(vec![
        GateStep::Displace(a),
        p.x0(PI, 0.0),
        GateStep::Displace(I * b),
        w,
        p.x0(PI, -2.0 * nb),
        GateStep::Displace(b),
        w,
        p.x0(-PI / 2.0, 2.0 * nb),
        GateStep::Displace(-I * b),
        p.x0(PI / 2.0, 0.0),
        GateStep::Displace(-I * a),
        w,
        GateStep::Displace(-a),
    ])
}

/// The three correction blocks: entropy transfer to the qubit followed by
/// reset, re-pumping of the amplitude, and re-encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionParts {
    pub transfer: PulseSequence,
    pub repump: PulseSequence,
    pub reencode: PulseSequence,
}

pub fn build_correct_parts(p: &ProtocolParams) -> CorrectionParts {
    let (a, b, nb) = (p.alpha(), p.beta(), p.nbar());
    let (ap, bp, nbp, bd) = (p.alpha_p(), p.beta_p(), p.nbar_p(), p.beta_d());
    let w = GateStep::ConditionalWait(p.quarter_wait());
    let transfer = seq(vec![
        GateStep::Displace(I * ap),
        p.x0(PI, -2.0 * nbp),
        GateStep::Displace(-bp),
        w,
        p.x0(PI, -2.0 * nbp),
        GateStep::Displace(I * bp),
        w,
        p.x0(PI / 2.0, PI / 2.0),
        GateStep::Reset,
    ]);
    let repump = seq(vec![
        p.x0(PI, nb - nbp - PI / 4.0),
        GateStep::Displace(-bd),
        GateStep::ConditionalWait(p.half_wait()),
        GateStep::Displace(-bd),
        p.x0(-PI, 0.0),
    ]);
    let reencode = seq(vec![
        p.x0(PI / 2.0, 0.0),
        GateStep::Displace(b),
        w,
        p.x0(PI / 2.0, 0.0),
        GateStep::Displace(-I * b),
        w,
        p.x0(-PI, 2.0 * nb),
        GateStep::Displace(-b),
        p.x0(-PI, 2.0 * nb),
        GateStep::Displace(-a),
    ]);
    CorrectionParts {
        transfer,
        repump,
        reencode,
    }
}

/// Full correction: transfer, reset, re-pump, re-encode.
pub fn build_correct(p: &ProtocolParams) -> PulseSequence {
    let parts = build_correct_parts(p);
    parts.transfer.concat(&parts.repump).concat(&parts.reencode)
}

/// `|g⟩ ⊗ ψ^(n)_α` for the given code.
pub fn logical_joint_vector(n: JumpIndex, code: &CodeParams, q: &LogicalQubit, cfg: &HilbertConfig) -> Result<CVector> {
    Ok(product_vector(ONE, ZERO, &logical_state(n, code, q, cfg)?))
}

/// `(c_g|g⟩ + c_e|e⟩) ⊗ |0⟩`.
pub fn qubit_vacuum_vector(q: &LogicalQubit, cfg: &HilbertConfig) -> CVector {
    product_vector(q.c_g(), q.c_e(), &fock_state(0, cfg))
}

/// Expectation of the cavity parity `I ⊗ Π`.
pub fn parity_expectation(state: &JointState) -> f64 {
    let n = state.config().fock_dim();
    let sign = |k: usize| if (k % n).is_multiple_of(2) { 1.0 } else { -1.0 };
    match state.representation() {
        Representation::Pure(v) => v.iter().enumerate().map(|(k, z)| sign(k) * z.norm_sqr()).sum(),
        Representation::Density(m) => (0..m.nrows()).map(|k| sign(k) * m[(k, k)].re).sum(),
    }
}

/// One row of the correction-loop record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: usize,
    pub time_us: f64,
    pub fidelity: f64,
    pub purity: f64,
    pub parity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AqecOptions {
    /// Logical state stored in the code.
    pub logical: LogicalQubit,
    /// When false the loop only waits `T_w + T_c` per cycle.
    pub corrections_enabled: bool,
    /// Cycle length used instead of `T_w + T_c` when corrections are off.
    pub uncorrected_cycle_us: Option<f64>,
    pub settings: IntegratorSettings,
}

impl Default for AqecOptions {
    fn default() -> Self {
        Self {
            logical: LogicalQubit::plus(),
            corrections_enabled: true,
            uncorrected_cycle_us: None,
            settings: IntegratorSettings::sector_exponential(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AqecRun {
    pub reports: Vec<CycleReport>,
    pub final_state: JointState,
    /// Correction sequence duration `T_c`, μs.
    pub t_correct: f64,
}

fn report(cycle: usize, state: &JointState, target: &CVector) -> CycleReport {
    CycleReport {
        cycle,
        time_us: state.time_tag,
        fidelity: fidelity_to_vector(state, target),
        purity: state.purity().clamp(0.0, 1.0),
        parity: parity_expectation(state).clamp(-1.0, 1.0),
    }
}

/// Initial joint state according to `init_mode`.
pub fn initial_state(config: &ExperimentConfig, exec: &mut Executor, q: &LogicalQubit) -> Result<JointState> {
    let cfg = config.hilbert()?;
    let p = config.protocol()?;
    match config.init_mode {
        InitMode::IdealState => JointState::pure(cfg, logical_joint_vector(JumpIndex::new(0), &p.code, q, &cfg)?),
        InitMode::FullEncode => {
            let st = JointState::pure(cfg, qubit_vacuum_vector(q, &cfg))?;
            Ok(exec.run(&st, &build_encode(&p))?.with_time(0.0))
        }
    }
}

/// Stroboscopic autonomous correction: wait `T_w`, correct, record; repeated
/// `n_cycles` times. Cycle 0 is the initial state at `t = 0`.
pub fn run_aqec(config: &ExperimentConfig, options: &AqecOptions) -> Result<AqecRun> {
    config.validate()?;
    let cfg = config.hilbert()?;
    let p = config.protocol()?;
    let mut exec = Executor::new(cfg, p.chi, config.noise()?, config.gate_model(), options.settings)?;
    let q = options.logical;
    let target = logical_joint_vector(JumpIndex::new(0), &p.code, &q, &cfg)?;
    let correct = build_correct(&p);
    let t_c = correct.total_duration();
    let wait = if options.corrections_enabled {
        PulseSequence::new(vec![GateStep::ConditionalWait(p.t_w)])?
    } else {
        let t = options.uncorrected_cycle_us.unwrap_or(p.t_w + t_c);
        PulseSequence::new(vec![GateStep::ConditionalWait(t)])?
    };
    let mut state = initial_state(config, &mut exec, &q)?.into_density();
    let mut reports = vec![report(0, &state, &target)];
    for cycle in 1..=config.n_cycles {
        state = exec.run(&state, &wait)?;
        if options.corrections_enabled {
            state = exec.run(&state, &correct)?;
        }
        reports.push(report(cycle, &state, &target));
    }
    Ok(AqecRun {
        reports,
        final_state: state,
        t_correct: t_c,
    })
}

/// Projective parity measurement with projectors `I ⊗ (I ± Π)/2`.
pub fn parity_measure<R: Rng + ?Sized>(state: &JointState, rng: &mut R) -> Result<(i8, JointState)> {
    let p_plus = parity_probability_plus(state);
    let outcome: i8 = if rng.random::<f64>() < p_plus { 1 } else { -1 };
    Ok((outcome, parity_project(state, outcome)?.1))
}

/// Projects onto parity `outcome` (±1), returning the branch probability and
/// the renormalized state.
pub fn parity_project(state: &JointState, outcome: i8) -> Result<(f64, JointState)> {
    let cfg = *state.config();
    let n = cfg.fock_dim();
    let keep = |k: usize| (k % n).is_multiple_of(2) == (outcome > 0);
    let p_plus = parity_probability_plus(state);
    let prob = if outcome > 0 { p_plus } else { 1.0 - p_plus };
    if prob < 1e-14 {
        return Err(Error::ZeroProbability(prob));
    }
    let repr = match state.representation() {
        Representation::Pure(v) => {
            let mut w = v.map_with_location(|k, _, z| if keep(k) { z } else { ZERO });
            normalize(&mut w);
            Representation::Pure(w)
        }
        Representation::Density(m) => Representation::Density(
            m.map_with_location(|i, j, z| if keep(i) && keep(j) { z / prob } else { ZERO }),
        ),
    };
    Ok((prob, JointState::from_parts_unchecked(cfg, repr, state.time_tag)))
}

fn parity_probability_plus(state: &JointState) -> f64 {
    (0.5 * (1.0 + parity_expectation(state))).clamp(0.0, 1.0)
}

/// Seeded parity measurement.
pub fn parity_measure_seeded(state: &JointState, seed: u64) -> Result<(i8, JointState)> {
    parity_measure(state, &mut ChaCha20Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MbqecOptions {
    pub n_trajectories: usize,
    pub seed: u64,
    pub logical: LogicalQubit,
    /// Parity measurements per waiting interval.
    pub measurements_per_correction: usize,
    /// Number of wait-and-correct epochs.
    pub n_epochs: usize,
}

impl MbqecOptions {
    pub fn from_config(config: &ExperimentConfig, n_trajectories: usize) -> Self {
        Self {
            n_trajectories,
            seed: config.seed,
            logical: LogicalQubit::plus(),
            measurements_per_correction: 1,
            n_epochs: config.n_cycles,
        }
    }
}

/// Ensemble statistics of the measurement-based protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbqecStats {
    /// `(epoch, time μs, mean fidelity, standard error)`; epoch 0 is the start.
    pub fidelity: Vec<(usize, f64, f64, f64)>,
    /// `jump_histogram[k]` counts waiting intervals with `k` cavity-loss jumps.
    pub jump_histogram: Vec<usize>,
    pub n_trajectories: usize,
    pub corrections_applied: usize,
}

struct TrajectoryResult {
    fidelities: Vec<f64>,
    jumps_per_wait: Vec<usize>,
    corrections: usize,
}

/// Correction for jump count `c` when the last measured parity is `s`:
/// transfer without reset, a qubit rotation returning the ancilla to `|g⟩`,
/// an extra vacuum-selective 2π rotation that undoes the sign flip of
/// `ψ^(2)` and `ψ^(3)`, then re-pump and re-encode.
pub fn build_mbqec_correction(p: &ProtocolParams, c: JumpIndex) -> (PulseSequence, PulseSequence) {
    let parts = build_correct_parts(p);
    let mut tail = PulseSequence::empty();
    let tail_steps = parts.repump.steps().to_vec();
    if c.value() >= 2 {
        tail.push(GateStep::SelectiveRotation {
            theta: 2.0 * PI,
            eta: 0.0,
            duration: p.t_sel,
        })
        .expect("finite");
    }
    let tail = tail
        .concat(&PulseSequence::new(tail_steps).expect("finite"))
        .concat(&parts.reencode);
    (parts.transfer.without_resets(), tail)
}

/// Applies the correction for a jump count on one trajectory: the transfer
/// block, the feedback rotation `R(−s·π/2, 0)` that returns the ancilla to
/// `|g⟩` given the last parity `s`, then the remaining blocks.
pub fn apply_mbqec_correction<R: Rng + ?Sized>(
    exec: &mut Executor,
    cfg: &HilbertConfig,
    correction: &(PulseSequence, PulseSequence),
    psi: CVector,
    last_parity: i8,
    rng: &mut R,
    t: f64,
) -> Result<CVector> {
    let (head, tail) = correction;
    let mut scratch = JumpRecord::default();
    let psi = exec.run_trajectory(psi, head, rng, t, &mut scratch)?;
    let fb = qubit_rotation_unitary(-f64::from(last_parity) * PI / 2.0, 0.0, cfg);
    let psi = fb.matrix() * psi;
    let mut psi = exec.run_trajectory(psi, tail, rng, t, &mut scratch)?;
    normalize(&mut psi);
    Ok(psi)
}

fn run_single_trajectory(
    config: &ExperimentConfig,
    options: &MbqecOptions,
    template: &Executor,
    index: u64,
) -> Result<TrajectoryResult> {
    let cfg = config.hilbert()?;
    let p = config.protocol()?;
    let noise = config.noise()?;
    let mut exec = template.clone();
    let mut rng = ChaCha20Rng::seed_from_u64(options.seed);
    rng.set_stream(index);
    let q = options.logical;
    let target = logical_joint_vector(JumpIndex::new(0), &p.code, &q, &cfg)?;
    let mut psi = target.clone();
    let t_c = build_correct(&p).total_duration();
    let m = options.measurements_per_correction.max(1);
    let sub = p.t_w / m as f64;
    let wait = PulseSequence::new(vec![GateStep::ConditionalWait(sub)])?;
    let corrections: Vec<(PulseSequence, PulseSequence)> =
        JumpIndex::all().iter().map(|&c| build_mbqec_correction(&p, c)).collect();
    let mut fidelities = vec![1.0];
    let mut jumps_per_wait = Vec::with_capacity(options.n_epochs);
    let mut applied = 0;
    let mut t = 0.0;
    for _ in 0..options.n_epochs {
        let mut counter = JumpIndex::new(0);
        let mut last_parity: i8 = 1;
        let mut record = JumpRecord::default();
        for _ in 0..m {
            psi = exec.run_trajectory(psi, &wait, &mut rng, t, &mut record)?;
            t += sub;
            let st = JointState::from_parts_unchecked(cfg, Representation::Pure(psi), t);
            let (outcome, post) = parity_measure(&st, &mut rng)?;
            if outcome != last_parity {
                counter = counter.next();
                last_parity = outcome;
            }
            psi = match post.into_representation() {
                Representation::Pure(v) => v,
                Representation::Density(_) => unreachable!("pure input stays pure"),
            };
        }
        jumps_per_wait.push(record.count(Channel::CavityLoss));
        let needs_correction = counter.value() != 0 || noise.kappa() > 0.0;
        if needs_correction {
            psi = apply_mbqec_correction(&mut exec, &cfg, &corrections[counter.value()], psi, last_parity, &mut rng, t)?;
            applied += 1;
        }
        t += t_c;
        let f = psi.dotc(&target).norm_sqr();
        fidelities.push(f.clamp(0.0, 1.0));
    }
    Ok(TrajectoryResult {
        fidelities,
        jumps_per_wait,
        corrections: applied,
    })
}

/// Measurement-based correction over an ensemble of trajectories.
/// Trajectory `k` draws from stream `k` of a generator seeded with
/// `options.seed`, so results do not depend on scheduling.
pub fn run_mbqec(config: &ExperimentConfig, options: &MbqecOptions) -> Result<MbqecStats> {
    config.validate()?;
    if options.n_trajectories == 0 {
        return Err(Error::InvalidArgument("need at least one trajectory".into()));
    }
    let p = config.protocol()?;
    let mut template = Executor::new(
        config.hilbert()?,
        p.chi,
        config.noise()?,
        config.gate_model(),
        IntegratorSettings::sector_exponential(),
    )?;
    for c in JumpIndex::all() {
        let (head, tail) = build_mbqec_correction(&p, c);
        template.prepare(&head)?;
        template.prepare(&tail)?;
    }
    let results: Vec<Result<TrajectoryResult>> = (0..options.n_trajectories as u64)
        .into_par_iter()
        .map(|k| run_single_trajectory(config, options, &template, k))
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;
    let t_c = build_correct(&p).total_duration();
    let n = results.len() as f64;
    let mut fidelity = Vec::with_capacity(options.n_epochs + 1);
    for e in 0..=options.n_epochs {
        let vals: Vec<f64> = results.iter().map(|r| r.fidelities[e]).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = if vals.len() > 1 {
            vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        fidelity.push((e, e as f64 * (p.t_w + t_c), mean, (var / n).sqrt()));
    }
    let max_jumps = results
        .iter()
        .flat_map(|r| r.jumps_per_wait.iter().copied())
        .max()
        .unwrap_or(0);
    let mut jump_histogram = vec![0usize; max_jumps + 1];
    for r in &results {
        for &j in &r.jumps_per_wait {
            jump_histogram[j] += 1;
        }
    }
    Ok(MbqecStats {
        fidelity,
        jump_histogram,
        n_trajectories: options.n_trajectories,
        corrections_applied: results.iter().map(|r| r.corrections).sum(),
    })
}

/// Infidelities of the encoder and decoder, averaged over the six cardinal
/// logical states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodingReport {
    pub epsilon_encode: f64,
    pub epsilon_decode: f64,
    pub encode_duration_us: f64,
    pub decode_duration_us: f64,
}

/// `ε_encode = 1 − ⟨F⟩` for `|ψ⟩|0⟩ → |g⟩ψ^(0)_α`, and `ε_decode` for the
/// reverse map starting from the ideal code state.
pub fn coding_infidelity(config: &ExperimentConfig, settings: IntegratorSettings) -> Result<CodingReport> {
    config.validate()?;
    let cfg = config.hilbert()?;
    let p = config.protocol()?;
    let mut exec = Executor::new(cfg, p.chi, config.noise()?, config.gate_model(), settings)?;
    let (enc, dec) = (build_encode(&p), build_decode(&p));
    let (mut fe, mut fd) = (0.0, 0.0);
    let states = cardinal_states();
    for (_, q) in &states {
        let code_vec = logical_joint_vector(JumpIndex::new(0), &p.code, q, &cfg)?;
        let vac_vec = qubit_vacuum_vector(q, &cfg);
        let out = exec.run(&JointState::pure(cfg, vac_vec.clone())?, &enc)?;
        fe += fidelity_to_vector(&out, &code_vec);
        let out = exec.run(&JointState::pure(cfg, code_vec)?, &dec)?;
        fd += fidelity_to_vector(&out, &vac_vec);
    }
    let n = states.len() as f64;
    Ok(CodingReport {
        epsilon_encode: 1.0 - fe / n,
        epsilon_decode: 1.0 - fd / n,
        encode_duration_us: enc.total_duration(),
        decode_duration_us: dec.total_duration(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    /// Worst branch.
    pub epsilon_correct: f64,
    /// Infidelity for inputs `ψ^(0)_{α'}` and `ψ^(1)_{α'}`.
    pub per_branch: [f64; 2],
    pub duration_us: f64,
}

/// Correction infidelity: inputs `|g⟩ψ^(k)_{α'}` with `α'` damped over
/// `T_w`, target `|g⟩ψ^(0)_α`, averaged over the cardinal states, worst of
/// `k ∈ {0, 1}`.
pub fn correction_infidelity(config: &ExperimentConfig, settings: IntegratorSettings) -> Result<CorrectionReport> {
    config.validate()?;
    let cfg = config.hilbert()?;
    let p = config.protocol()?;
    let mut exec = Executor::new(cfg, p.chi, config.noise()?, config.gate_model(), settings)?;
    let cor = build_correct(&p);
    let damped = CodeParams::new(p.alpha_p())?;
    let states = cardinal_states();
    let mut per_branch = [0.0; 2];
    for (k, eps) in per_branch.iter_mut().enumerate() {
        let mut f = 0.0;
        for (_, q) in &states {
            let input = logical_joint_vector(JumpIndex::new(k as i64), &damped, q, &cfg)?;
            let target = logical_joint_vector(JumpIndex::new(0), &p.code, q, &cfg)?;
            let out = exec.run(&JointState::pure(cfg, input)?, &cor)?;
            f += fidelity_to_vector(&out, &target);
        }
        *eps = 1.0 - f / states.len() as f64;
    }
    Ok(CorrectionReport {
        epsilon_correct: per_branch[0].max(per_branch[1]),
        per_branch,
        duration_us: cor.total_duration(),
    })
}
