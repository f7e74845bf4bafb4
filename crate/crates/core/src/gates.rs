//! Gate primitives and the pulse-sequence executor.
//!
//! Steps act on the joint state: unconditional displacements, waits under
//! the dispersive Hamiltonian (conditional phases), vacuum-selective qubit
//! rotations and qubit reset.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    dispersive_diagonal, evolve_master_diagonal, IntegrationMethod, IntegratorSettings, JumpRecord,
    MasterPropagator, NoiseModel,
};
use crate::dynamics::DiagonalTrajectory;
use crate::error::{Error, Result};
use crate::hilbert::{
    displacement_operator, normalize, partial_trace, symmetrize, CMatrix, CVector, HilbertConfig, JointState,
    Operator, Representation, Subsystem, C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateStep {
    /// Instantaneous `D_α` on the cavity.
    Displace(C64),
    /// Free evolution under `H = −χ|e⟩⟨e|a†a` for `t` μs.
    ConditionalWait(f64),
    /// `X⁰_{θ,η}` with an assigned duration in μs.
    SelectiveRotation { theta: f64, eta: f64, duration: f64 },
    /// Qubit reset to `|g⟩`.
    Reset,
}

impl GateStep {
    pub fn duration(&self) -> f64 {
        match self {
            GateStep::Displace(_) | GateStep::Reset => 0.0,
            GateStep::ConditionalWait(t) => *t,
            GateStep::SelectiveRotation { duration, .. } => *duration,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            GateStep::Displace(a) => a.re.is_finite() && a.im.is_finite(),
            GateStep::ConditionalWait(t) => *t >= 0.0 && t.is_finite(),
            GateStep::SelectiveRotation { theta, eta, duration } => {
                theta.is_finite() && eta.is_finite() && *duration >= 0.0 && duration.is_finite()
            }
            GateStep::Reset => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid gate step {self:?}")))
        }
    }
}

impl fmt::Display for GateStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateStep::Displace(a) => write!(f, "D {:?},{:?}", a.re, a.im),
            GateStep::ConditionalWait(t) => write!(f, "WAIT {t:?}"),
            GateStep::SelectiveRotation { theta, eta, duration } => {
                write!(f, "X0 {theta:?},{eta:?},{duration:?}")
            }
            GateStep::Reset => write!(f, "RESET"),
        }
    }
}

fn parse_floats(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got '{s}'"));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect()
}

impl FromStr for GateStep {
    type Err = String;

    fn from_str(line: &str) -> std::result::Result<Self, String> {
        let line = line.trim();
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let step = match head {
            "D" => {
                let v = parse_floats(rest, 2)?;
                GateStep::Displace(C64::new(v[0], v[1]))
            }
            "WAIT" => GateStep::ConditionalWait(parse_floats(rest, 1)?[0]),
            "X0" => {
                let v = parse_floats(rest, 3)?;
                GateStep::SelectiveRotation {
                    theta: v[0],
                    eta: v[1],
                    duration: v[2],
                }
            }
            "RESET" if rest.is_empty() => GateStep::Reset,
            _ => return Err(format!("unknown step '{line}'")),
        };
        step.validate().map_err(|e| e.to_string())?;
        Ok(step)
    }
}

/// Ordered gate steps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    steps: Vec<GateStep>,
}

impl PulseSequence {
    pub fn new(steps: Vec<GateStep>) -> Result<Self> {
        for s in &steps {
            s.validate()?;
        }
        Ok(Self { steps })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> &[GateStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.steps.iter().map(GateStep::duration).sum()
    }

    pub fn push(&mut self, step: GateStep) -> Result<()> {
        step.validate()?;
        self.steps.push(step);
        Ok(())
    }

    pub fn concat(&self, other: &PulseSequence) -> PulseSequence {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        PulseSequence { steps }
    }

    /// Copy with every `Reset` removed.
    pub fn without_resets(&self) -> PulseSequence {
        PulseSequence {
            steps: self.steps.iter().copied().filter(|s| *s != GateStep::Reset).collect(),
        }
    }

    pub fn count_selective(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, GateStep::SelectiveRotation { .. }))
            .count()
    }

    /// One step per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the line format; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut steps = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let step = line.parse::<GateStep>().map_err(|message| Error::SequenceParse {
                line: k + 1,
                message,
            })?;
            steps.push(step);
        }
        Ok(Self { steps })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateMode {
    /// Unitary steps only; durations carry no decoherence.
    NoiselessIdeal,
    /// Ideal unitaries, with the noise model acting over every duration.
    IdealWithNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectiveHamiltonian {
    Suspended,
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateModel {
    pub mode: GateMode,
    pub selective_hamiltonian: SelectiveHamiltonian,
    /// Probability that reset leaves the qubit in `|e⟩`.
    pub reset_error: f64,
}

impl GateModel {
    pub fn noiseless() -> Self {
        Self {
            mode: GateMode::NoiselessIdeal,
            selective_hamiltonian: SelectiveHamiltonian::Suspended,
            reset_error: 0.0,
        }
    }

    pub fn with_noise(selective_hamiltonian: SelectiveHamiltonian) -> Self {
        Self {
            mode: GateMode::IdealWithNoise,
            selective_hamiltonian,
            reset_error: 0.0,
        }
    }
}

impl Default for GateModel {
    fn default() -> Self {
        Self::with_noise(SelectiveHamiltonian::Suspended)
    }
}

/// `exp(iχt |e⟩⟨e| ⊗ a†a)`.
pub fn conditional_phase_unitary(t: f64, chi: f64, cfg: &HilbertConfig) -> Result<Operator> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative wait {t}")));
    }
    let h = dispersive_diagonal(chi, cfg);
    let diag = CVector::from_iterator(h.len(), h.iter().map(|e| C64::from_polar(1.0, -e * t)));
    Ok(Operator::from_diagonal(&diag, format!("CP({t})")))
}

/// `R(θ,η) = exp(θ/2 (e^{iη}|e⟩⟨g| − e^{−iη}|g⟩⟨e|))` in the `(g, e)` basis.
pub fn qubit_rotation(theta: f64, eta: f64) -> [[C64; 2]; 2] {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    [
        [c, -C64::from_polar(s, -eta)],
        [C64::from_polar(s, eta), c],
    ]
}

/// `X⁰_{θ,η} = R(θ,η) ⊗ |0⟩⟨0| + I ⊗ (I − |0⟩⟨0|)`.
pub fn selective_rotation_unitary(theta: f64, eta: f64, cfg: &HilbertConfig) -> Operator {
    let d = cfg.total_dim();
    let mut m = CMatrix::identity(d, d);
    let r = qubit_rotation(theta, eta);
    let idx = [cfg.index(0, 0), cfg.index(1, 0)];
    for a in 0..2 {
        for b in 0..2 {
            m[(idx[a], idx[b])] = r[a][b];
        }
    }
    Operator::from_square(m, format!("X0({theta},{eta})"))
}

/// Unconditional qubit rotation `R(θ,η) ⊗ I`.
pub fn qubit_rotation_unitary(theta: f64, eta: f64, cfg: &HilbertConfig) -> Operator {
    let r = qubit_rotation(theta, eta);
    let q = CMatrix::from_fn(2, 2, |i, j| r[i][j]);
    Operator::from_square(
        q.kronecker(&CMatrix::identity(cfg.fock_dim(), cfg.fock_dim())),
        format!("R({theta},{eta})"),
    )
}

/// `ρ → |g⟩⟨g| ⊗ tr_q ρ`, or with error `p`: `(1−p)|g⟩⟨g| ⊗ ρ_c + p|e⟩⟨e| ⊗ ρ_c`.
pub fn reset_channel(state: &JointState) -> Result<JointState> {
    reset_channel_with_error(state, 0.0)
}

pub fn reset_channel_with_error(state: &JointState, p_error: f64) -> Result<JointState> {
    if !(0.0..=1.0).contains(&p_error) {
        return Err(Error::InvalidArgument(format!("reset error {p_error} not in [0,1]")));
    }
    let cfg = *state.config();
    let rc = partial_trace(state, Subsystem::Cavity);
    let rho = reset_matrix(&rc, &cfg, p_error);
    Ok(JointState::from_parts_unchecked(cfg, Representation::Density(rho), state.time_tag))
}

fn reset_matrix(rc: &CMatrix, cfg: &HilbertConfig, p_error: f64) -> CMatrix {
    let n = cfg.fock_dim();
    let mut rho = CMatrix::zeros(2 * n, 2 * n);
    rho.view_mut((0, 0), (n, n)).copy_from(&(rc * C64::new(1.0 - p_error, 0.0)));
    if p_error > 0.0 {
        rho.view_mut((n, n), (n, n)).copy_from(&(rc * C64::new(p_error, 0.0)));
    }
    rho
}

/// Executes gate steps; caches displacement matrices and master-equation
/// propagators so that repeated sequences reuse them.
#[derive(Debug, Clone)]
pub struct Executor {
    cfg: HilbertConfig,
    chi: f64,
    noise: NoiseModel,
    model: GateModel,
    settings: IntegratorSettings,
    h_on: Vec<f64>,
    h_off: Vec<f64>,
    displacements: HashMap<(u64, u64), CMatrix>,
    propagators: HashMap<(u64, bool), MasterPropagator>,
}

impl Executor {
    pub fn new(
        cfg: HilbertConfig,
        chi: f64,
        noise: NoiseModel,
        model: GateModel,
        settings: IntegratorSettings,
    ) -> Result<Self> {
        if !(chi > 0.0) {
            return Err(Error::InvalidArgument(format!("chi must be positive, got {chi}")));
        }
        settings.validate()?;
        Ok(Self {
            cfg,
            chi,
            noise,
            model,
            settings,
            h_on: dispersive_diagonal(chi, &cfg),
            h_off: vec![0.0; cfg.total_dim()],
            displacements: HashMap::new(),
            propagators: HashMap::new(),
        })
    }

    pub fn config(&self) -> &HilbertConfig {
        &self.cfg
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn model(&self) -> &GateModel {
        &self.model
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    fn noisy(&self) -> bool {
        self.model.mode == GateMode::IdealWithNoise && !self.noise.is_noiseless()
    }

    fn displacement(&mut self, alpha: C64) -> Result<&CMatrix> {
        let key = (alpha.re.to_bits(), alpha.im.to_bits());
        if !self.displacements.contains_key(&key) {
            let d = displacement_operator(alpha, &self.cfg)?.into_matrix();
            self.displacements.insert(key, d);
        }
        Ok(&self.displacements[&key])
    }

    /// Fill the displacement cache for every step of `seq`.
    pub fn prepare(&mut self, seq: &PulseSequence) -> Result<()> {
        for step in seq.steps() {
            if let GateStep::Displace(alpha) = *step {
                self.displacement(alpha)?;
            }
        }
        Ok(())
    }

    /// Run `seq` on `state`. Pure states stay pure while the sequence is
    /// unitary and noiseless; otherwise the state is promoted.
    pub fn run(&mut self, state: &JointState, seq: &PulseSequence) -> Result<JointState> {
        self.run_observed(state, seq, |_, _| {})
    }

    /// Like [`Executor::run`], calling `observer(k, state)` after step `k`.
    pub fn run_observed<F>(&mut self, state: &JointState, seq: &PulseSequence, mut observer: F) -> Result<JointState>
    where
        F: FnMut(usize, &JointState),
    {
        if state.config() != &self.cfg {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.total_dim(),
                got: state.dim(),
            });
        }
        let keep_pure = !self.noisy() && !seq.steps().contains(&GateStep::Reset);
        let mut repr = if keep_pure {
            state.representation().clone()
        } else {
            Representation::Density(state.density_matrix())
        };
        let mut t = state.time_tag;
        for (k, step) in seq.steps().iter().enumerate() {
            repr = self.apply_step(repr, step)?;
            t += step.duration();
            let snapshot = JointState::from_parts_unchecked(self.cfg, repr, t);
            observer(k, &snapshot);
            repr = snapshot.into_representation();
        }
        let out = JointState::from_parts_unchecked(self.cfg, repr, t);
        out.validate()?;
        Ok(out)
    }

    fn apply_step(&mut self, repr: Representation, step: &GateStep) -> Result<Representation> {
        Ok(match *step {
            GateStep::Displace(alpha) => {
                let n = self.cfg.fock_dim();
                let d = self.displacement(alpha)?.clone();
                match repr {
                    Representation::Pure(v) => Representation::Pure(displace_vector(&d, &v, n)),
                    Representation::Density(r) => Representation::Density(displace_density(&d, &r, n)),
                }
            }
            GateStep::ConditionalWait(t) => self.free_evolution(repr, t, true)?,
            GateStep::SelectiveRotation { theta, eta, duration } => {
                let h_on = self.model.selective_hamiltonian == SelectiveHamiltonian::Active;
                let r = self.free_evolution(repr, duration / 2.0, h_on)?;
                let r = apply_selective(r, theta, eta, &self.cfg);
                self.free_evolution(r, duration / 2.0, h_on)?
            }
            GateStep::Reset => {
                let rho = match repr {
                    Representation::Pure(v) => &v * v.adjoint(),
                    Representation::Density(r) => r,
                };
                let st = JointState::from_parts_unchecked(self.cfg, Representation::Density(rho), 0.0);
                let rc = partial_trace(&st, Subsystem::Cavity);
                Representation::Density(reset_matrix(&rc, &self.cfg, self.model.reset_error))
            }
        })
    }

    /// Evolution for `t` μs under `H` (if `h_on`) and, in noisy mode, the
    /// dissipators.
    pub(crate) fn free_evolution(&mut self, repr: Representation, t: f64, h_on: bool) -> Result<Representation> {
        if t == 0.0 {
            return Ok(repr);
        }
        if !self.noisy() {
            if !h_on {
                return Ok(repr);
            }
            let phases: Vec<C64> = self.h_on.iter().map(|e| C64::from_polar(1.0, -e * t)).collect();
            return Ok(match repr {
                Representation::Pure(v) => Representation::Pure(v.component_mul(&CVector::from_vec(phases))),
                Representation::Density(r) => {
                    let d = r.nrows();
                    Representation::Density(CMatrix::from_fn(d, d, |i, j| r[(i, j)] * phases[i] * phases[j].conj()))
                }
            });
        }
        let rho = match repr {
            Representation::Pure(v) => &v * v.adjoint(),
            Representation::Density(r) => r,
        };
        let out = if self.settings.method == IntegrationMethod::SectorExponential {
            let key = (t.to_bits(), h_on);
            if !self.propagators.contains_key(&key) {
                let h = if h_on { &self.h_on } else { &self.h_off };
                let p = MasterPropagator::new(&self.cfg, h, &self.noise, t)?;
                self.propagators.insert(key, p);
            }
            let mut out = self.propagators[&key].apply(&rho);
            symmetrize(&mut out);
            out
        } else {
            let h = if h_on { self.h_on.clone() } else { self.h_off.clone() };
            evolve_master_diagonal(&rho, &h, &self.noise, &self.cfg, t, &self.settings)?
        };
        Ok(Representation::Density(out))
    }

    /// Stochastic execution of `seq` on a pure state: every duration is
    /// unraveled into quantum jumps and a reset becomes a qubit measurement
    /// followed by a flip to `|g⟩`.
    pub fn run_trajectory<R: Rng + ?Sized>(
        &mut self,
        psi: CVector,
        seq: &PulseSequence,
        rng: &mut R,
        t0: f64,
        record: &mut JumpRecord,
    ) -> Result<CVector> {
        let n = self.cfg.fock_dim();
        let noisy = self.noisy();
        let on = DiagonalTrajectory::new(&self.cfg, &self.h_on, &self.noise);
        let off = DiagonalTrajectory::new(&self.cfg, &self.h_off, &self.noise);
        let noiseless = NoiseModel::noiseless();
        let on_clean = DiagonalTrajectory::new(&self.cfg, &self.h_on, &noiseless);
        let mut psi = psi;
        let mut t = t0;
        for step in seq.steps() {
            match *step {
                GateStep::Displace(alpha) => {
                    let d = self.displacement(alpha)?;
                    psi = displace_vector(d, &psi, n);
                }
                GateStep::ConditionalWait(dt) => {
                    let eng = if noisy { &on } else { &on_clean };
                    psi = eng.run(psi, dt, rng, t, record);
                }
                GateStep::SelectiveRotation { theta, eta, duration } => {
                    let h_on = self.model.selective_hamiltonian == SelectiveHamiltonian::Active;
                    let eng = match (noisy, h_on) {
                        (true, true) => Some(&on),
                        (true, false) => Some(&off),
                        (false, true) => Some(&on_clean),
                        (false, false) => None,
                    };
                    if let Some(e) = eng {
                        psi = e.run(psi, duration / 2.0, rng, t, record);
                    }
                    psi = match apply_selective(Representation::Pure(psi), theta, eta, &self.cfg) {
                        Representation::Pure(v) => v,
                        Representation::Density(_) => unreachable!(),
                    };
                    if let Some(e) = eng {
                        psi = e.run(psi, duration / 2.0, rng, t + duration / 2.0, record);
                    }
                }
                GateStep::Reset => {
                    let pg: f64 = psi.rows(0, n).norm_squared();
                    let take_g = rng.random::<f64>() < pg;
                    let mut cav: CVector = if take_g {
                        psi.rows(0, n).into_owned()
                    } else {
                        psi.rows(n, n).into_owned()
                    };
                    normalize(&mut cav);
                    let mut out = CVector::zeros(2 * n);
                    let excited = self.model.reset_error > 0.0 && rng.random::<f64>() < self.model.reset_error;
                    let off = if excited { n } else { 0 };
                    out.rows_mut(off, n).copy_from(&cav);
                    psi = out;
                }
            }
            t += step.duration();
        }
        Ok(psi)
    }
}

fn displace_vector(d: &CMatrix, v: &CVector, n: usize) -> CVector {
    let mut out = CVector::zeros(2 * n);
    out.rows_mut(0, n).copy_from(&(d * v.rows(0, n)));
    out.rows_mut(n, n).copy_from(&(d * v.rows(n, n)));
    out
}

fn displace_density(d: &CMatrix, r: &CMatrix, n: usize) -> CMatrix {
    let dd = d.adjoint();
    let mut out = CMatrix::zeros(2 * n, 2 * n);
    for qa in 0..2 {
        for qb in 0..2 {
            let block = d * r.view((qa * n, qb * n), (n, n)) * &dd;
            out.view_mut((qa * n, qb * n), (n, n)).copy_from(&block);
        }
    }
    out
}

/// Applies `X⁰_{θ,η}`, which only mixes the `|g,0⟩` and `|e,0⟩` amplitudes.
fn apply_selective(repr: Representation, theta: f64, eta: f64, cfg: &HilbertConfig) -> Representation {
    let r = qubit_rotation(theta, eta);
    let (ig, ie) = (cfg.index(0, 0), cfg.index(1, 0));
    match repr {
        Representation::Pure(mut v) => {
            let (g, e) = (v[ig], v[ie]);
            v[ig] = r[0][0] * g + r[0][1] * e;
            v[ie] = r[1][0] * g + r[1][1] * e;
            Representation::Pure(v)
        }
        Representation::Density(mut m) => {
            let d = m.nrows();
            // rows: U ρ
            for j in 0..d {
                let (g, e) = (m[(ig, j)], m[(ie, j)]);
                m[(ig, j)] = r[0][0] * g + r[0][1] * e;
                m[(ie, j)] = r[1][0] * g + r[1][1] * e;
            }
            // columns: (Uρ) U†
            for i in 0..d {
                let (g, e) = (m[(i, ig)], m[(i, ie)]);
                m[(i, ig)] = g * r[0][0].conj() + e * r[0][1].conj();
                m[(i, ie)] = g * r[1][0].conj() + e * r[1][1].conj();
            }
            Representation::Density(m)
        }
    }
}

/// Execute `seq` with a fresh [`Executor`].
pub fn execute_sequence(
    state: &JointState,
    seq: &PulseSequence,
    noise: &NoiseModel,
    chi: f64,
    model: &GateModel,
    settings: &IntegratorSettings,
) -> Result<JointState> {
    Executor::new(*state.config(), chi, *noise, *model, *settings)?.run(state, seq)
}
