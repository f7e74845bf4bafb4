//! Time evolution: Lindblad master equation, Monte-Carlo wave-function
//! trajectories, and closed forms for pure cavity loss.

mod closed_form;
mod master;
pub mod ode;
mod propagator;
mod sparse;
mod trajectory;

pub use closed_form::{components_to_density, damp_superposition_closed_form, CoherentComponent};
pub use master::{evolve_master, evolve_master_diagonal};
pub use propagator::MasterPropagator;
pub use sparse::MonomialOp;
pub(crate) use trajectory::DiagonalTrajectory;
pub use trajectory::{evolve_trajectory, evolve_trajectory_with_rng, TrajectoryOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{HilbertConfig, Operator, CVector, C64};

/// Collapse channels, in their fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    CavityLoss = 0,
    Relaxation = 1,
    Dephasing = 2,
}

impl Channel {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Cavity loss, qubit relaxation and qubit pure dephasing.
///
/// Times are in microseconds; an infinite time switches its channel off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    kappa: f64,
    t1: f64,
    t2: f64,
}

impl NoiseModel {
    pub fn new(kappa: f64, t1: f64, t2: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!("kappa must be ≥ 0, got {kappa}")));
        }
        if !(t1 > 0.0) || !(t2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "T1 and T2 must be positive, got {t1}, {t2}"
            )));
        }
        if t2 > 2.0 * t1 * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "T2 = {t2} exceeds 2·T1 = {}",
                2.0 * t1
            )));
        }
        Ok(Self { kappa, t1, t2 })
    }

    /// From the cavity lifetime `1/κ` instead of `κ`.
    pub fn from_lifetimes(t_cav: f64, t1: f64, t2: f64) -> Result<Self> {
        if !(t_cav > 0.0) {
            return Err(Error::InvalidArgument(format!("T_cav must be positive, got {t_cav}")));
        }
        Self::new(1.0 / t_cav, t1, t2)
    }

    pub fn noiseless() -> Self {
        Self {
            kappa: 0.0,
            t1: f64::INFINITY,
            t2: f64::INFINITY,
        }
    }

    pub fn cavity_only(kappa: f64) -> Result<Self> {
        Self::new(kappa, f64::INFINITY, f64::INFINITY)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    /// Pure-dephasing time from `1/T_φ = 1/T₂ − 1/(2T₁)`.
    pub fn tphi(&self) -> f64 {
        let rate = self.dephasing_rate_inverse_tphi();
        if rate <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / rate
        }
    }

    fn dephasing_rate_inverse_tphi(&self) -> f64 {
        (1.0 / self.t2 - 0.5 / self.t1).max(0.0)
    }

    pub fn relaxation_rate(&self) -> f64 {
        1.0 / self.t1
    }

    /// Rate multiplying `D[σ_z]`, equal to `1/(2T_φ)`.
    pub fn dephasing_rate(&self) -> f64 {
        0.5 * self.dephasing_rate_inverse_tphi()
    }

    pub fn rate(&self, ch: Channel) -> f64 {
        match ch {
            Channel::CavityLoss => self.kappa,
            Channel::Relaxation => self.relaxation_rate(),
            Channel::Dephasing => self.dephasing_rate(),
        }
    }

    pub fn is_noiseless(&self) -> bool {
        Self::all_channels().iter().all(|&c| self.rate(c) == 0.0)
    }

    pub fn all_channels() -> [Channel; 3] {
        [Channel::CavityLoss, Channel::Relaxation, Channel::Dephasing]
    }

    /// Collapse operators `√κ a`, `√(1/T₁) σ₋`, `√(1/2T_φ) σ_z` on the joint
    /// space; channels with zero rate are omitted.
    pub fn collapse_ops(&self, cfg: &HilbertConfig) -> Vec<(Channel, MonomialOp)> {
        Self::all_channels()
            .iter()
            .filter(|&&c| self.rate(c) > 0.0)
            .map(|&c| (c, MonomialOp::channel(c, self.rate(c), cfg)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IntegrationMethod {
    /// Dormand–Prince 5(4) with max-norm error control.
    AdaptiveRk,
    /// Classical RK4 with step `max_step`.
    FixedRk4,
    /// Exact exponential of the Liouvillian restricted to its invariant
    /// sectors; needs a diagonal Hamiltonian.
    SectorExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub method: IntegrationMethod,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step in μs.
    pub max_step: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            method: IntegrationMethod::AdaptiveRk,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1.0,
        }
    }
}

impl IntegratorSettings {
    pub fn adaptive(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        let s = Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn fixed_rk4(step: f64) -> Result<Self> {
        let s = Self {
            method: IntegrationMethod::FixedRk4,
            max_step: step,
            ..Self::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn sector_exponential() -> Self {
        Self {
            method: IntegrationMethod::SectorExponential,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::InvalidArgument(
                "integrator tolerances and max_step must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Jumps in order of occurrence: `(time μs, channel)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub jumps: Vec<(f64, Channel)>,
}

impl JumpRecord {
    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn count(&self, ch: Channel) -> usize {
        self.jumps.iter().filter(|(_, c)| *c == ch).count()
    }

    /// Append `other` with its times shifted by `offset`.
    pub fn extend_shifted(&mut self, other: &JumpRecord, offset: f64) {
        self.jumps
            .extend(other.jumps.iter().map(|&(t, c)| (t + offset, c)));
    }
}

/// Diagonal of `H = −χ |e⟩⟨e| ⊗ a†a` on the joint space.
pub fn dispersive_diagonal(chi: f64, cfg: &HilbertConfig) -> Vec<f64> {
    let n = cfg.fock_dim();
    (0..cfg.total_dim())
        .map(|i| if i >= n { -chi * (i - n) as f64 } else { 0.0 })
        .collect()
}

/// `H = −χ |e⟩⟨e| ⊗ a†a`, with `χ` in rad/μs.
pub fn dispersive_hamiltonian(chi: f64, cfg: &HilbertConfig) -> Result<Operator> {
    if !(chi > 0.0) || !chi.is_finite() {
        return Err(Error::InvalidArgument(format!("chi must be positive, got {chi}")));
    }
    let d = dispersive_diagonal(chi, cfg);
    let diag = CVector::from_iterator(d.len(), d.into_iter().map(|x| C64::new(x, 0.0)));
    Ok(Operator::from_diagonal(&diag, "H_disp"))
}

/// Real diagonal of `op` if it is diagonal with real entries.
pub(crate) fn real_diagonal(op: &Operator) -> Option<Vec<f64>> {
    if !op.is_diagonal(0.0) {
        return None;
    }
    let d = op.diagonal();
    if d.iter().any(|z| z.im != 0.0) {
        return None;
    }
    Some(d.iter().map(|z| z.re).collect())
}
