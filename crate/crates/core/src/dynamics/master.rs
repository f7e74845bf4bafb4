use super::ode::integrate;
use super::propagator::MasterPropagator;
use super::{real_diagonal, IntegrationMethod, IntegratorSettings, MonomialOp, NoiseModel};
use crate::error::{Error, Result};
use crate::hilbert::{symmetrize, CMatrix, HilbertConfig, JointState, Operator, Representation, C64};

/// Lindblad evolution `dρ/dt = −i[H,ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`
/// for `duration` μs. Pure inputs are promoted to density matrices.
pub fn evolve_master(
    state: &JointState,
    h: &Operator,
    noise: &NoiseModel,
    duration: f64,
    settings: &IntegratorSettings,
) -> Result<JointState> {
    let cfg = *state.config();
    if h.dim() != cfg.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.total_dim(),
            got: h.dim(),
        });
    }
    if duration < 0.0 {
        return Err(Error::InvalidArgument(format!("negative duration {duration}")));
    }
    let rho = state.density_matrix();
    let out = match real_diagonal(h) {
        Some(diag) => evolve_master_diagonal(&rho, &diag, noise, &cfg, duration, settings)?,
        None => {
            if settings.method == IntegrationMethod::SectorExponential {
                return Err(Error::InvalidArgument(
                    "sector exponential requires a diagonal Hamiltonian".into(),
                ));
            }
            evolve_dense(&rho, h.matrix(), noise, &cfg, duration, settings)?
        }
    };
    let result = JointState::from_parts_unchecked(cfg, Representation::Density(out), state.time_tag + duration);
    result.validate()?;
    Ok(result)
}

/// Master-equation evolution for a real diagonal Hamiltonian given by its
/// diagonal. The adaptive and RK4 paths integrate in the interaction frame
/// of `H`, so the step size follows the dissipative time scales only.
pub fn evolve_master_diagonal(
    rho: &CMatrix,
    h_diag: &[f64],
    noise: &NoiseModel,
    cfg: &HilbertConfig,
    duration: f64,
    settings: &IntegratorSettings,
) -> Result<CMatrix> {
    let d = cfg.total_dim();
    if rho.nrows() != d || h_diag.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho.nrows().min(h_diag.len()),
        });
    }
    if duration == 0.0 {
        return Ok(rho.clone());
    }
    if settings.method == IntegrationMethod::SectorExponential {
        let p = MasterPropagator::new(cfg, h_diag, noise, duration)?;
        return Ok(p.apply(rho));
    }
    let ops: Vec<MonomialOp> = noise.collapse_ops(cfg).into_iter().map(|(_, l)| l).collect();
    let gamma = total_decay(&ops, d);
    let h = h_diag.to_vec();
    let rhs = |t: f64, rt: &CMatrix| -> CMatrix {
        let phase: Vec<C64> = h.iter().map(|&e| C64::from_polar(1.0, -e * t)).collect();
        let lab = CMatrix::from_fn(d, d, |i, j| rt[(i, j)] * phase[i] * phase[j].conj());
        let mut jump = CMatrix::zeros(d, d);
        for l in &ops {
            l.sandwich_add(&lab, &mut jump);
        }
        CMatrix::from_fn(d, d, |i, j| {
            jump[(i, j)] * phase[i].conj() * phase[j] - rt[(i, j)] * (0.5 * (gamma[i] + gamma[j]))
        })
    };
    let rt = integrate(rhs, rho.clone(), 0.0, duration, settings, symmetrize)?;
    // back to the lab frame
    let phase: Vec<C64> = h_diag.iter().map(|&e| C64::from_polar(1.0, -e * duration)).collect();
    Ok(CMatrix::from_fn(d, d, |i, j| rt[(i, j)] * phase[i] * phase[j].conj()))
}

fn total_decay(ops: &[MonomialOp], d: usize) -> Vec<f64> {
    let mut gamma = vec![0.0; d];
    for l in ops {
        for (g, x) in gamma.iter_mut().zip(l.dagger_product_diagonal()) {
            *g += x;
        }
    }
    gamma
}

fn evolve_dense(
    rho: &CMatrix,
    h: &CMatrix,
    noise: &NoiseModel,
    cfg: &HilbertConfig,
    duration: f64,
    settings: &IntegratorSettings,
) -> Result<CMatrix> {
    let d = cfg.total_dim();
    let ops: Vec<MonomialOp> = noise.collapse_ops(cfg).into_iter().map(|(_, l)| l).collect();
    let gamma = total_decay(&ops, d);
    let mi = C64::new(0.0, -1.0);
    let rhs = |_t: f64, r: &CMatrix| -> CMatrix {
        let mut out = (h * r - r * h) * mi;
        for l in &ops {
            l.sandwich_add(r, &mut out);
        }
        for j in 0..d {
            for i in 0..d {
                out[(i, j)] -= r[(i, j)] * (0.5 * (gamma[i] + gamma[j]));
            }
        }
        out
    };
    integrate(rhs, rho.clone(), 0.0, duration, settings, symmetrize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{dispersive_hamiltonian, Channel};
    use crate::hilbert::{fidelity, fock_state, partial_trace, product_vector, Subsystem, ONE, ZERO};
    use crate::states::coherent_state;

    fn tight() -> IntegratorSettings {
        IntegratorSettings::adaptive(1e-11, 1e-13).unwrap()
    }

    #[test]
    fn closed_system_phase_evolution() {
        let cfg = HilbertConfig::new(30).unwrap();
        let chi = 2.0 * std::f64::consts::PI * 40.0;
        let h = dispersive_hamiltonian(chi, &cfg).unwrap();
        let cav = coherent_state(C64::new(1.5, 0.0), &cfg).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = product_vector(C64::new(s, 0.0), C64::new(s, 0.0), &cav);
        let st = JointState::pure(cfg, psi.clone()).unwrap();
        let t = 0.0173;
        let out = evolve_master(&st, &h, &NoiseModel::noiseless(), t, &tight()).unwrap();
        let expect = psi.map_with_location(|i, _, z| z * C64::from_polar(1.0, -h.matrix()[(i, i)].re * t));
        let target = JointState::pure(cfg, expect).unwrap();
        assert!((fidelity(&out, &target).unwrap() - 1.0).abs() < 1e-9);
        assert!((out.time_tag - t).abs() < 1e-15);
    }

    #[test]
    fn qubit_relaxation_population() {
        let cfg = HilbertConfig::new(3).unwrap();
        let noise = NoiseModel::new(0.0, 100.0, 200.0).unwrap();
        let st = JointState::product(cfg, ZERO, ONE, &fock_state(0, &cfg)).unwrap();
        let h = Operator::identity(6, "0").scaled(ZERO);
        let out = evolve_master(&st, &h, &noise, 100.0, &tight()).unwrap();
        let q = partial_trace(&out, Subsystem::Qubit);
        assert!((q[(1, 1)].re - (-1.0f64).exp()).abs() < 1e-6);
        assert!((out.trace().re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn coherent_state_stays_coherent() {
        let cfg = HilbertConfig::new(30).unwrap();
        let kappa = 1.0 / 2000.0;
        let noise = NoiseModel::cavity_only(kappa).unwrap();
        let a = C64::new(2.0, 0.0);
        let st = JointState::ground_with(cfg, &coherent_state(a, &cfg).unwrap()).unwrap();
        let h = dispersive_hamiltonian(1.0, &cfg).unwrap();
        let t = 200.0;
        let out = evolve_master(&st, &h, &noise, t, &tight()).unwrap();
        let target =
            JointState::ground_with(cfg, &coherent_state(a * (-kappa * t / 2.0).exp(), &cfg).unwrap()).unwrap();
        assert!(fidelity(&out, &target).unwrap() >= 1.0 - 1e-7);
    }

    #[test]
    fn dense_and_diagonal_paths_agree() {
        let cfg = HilbertConfig::new(8).unwrap();
        let noise = NoiseModel::new(0.05, 10.0, 12.0).unwrap();
        let h = dispersive_hamiltonian(3.0, &cfg).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let cav = coherent_state(C64::new(0.8, 0.3), &cfg).unwrap();
        let st = JointState::product(cfg, C64::new(s, 0.0), C64::new(0.0, s), &cav).unwrap();
        let rho = st.density_matrix();
        let diag = evolve_master_diagonal(&rho, &crate::dynamics::dispersive_diagonal(3.0, &cfg), &noise, &cfg, 0.7, &tight()).unwrap();
        let dense = evolve_dense(&rho, h.matrix(), &noise, &cfg, 0.7, &tight()).unwrap();
        assert!((diag - dense).norm() < 1e-8);
        let _ = Channel::CavityLoss;
    }

    #[test]
    fn rejects_sector_method_for_dense_hamiltonian() {
        let cfg = HilbertConfig::new(4).unwrap();
        let st = JointState::ground_with(cfg, &fock_state(0, &cfg)).unwrap();
        let mut m = CMatrix::zeros(8, 8);
        m[(0, 1)] = ONE;
        m[(1, 0)] = ONE;
        let h = Operator::new(m, "x").unwrap();
        let r = evolve_master(&st, &h, &NoiseModel::noiseless(), 1.0, &IntegratorSettings::sector_exponential());
        assert!(r.is_err());
    }
}
