use crate::error::Result;
use crate::hilbert::{CMatrix, HilbertConfig, C64};
use crate::states::coherent_state;

/// One term `weight · |ket⟩⟨bra|` of a cavity density matrix written over
/// coherent states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentComponent {
    pub weight: C64,
    pub bra: C64,
    pub ket: C64,
}

impl CoherentComponent {
    pub fn new(weight: C64, bra: C64, ket: C64) -> Self {
        Self { weight, bra, ket }
    }
}

/// Exact pure-loss evolution of `Σ c_jk |α_j⟩⟨α_k|` for time `t`:
/// amplitudes shrink by `e^{−κt/2}` and each weight picks up
/// `exp[(α_j ᾱ_k − (|α_j|² + |α_k|²)/2)(1 − e^{−κt})]`.
pub fn damp_superposition_closed_form(
    components: &[CoherentComponent],
    t: f64,
    kappa: f64,
) -> Vec<CoherentComponent> {
    let eta = (-kappa * t).exp();
    let shrink = eta.sqrt();
    components
        .iter()
        .map(|c| {
            let exponent =
                (c.ket * c.bra.conj() - (c.ket.norm_sqr() + c.bra.norm_sqr()) / 2.0) * (1.0 - eta);
            CoherentComponent {
                weight: c.weight * exponent.exp(),
                bra: c.bra * shrink,
                ket: c.ket * shrink,
            }
        })
        .collect()
}

/// Dense cavity density matrix of a component list.
pub fn components_to_density(components: &[CoherentComponent], cfg: &HilbertConfig) -> Result<CMatrix> {
    let n = cfg.fock_dim();
    let mut rho = CMatrix::zeros(n, n);
    for c in components {
        let ket = coherent_state(c.ket, cfg)?;
        let bra = coherent_state(c.bra, cfg)?;
        rho += (ket * bra.adjoint()) * c.weight;
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_master_diagonal, IntegratorSettings, NoiseModel};
    use crate::hilbert::{partial_trace, trace_distance, JointState, Subsystem, ONE};

    /// `|α⟩±|−α⟩` as four unnormalized components, normalized as a whole.
    fn even_cat(alpha: C64) -> Vec<CoherentComponent> {
        let amps = [alpha, -alpha];
        let norm = 2.0 * (1.0 + (-2.0 * alpha.norm_sqr()).exp());
        let mut out = Vec::new();
        for &a in &amps {
            for &b in &amps {
                out.push(CoherentComponent::new(C64::new(1.0 / norm, 0.0), b, a));
            }
        }
        out
    }

    #[test]
    fn single_component_keeps_weight() {
        let c = [CoherentComponent::new(ONE, C64::new(2.0, 1.0), C64::new(2.0, 1.0))];
        let out = damp_superposition_closed_form(&c, 3.0, 0.1);
        assert!((out[0].weight - ONE).norm() < 1e-15);
        assert!((out[0].ket - C64::new(2.0, 1.0) * (-0.15f64).exp()).norm() < 1e-15);
    }

    #[test]
    fn long_time_limit() {
        let a = C64::new(2.0, 0.0);
        let c = [CoherentComponent::new(ONE, -a, a)];
        let out = damp_superposition_closed_form(&c, 1e6, 1.0);
        // weight → ⟨−α|α⟩ = e^{-8}
        assert!((out[0].weight.re - (-8.0f64).exp()).abs() < 1e-15);
        assert!(out[0].ket.norm() < 1e-100);
    }

    #[test]
    fn matches_master_equation_for_even_cat() {
        let cfg = HilbertConfig::new(40).unwrap();
        let kappa = 1.0 / 2000.0;
        let t = 0.131 / kappa;
        let comps = even_cat(C64::new(2.0, 0.0));
        let rho_c = components_to_density(&comps, &cfg).unwrap();
        let damped = components_to_density(&damp_superposition_closed_form(&comps, t, kappa), &cfg).unwrap();
        let n = cfg.fock_dim();
        let mut rho = CMatrix::zeros(2 * n, 2 * n);
        rho.view_mut((0, 0), (n, n)).copy_from(&rho_c);
        let noise = NoiseModel::cavity_only(kappa).unwrap();
        let h = vec![0.0; 2 * n];
        let me = evolve_master_diagonal(&rho, &h, &noise, &cfg, t, &IntegratorSettings::adaptive(1e-12, 1e-14).unwrap()).unwrap();
        let st = JointState::density(cfg, me).unwrap();
        let cav = partial_trace(&st, Subsystem::Cavity);
        assert!(trace_distance(&cav, &damped) < 1e-6);
    }
}
