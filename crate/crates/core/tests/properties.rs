//! Property-based invariants across modules.

use std::f64::consts::PI;

use cat_aqec::analysis::{
    golden_section_min, kappa_eff, kraus_wait, poisson_mod4, predicted_fidelity, CodeWeights, CorrectionBudget,
};
use cat_aqec::cli::config::{ExperimentConfig, GateModelChoice, InitMode};
use cat_aqec::dynamics::{dispersive_hamiltonian, evolve_master, IntegratorSettings, NoiseModel};
use cat_aqec::gates::{
    conditional_phase_unitary, selective_rotation_unitary, GateStep, PulseSequence,
};
use cat_aqec::hilbert::{
    annihilation, displacement_operator, hermiticity_defect, min_eigenvalue, normalize, number_operator,
    parity_operator, partial_trace, product_vector, HilbertConfig, JointState, Subsystem, C64,
};
use cat_aqec::states::{logical_state, no_jump_damp, CodeParams, JumpIndex, LogicalQubit};
use proptest::prelude::*;

fn complex(max: f64) -> impl Strategy<Value = C64> {
    (0.0..max, 0.0..2.0 * PI).prop_map(|(r, phi)| C64::from_polar(r, phi))
}

fn qubit() -> impl Strategy<Value = LogicalQubit> {
    (0.0..PI, 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(|(t, p, g)| LogicalQubit::from_bloch(t, p).with_global_phase(g))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn displacement_composition_phase(a in complex(2.0), b in complex(2.0)) {
        let cfg = HilbertConfig::new(60).unwrap();
        let da = displacement_operator(a, &cfg).unwrap();
        let db = displacement_operator(b, &cfg).unwrap();
        let dab = displacement_operator(a + b, &cfg).unwrap();
        let lhs = da.matrix() * db.matrix();
        let phase = C64::from_polar(1.0, (a * b.conj()).im);
        let rhs = dab.matrix() * phase;
        // low-photon block, away from the truncation edge
        let mut worst = 0.0f64;
        for i in 0..10 {
            for j in 0..10 {
                worst = worst.max((lhs[(i, j)] - rhs[(i, j)]).norm());
            }
        }
        prop_assert!(worst < 1e-6, "deviation {worst}");
    }

    #[test]
    fn operators_are_deterministic(a in complex(3.0), n in 30usize..50) {
        let cfg = HilbertConfig::new(n).unwrap();
        prop_assert_eq!(displacement_operator(a, &cfg).unwrap(), displacement_operator(a, &cfg).unwrap());
        prop_assert_eq!(annihilation(&cfg), annihilation(&cfg));
    }

    #[test]
    fn product_states_trace_to_pure_factors(c in complex(1.0), v in complex(2.0), q in qubit()) {
        let cfg = HilbertConfig::new(30).unwrap();
        let mut cav = cat_aqec::states::coherent_state(v, &cfg).unwrap();
        cav[1] += c;
        normalize(&mut cav);
        let st = JointState::pure(cfg, product_vector(q.c_g(), q.c_e(), &cav)).unwrap();
        for side in [Subsystem::Qubit, Subsystem::Cavity] {
            let r = partial_trace(&st, side);
            let purity = (&r * &r).trace().re;
            prop_assert!((purity - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_eigenstates(alpha in 1.2f64..3.0, phase in 0.0..2.0 * PI, q in qubit(), n in 0i64..4) {
        let cfg = HilbertConfig::new(60).unwrap();
        let code = CodeParams::new(C64::from_polar(alpha, phase)).unwrap();
        let psi = logical_state(JumpIndex::new(n), &code, &q, &cfg).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let diff = parity_operator(&cfg).matrix() * &psi - &psi * C64::new(sign, 0.0);
        prop_assert!(diff.norm() < 1e-12);
        prop_assert!((psi.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn damping_commutes_with_jumps(alpha in 1.5f64..3.0, kt in 0.0f64..0.3, q in qubit(), n in 0i64..4) {
        let cfg = HilbertConfig::new(60).unwrap();
        let code = CodeParams::new(C64::new(alpha, 0.0)).unwrap();
        let n = JumpIndex::new(n);
        let mut a = annihilation(&cfg).matrix() * no_jump_damp(n, &code, &q, kt, 1.0, &cfg).unwrap();
        normalize(&mut a);
        let b = no_jump_damp(n.next(), &code, &q, kt, 1.0, &cfg).unwrap();
        prop_assert!(a.dotc(&b).norm_sqr() > 1.0 - 1e-9);
    }

    #[test]
    fn poisson_weights_sum_to_one(eps in 0.0f64..5.0) {
        let s = poisson_mod4(eps);
        prop_assert!((s.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.p.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn kraus_wait_normalized_and_cyclic(
        w in prop::array::uniform4(0.0f64..1.0),
        eps in 0.0f64..2.0,
        shift in 0usize..4,
    ) {
        let total: f64 = w.iter().sum::<f64>().max(1e-3);
        let start = CodeWeights { weights: w.map(|x| x / total), alpha: C64::new(2.0, 0.0), lost: 0.0 };
        let after = kraus_wait(&start, eps);
        prop_assert!((after.total() - start.total()).abs() < 1e-12);
        let a = kraus_wait(&start.rotated(shift), eps);
        let b = after.rotated(shift);
        for k in 0..4 {
            prop_assert!((a.weights[k] - b.weights[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn kappa_eff_convex_with_analytic_minimum(ec in 1e-4f64..0.05, kappa in 1e-4f64..1e-2, nbar in 1.0f64..6.0) {
        let f = |t: f64| kappa_eff(ec, kappa, nbar, t);
        let opt = (2.0 * ec).sqrt() / (kappa * nbar);
        let numeric = golden_section_min(f, opt / 50.0, opt * 50.0, 1e-12);
        prop_assert!((numeric / opt - 1.0).abs() < 1e-6);
        for k in 1..20 {
            let (x, h) = (opt * k as f64 / 5.0, opt / 100.0);
            prop_assert!(f(x - h) + f(x + h) - 2.0 * f(x) >= -1e-15);
        }
    }

    #[test]
    fn predicted_fidelity_monotone(ec in 0.0f64..0.05, ej in 0.0f64..0.5, n in 0usize..100) {
        let b = CorrectionBudget::new(ec, ej, 0.5, 60.0).unwrap();
        let worse_c = CorrectionBudget::new(ec + 0.01, ej, 0.5, 60.0).unwrap();
        let worse_j = CorrectionBudget::new(ec, ej + 0.05, 0.5, 60.0).unwrap();
        let f = predicted_fidelity(n, &b).0;
        prop_assert!(predicted_fidelity(n + 1, &b).0 <= f);
        prop_assert!(predicted_fidelity(n, &worse_c).0 <= f);
        prop_assert!(predicted_fidelity(n, &worse_j).0 <= f);
    }

    #[test]
    fn conditional_phase_is_additive(t1 in 0.0f64..0.05, t2 in 0.0f64..0.05) {
        let cfg = HilbertConfig::new(30).unwrap();
        let chi = 2.0 * PI * 40.0;
        let a = conditional_phase_unitary(t1, chi, &cfg).unwrap();
        let b = conditional_phase_unitary(t2, chi, &cfg).unwrap();
        let ab = conditional_phase_unitary(t1 + t2, chi, &cfg).unwrap();
        prop_assert!(a.compose(&b).unwrap().max_abs_diff(&ab) < 1e-12);
    }

    #[test]
    fn selective_rotation_inverts(theta in -2.0 * PI..2.0 * PI, eta in -PI..PI) {
        let cfg = HilbertConfig::new(20).unwrap();
        let p = selective_rotation_unitary(theta, eta, &cfg);
        let m = selective_rotation_unitary(-theta, eta, &cfg);
        let id = cat_aqec::hilbert::Operator::identity(2 * 20, "I");
        prop_assert!(p.compose(&m).unwrap().max_abs_diff(&id) < 1e-12);
    }

    #[test]
    fn sequence_text_roundtrip(
        steps in prop::collection::vec(
            prop_oneof![
                complex(3.0).prop_map(GateStep::Displace),
                (0.0f64..1.0).prop_map(GateStep::ConditionalWait),
                (-7.0f64..7.0, -7.0f64..7.0, 0.0f64..0.1)
                    .prop_map(|(theta, eta, duration)| GateStep::SelectiveRotation { theta, eta, duration }),
                Just(GateStep::Reset),
            ],
            0..12,
        )
    ) {
        let seq = PulseSequence::new(steps).unwrap();
        prop_assert_eq!(PulseSequence::parse(&seq.to_text()).unwrap(), seq);
    }

    #[test]
    fn config_text_roundtrip(
        nbar in 1.0f64..4.0,
        tw in 0.0f64..200.0,
        seed in any::<u64>(),
        model in prop_oneof![Just(GateModelChoice::Noiseless), Just(GateModelChoice::Suspended), Just(GateModelChoice::Active)],
        init in prop_oneof![Just(InitMode::IdealState), Just(InitMode::FullEncode)],
    ) {
        let c = ExperimentConfig { nbar, tw_us: tw, seed, gate_model: model, init_mode: init, ..ExperimentConfig::default() };
        prop_assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn master_equation_outputs_are_physical(
        kappa in 0.0f64..2.0,
        t1 in 0.5f64..5.0,
        ratio in 0.2f64..2.0,
        chi in 0.1f64..3.0,
        a in complex(1.5),
        q in qubit(),
    ) {
        let cfg = HilbertConfig::new(16).unwrap();
        let cav = cat_aqec::states::coherent_state(a, &cfg).unwrap();
        let st = JointState::pure(cfg, product_vector(q.c_g(), q.c_e(), &cav)).unwrap();
        let noise = NoiseModel::new(kappa, t1, ratio * t1).unwrap();
        let h = dispersive_hamiltonian(chi, &cfg).unwrap();
        let out = evolve_master(&st, &h, &noise, 0.7, &IntegratorSettings::default()).unwrap();
        let rho = out.density_matrix();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-9);
        prop_assert!(hermiticity_defect(&rho) < 1e-12);
        prop_assert!(min_eigenvalue(&rho) > -1e-9);
        let n = out.expectation(&cat_aqec::hilbert::tensor(
            &cat_aqec::hilbert::qubit_identity(), &number_operator(&cfg), &cfg).unwrap()).unwrap().re;
        prop_assert!(n <= a.norm_sqr() + 1e-9);
    }
}
