use catkit::decoherence::{apply_channel, fidelity, loss_channel};
use catkit::fock::{
    cat_state, coherent_amplitudes, coherent_state, expectation, ladder_ops, parity_op, Branch, FockSpace, C64,
};
use catkit::greens::{wick_two_particle, LesserGF, RingLattice};
use catkit::su11::{adjoint_action_deviation, build_su11, closure_residuals};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expectation_is_linear_and_conjugate_symmetric(
        ar in -1.5f64..1.5, ai in -1.5f64..1.5,
        c1r in -2.0f64..2.0, c1i in -2.0f64..2.0,
        c2r in -2.0f64..2.0, c2i in -2.0f64..2.0,
    ) {
        let s = FockSpace::default();
        let l = ladder_ops(&s);
        let psi = coherent_state(&s, c(ar, ai)).unwrap();
        let (c1, c2) = (c(c1r, c1i), c(c2r, c2i));
        let a2 = &l.a * &l.a;
        let combo = &l.a.scaled(c1) + &a2.scaled(c2);
        let lhs = expectation(&combo, &psi).unwrap();
        let rhs = c1 * expectation(&l.a, &psi).unwrap() + c2 * expectation(&a2, &psi).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
        let fwd = expectation(&a2, &psi).unwrap();
        let back = expectation(&a2.dagger(), &psi).unwrap();
        prop_assert!((back - fwd.conj()).norm() < 1e-10);
    }

    #[test]
    fn cat_support_is_bitwise_single_parity(ar in -2.0f64..2.0, ai in -2.0f64..2.0) {
        prop_assume!(ar.hypot(ai) > 1e-3);
        let s = FockSpace::default();
        for branch in [Branch::Even, Branch::Odd] {
            let psi = cat_state(&s, c(ar, ai), branch).unwrap();
            for n in 0..s.dim() {
                if !branch.matches(n) {
                    prop_assert_eq!(psi.amp(n), C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn coherent_amplitudes_follow_series(ar in -2.0f64..2.0, ai in -2.0f64..2.0) {
        let alpha = c(ar, ai);
        let amps = coherent_amplitudes(alpha, 31);
        let mut term = c((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for (n, amp) in amps.iter().enumerate() {
            if n > 0 {
                term *= alpha / (n as f64).sqrt();
            }
            let scale = term.norm().max(1e-300);
            prop_assert!((amp - term).norm() / scale < 1e-14, "n={} {} vs {}", n, amp, term);
        }
    }

    #[test]
    fn closure_holds_for_any_guard(guard in 2usize..12) {
        let s = FockSpace::with_dim(16).unwrap();
        let r = closure_residuals(&build_su11(&s).unwrap(), guard).unwrap();
        prop_assert!(r.max_residual() <= 1e-12);
    }

    #[test]
    fn phase_acts_as_automorphism(phi in 0.0f64..std::f64::consts::TAU) {
        let set = build_su11(&FockSpace::with_dim(32).unwrap()).unwrap();
        prop_assert!(adjoint_action_deviation(&set.k_plus, phi, 2).unwrap() <= 1e-12);
        prop_assert!(adjoint_action_deviation(&set.k_minus, phi, -2).unwrap() <= 1e-12);
    }

    #[test]
    fn loss_preserves_trace_and_positivity(tau in 0.0f64..=1.0, ar in -1.5f64..1.5) {
        let s = FockSpace::with_dim(40).unwrap();
        let rho = cat_state(&s, c(ar, 0.3), Branch::Even).unwrap().to_density();
        let out = apply_channel(&rho, &loss_channel(&s, tau).unwrap()).unwrap();
        prop_assert!((out.trace() - c(1.0, 0.0)).norm() <= 1e-12);
        prop_assert!(out.min_eigenvalue() >= -1e-9);
    }

    #[test]
    fn loss_maps_coherent_to_coherent(tau in 0.0f64..=1.0, ar in -1.5f64..1.5, ai in -1.5f64..1.5) {
        let s = FockSpace::default();
        let rho = coherent_state(&s, c(ar, ai)).unwrap().to_density();
        let out = apply_channel(&rho, &loss_channel(&s, tau).unwrap()).unwrap();
        let target = coherent_state(&s, c(ar, ai) * tau.sqrt()).unwrap();
        prop_assert!(1.0 - fidelity(&out, &target).unwrap() <= 1e-9);
    }

    #[test]
    fn wick_tensor_is_symmetric(n1 in 0.0f64..2.0, n2 in 0.0f64..2.0) {
        let lat = RingLattice::new(8).unwrap();
        let g = LesserGF::from_modes(&lat, &[(1, n1), (-2, n2)]).unwrap();
        let t = wick_two_particle(&g).unwrap();
        for j in 0..8 {
            for k in 0..8 {
                for l in 0..8 {
                    for p in 0..8 {
                        prop_assert_eq!(t.get(j, k, l, p), t.get(k, j, l, p));
                        prop_assert_eq!(t.get(j, k, l, p), t.get(j, k, p, l));
                    }
                }
            }
        }
    }
}

#[test]
fn closure_at_three_cutoffs() {
    for dim in [16, 64, 128] {
        let r = closure_residuals(&build_su11(&FockSpace::with_dim(dim).unwrap()).unwrap(), 4).unwrap();
        assert!(r.max_residual() <= 1e-12, "dim {dim}: {r:?}");
    }
}

#[test]
fn parity_squares_to_identity_and_commutes_with_number() {
    let s = FockSpace::default();
    let p = parity_op(&s);
    let l = ladder_ops(&s);
    assert_eq!((&p * &p).max_abs_diff(&s.identity()).unwrap(), 0.0);
    assert_eq!(p.commutator(&l.n).unwrap().max_abs(), 0.0);
}

#[test]
fn channel_composition() {
    let s = FockSpace::default();
    for alpha in [c(0.8, 0.0), c(1.2, -0.5)] {
        let rho = coherent_state(&s, alpha).unwrap().to_density();
        let (t1, t2) = (0.8, 0.6);
        let two_step = apply_channel(
            &apply_channel(&rho, &loss_channel(&s, t1).unwrap()).unwrap(),
            &loss_channel(&s, t2).unwrap(),
        )
        .unwrap();
        let one_step = apply_channel(&rho, &loss_channel(&s, t1 * t2).unwrap()).unwrap();
        let diff = (two_step.matrix() - one_step.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff <= 1e-9, "{diff}");
        let target = coherent_state(&s, alpha * (t1 * t2).sqrt()).unwrap();
        assert!(1.0 - fidelity(&two_step, &target).unwrap() <= 1e-9);
    }
}

