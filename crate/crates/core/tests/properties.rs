use proptest::prelude::*;

use channel_forge::approximation::{build_approximation, simulation_residual};
use channel_forge::channels::{action_residual, validate_cptp, Channel, ChannelMap, KrausChannel, RandomUnitaryChannel};
use channel_forge::circuits::{compile_approximation, simulate, Circuit};
use channel_forge::diamond::{diamond_distance, DiamondConfig};
use channel_forge::metrics::{entropy, max_output_pnorm, noise_contraction};
use channel_forge::numerics::{partial_trace, tensor, trace_norm, ComplexMatrix, DensityMatrix, C64};
use channel_forge::sampling::{random_density, random_kraus, random_unitary, seeded_rng};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn partial_trace_of_product_recovers_factor(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut rng = seeded_rng(seed, 0);
        let a = random_density(da, &mut rng);
        let b = random_density(db, &mut rng);
        let ab = tensor(a.matrix(), b.matrix()).unwrap();
        prop_assert!(partial_trace(&ab, &[da, db], &[0]).unwrap().max_abs_diff(a.matrix()) < 1e-12);
        prop_assert!(partial_trace(&ab, &[da, db], &[1]).unwrap().max_abs_diff(b.matrix()) < 1e-12);
    }

    #[test]
    fn entropy_is_unitarily_invariant(seed in any::<u64>(), d in 2usize..6) {
        let mut rng = seeded_rng(seed, 1);
        let rho = random_density(d, &mut rng);
        let u = random_unitary(d, &mut rng);
        let turned = DensityMatrix::new(rho.matrix().conjugate_by(u.matrix()).hermitian_part()).unwrap();
        prop_assert!((entropy(&rho).unwrap() - entropy(&turned).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn representations_round_trip(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4, n in 1usize..5) {
        prop_assume!(n * dout >= din);
        let mut rng = seeded_rng(seed, 2);
        let k = KrausChannel::new(random_kraus(din, dout, n, &mut rng)).unwrap();
        let ch: Channel = k.clone().into();
        for kind in ["choi", "stinespring", "kraus"] {
            let other = ch.convert(kind).unwrap();
            prop_assert!(action_residual(&k, &other).unwrap() < 1e-9);
            prop_assert!(validate_cptp(&other).unwrap().pass);
        }
        let json = ch.to_json();
        let back = Channel::from_json(&json).unwrap();
        prop_assert!(action_residual(&k, &back).unwrap() < 1e-9);
    }

    #[test]
    fn random_unitary_channels_are_unital(seed in any::<u64>(), d in 2usize..5, n in 1usize..5) {
        let mut rng = seeded_rng(seed, 3);
        let probs = vec![1.0 / n as f64; n];
        let us = (0..n).map(|_| random_unitary(d, &mut rng)).collect();
        let ru = RandomUnitaryChannel::new(probs, us).unwrap();
        let id = ComplexMatrix::identity(d);
        prop_assert!(ru.map(&id).max_abs_diff(&id) < 1e-10);
    }

    #[test]
    fn noise_never_moves_states_away_from_mixed(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = seeded_rng(seed, 4);
        let us = (0..3).map(|_| random_unitary(d, &mut rng)).collect();
        let ru = RandomUnitaryChannel::new(vec![0.5, 0.25, 0.25], us).unwrap();
        let rho = random_density(2 * d, &mut rng);
        let (after, before) = noise_contraction(&ru, &rho, 2).unwrap();
        prop_assert!(after <= before + 1e-8);
    }

    #[test]
    fn approximation_simulates_original(seed in any::<u64>(), exp in 1u32..4) {
        let mut rng = seeded_rng(seed, 5);
        let phi: Channel = KrausChannel::new(random_kraus(2, 2, 2, &mut rng)).unwrap().into();
        let ac = build_approximation(&phi, 1 << exp).unwrap();
        let sigma = random_density(2, &mut rng);
        prop_assert!(simulation_residual(&ac, &sigma).unwrap() < 1e-10);
    }
}

proptest! {
    #![proptest_config(cfg(8))]

    #[test]
    fn pnorms_are_ordered(seed in any::<u64>(), p in 1.0f64..6.0) {
        let mut rng = seeded_rng(seed, 6);
        let k = KrausChannel::new(random_kraus(2, 2, 2, &mut rng)).unwrap();
        let top = max_output_pnorm(&k, f64::INFINITY, 8, seed).unwrap().value;
        let mid = max_output_pnorm(&k, p, 8, seed).unwrap().value;
        prop_assert!(top <= mid + 1e-9 && mid <= 1.0 + 1e-12);
    }

    #[test]
    fn diamond_distance_is_symmetric(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 7);
        let a = KrausChannel::new(random_kraus(2, 2, 2, &mut rng)).unwrap();
        let b = KrausChannel::new(random_kraus(2, 2, 2, &mut rng)).unwrap();
        let c = DiamondConfig::new(12, seed);
        let ab = diamond_distance(&a, &b, &c).unwrap().value;
        let ba = diamond_distance(&b, &a, &c).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-8);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn diamond_triangle(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed, 8);
        let ks: Vec<KrausChannel> = (0..3).map(|_| KrausChannel::new(random_kraus(2, 2, 2, &mut rng)).unwrap()).collect();
        let c = DiamondConfig::new(12, seed);
        let d = |i: usize, j: usize| diamond_distance(&ks[i], &ks[j], &c).unwrap();
        let (ab, bc, ac) = (d(0, 1), d(1, 2), d(0, 2));
        let slack = ab.spread + bc.spread + ac.spread;
        prop_assert!(ac.value <= ab.value + bc.value + 2.0 * slack + 1e-8);
    }

    #[test]
    fn compiled_circuits_are_linear(seed in any::<u64>(), w in 0.0f64..1.0) {
        let mut rng = seeded_rng(seed, 9);
        let q = Circuit::new(2, vec![0], vec![0], vec![]).unwrap();
        let (c, _) = compile_approximation(&q).unwrap();
        let a = random_density(4, &mut rng);
        let b = random_density(4, &mut rng);
        let lhs = simulate(&c, &a.mix(w, &b).unwrap(), 1).unwrap();
        let mut rhs = simulate(&c, &a, 1).unwrap().matrix().scale_real(w);
        rhs.axpy(C64::new(1.0 - w, 0.0), simulate(&c, &b, 1).unwrap().matrix());
        prop_assert!(trace_norm(&(lhs.matrix() - &rhs)).unwrap() < 1e-10);
    }
}
