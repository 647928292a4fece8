use exponents::gallager::{f_delta, gallager_j, GallagerSolver};
use exponents::kl::{tilde_f_delta, KlSolver, VSolverConfig};
use exponents::verifier::random_generic_channel;
use exponents::{Channel, DeltaParam, Distribution, RatePoint};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn channel_and_input(seed: u64, n: usize, m: usize) -> (Channel, Distribution) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_generic_channel(n, m, &mut rng);
    let p = Distribution::random(n, &mut rng);
    (w, p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tilted_objective_dominates_gallager(
        seed in any::<u64>(),
        n in 2usize..5,
        m in 2usize..5,
        delta in -1.0f64..=0.0,
        rate in 0.0f64..2.0,
    ) {
        let (w, p) = channel_and_input(seed, n, m);
        let f = f_delta(DeltaParam::new(delta).unwrap(), RatePoint::new(rate).unwrap(), &p, &w).unwrap();
        let t = tilde_f_delta(
            DeltaParam::new(delta).unwrap(),
            RatePoint::new(rate).unwrap(),
            &p,
            &w,
            &VSolverConfig::default(),
        )
        .unwrap();
        prop_assert!(t >= f - 1e-8, "tilde {t} < gallager {f}");
    }

    #[test]
    fn tilted_error_objective_dominates_gallager(
        seed in any::<u64>(),
        n in 2usize..4,
        m in 2usize..4,
        delta in 0.0f64..4.0,
        rate in 0.0f64..1.0,
    ) {
        let (w, p) = channel_and_input(seed, n, m);
        let f = f_delta(DeltaParam::new(delta).unwrap(), RatePoint::new(rate).unwrap(), &p, &w).unwrap();
        let t = tilde_f_delta(
            DeltaParam::new(delta).unwrap(),
            RatePoint::new(rate).unwrap(),
            &p,
            &w,
            &VSolverConfig::default(),
        )
        .unwrap();
        prop_assert!(t >= f - 1e-8, "tilde {t} < gallager {f}");
    }

    #[test]
    fn zero_delta_vanishes(seed in any::<u64>(), n in 1usize..5, m in 1usize..5, rate in 0.0f64..3.0) {
        let (w, p) = channel_and_input(seed, n, m);
        let zero = DeltaParam::ZERO;
        prop_assert_eq!(gallager_j(zero, &p, &w).unwrap().abs(), 0.0);
        prop_assert!(f_delta(zero, RatePoint::new(rate).unwrap(), &p, &w).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn converse_curve_is_one_lipschitz_and_monotone(seed in any::<u64>(), n in 2usize..4, m in 2usize..4) {
        let (w, _) = channel_and_input(seed, n, m);
        let mut kl = KlSolver::new(&w, VSolverConfig::default()).unwrap();
        let top = (n as f64).ln() + 0.5;
        let rates: Vec<f64> = (0..=8).map(|k| top * k as f64 / 8.0).collect();
        let vals: Vec<f64> = rates.iter().map(|&r| kl.dk_exponent(r).unwrap()).collect();
        for i in 0..rates.len() {
            for j in i + 1..rates.len() {
                prop_assert!((vals[j] - vals[i]).abs() <= rates[j] - rates[i] + 1e-6);
                prop_assert!(vals[j] >= vals[i] - 1e-6);
            }
        }
    }

    #[test]
    fn capacity_is_bounded(seed in any::<u64>(), n in 1usize..5, m in 1usize..5) {
        let (w, _) = channel_and_input(seed, n, m);
        let mut kl = KlSolver::new(&w, VSolverConfig::default()).unwrap();
        let c = kl.capacity();
        let c0 = kl.zero_rate_threshold();
        prop_assert!(c >= 0.0 && c <= (n.min(m) as f64).ln() + 1e-9);
        prop_assert_eq!(c0, 0.0);
    }

    #[test]
    fn gallager_exponents_are_nonnegative(seed in any::<u64>(), rate in 0.0f64..1.5) {
        let (w, _) = channel_and_input(seed, 2, 3);
        let mut g = GallagerSolver::new(&w);
        prop_assert!(g.strong_converse(rate).unwrap() >= 0.0);
        prop_assert!(g.error_exponent(rate, 64.0).unwrap().to_f64() >= 0.0);
    }
}
