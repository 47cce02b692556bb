use dictlab::boolfn::{inverse_wht, wht, wht_exact, BooleanFunction};
use dictlab::correlated::{efron_stein, FiniteProductSpace};
use dictlab::distribution::TestDistribution;
use dictlab::gaussian::{solve_beta, CovarianceMatrix};
use dictlab::predicate::Predicate;
use dictlab::rational::{ratio, to_f64};
use dictlab::rng::Z99;
use dictlab::tester::{baseline, wilson_interval, CorrelationMethod, CorrelationValue, Tester};
use dictlab::Rational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table(n: usize) -> impl Strategy<Value = BooleanFunction> {
    proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 1 << n)
        .prop_map(move |v| BooleanFunction::from_values(n, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn wht_round_trip_and_parseval(f in (1usize..=8).prop_flat_map(table)) {
        let e = wht(&f);
        let back = inverse_wht(&e);
        for (a, &b) in back.iter().zip(f.values()) {
            prop_assert_eq!(*a, b as f64);
        }
        let total: f64 = e.coeffs().iter().map(|c| c * c).sum();
        prop_assert_eq!(total, 1.0);
        prop_assert!(wht_exact(&f).parseval_holds());
    }

    #[test]
    fn folding_kills_even_coefficients(f in (1usize..=7).prop_flat_map(table)) {
        let g = f.fold_enforce();
        prop_assert!(g.is_folded());
        for (mask, c) in wht_exact(&g).numerators().iter().enumerate() {
            if mask.count_ones() % 2 == 0 {
                prop_assert_eq!(*c, 0);
            }
        }
    }

    #[test]
    fn predicate_structure(m in 3u32..=5) {
        let p = Predicate::build(m).unwrap();
        let k = p.k();
        prop_assert_eq!(p.accepting_count(), 2 * k + 1);
        let code: Vec<u32> = (1..1u32 << m).map(|a| dictlab::predicate::hadamard_codeword(m, a)).collect();
        for &h in &code {
            prop_assert_eq!(h.count_ones() as usize, k.div_ceil(2));
            for &g in &code {
                prop_assert!(h == g || code.contains(&(h ^ g)));
            }
        }
        if k <= 15 {
            prop_assert_eq!(p.fourier().unwrap().coefficient(0), baseline(k));
        }
    }

    #[test]
    fn distribution_moments(den in 49i64..2000) {
        let d = TestDistribution::build(7, &ratio(1, den)).unwrap();
        prop_assert!(d.total_mass().is_one());
        for i in 0..7 {
            prop_assert_eq!(d.marginal(i).unwrap().1, ratio(1, 2));
            prop_assert!(d.connectivity_check(i).unwrap());
            prop_assert!(d.correlation_rho(i).unwrap() <= d.rho_bound() + 1e-12);
        }
    }

    #[test]
    fn sampler_stays_on_support(seed in any::<u64>()) {
        let d = TestDistribution::build(7, &ratio(1, 60)).unwrap();
        let p = Predicate::for_k(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sampler = d.sampler();
        for _ in 0..200 {
            prop_assert!(p.contains(sampler.draw(&mut rng)));
        }
    }

    #[test]
    fn efron_stein_on_random_spaces(seed in any::<u64>(), n in 1usize..=3, q in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probs: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..q).map(|_| rng.random_range(0.1..1.0)).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|x| x / s).collect()
            })
            .collect();
        let space = FiniteProductSpace::new(probs).unwrap();
        let g: Vec<f64> = (0..space.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let es = efron_stein(&g, &space).unwrap();
        prop_assert!(es.reconstruction_error(&g) < 1e-10);
        prop_assert!(es.orthogonality_error(&g, &space) < 1e-10);
        prop_assert!(es.conditional_mean_error(&space) < 1e-10);
        prop_assert!(es.locality_error(&space) < 1e-10);
    }

    #[test]
    fn square_root_residual(k in 2usize..=31, t in 0.0f64..1.0) {
        let limit = 1.0 / (k as f64);
        let delta = t * limit;
        let m = solve_beta(k, delta).unwrap();
        prop_assert!(m.beta <= delta + 1e-15);
        prop_assert!(m.residual(&CovarianceMatrix::new(k, delta).unwrap()) < 1e-12);
    }

    #[test]
    fn fourier_matches_enumeration(f in (1usize..=3).prop_flat_map(table)) {
        let t = Tester::new(7, &ratio(1, 49)).unwrap();
        prop_assert_eq!(t.exact_acceptance(&f).unwrap(), t.fourier_acceptance(&f).unwrap());
    }

    #[test]
    fn folded_singletons_vanish(f in (1usize..=3).prop_flat_map(table)) {
        let g = f.fold_enforce();
        let t = Tester::new(7, &ratio(1, 49)).unwrap();
        for i in 0..7 {
            prop_assert_eq!(
                t.correlation_term(&g, 1 << i, CorrelationMethod::Exact).unwrap(),
                CorrelationValue::Exact(Rational::zero())
            );
        }
    }
}

/// The interval is a statistical statement, so coverage is measured over many
/// seeded repetitions rather than asserted per case.
#[test]
fn wilson_interval_coverage() {
    let f = BooleanFunction::majority(3).unwrap();
    let t = Tester::new(7, &ratio(1, 49)).unwrap();
    let exact = to_f64(&t.exact_acceptance(&f).unwrap());
    let reps = 1000;
    let covered = (0..reps)
        .filter(|&seed| {
            let r = t.run(&f, 2000, seed).unwrap();
            r.ci_lo <= exact && exact <= r.ci_hi
        })
        .count();
    // Coverage must be statistically consistent with at least 99%.
    let (_, hi) = wilson_interval(covered as u64, reps, Z99);
    println!("wilson coverage {covered}/{reps}");
    assert!(hi >= 0.99, "coverage {covered}/{reps}");
}
