//! Acceptance suite: one line per criterion and a summary line.
//!
//! A failing criterion is reported as FAIL but does not abort the rest of the
//! workspace run; set `DICTLAB_ACCEPTANCE_STRICT=1` to exit nonzero instead.

use dictlab::boolfn::{BooleanFunction, Measure, MultilinearPoly};
use dictlab::correlated::{efron_stein, verify_commutation, verify_contraction, JointTable, MarkovOperator};
use dictlab::distribution::{Encoding, TestDistribution};
use dictlab::gaussian::{
    empirical_covariance, gaussian_from_distribution, hypercontractivity_check, perturbation_check, solve_beta,
    CovarianceMatrix,
};
use dictlab::predicate::Predicate;
use dictlab::rational::{integer, ratio, to_f64};
use dictlab::tester::{baseline, LogExpr, LogScaled, TestSchedule, Tester};
use dictlab::Rational;
use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::Instant;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn eps_pairs() -> Vec<(usize, Rational)> {
    [7usize, 15]
        .iter()
        .flat_map(|&k| {
            let kk = (k * k) as i64;
            [(k, ratio(1, kk)), (k, ratio(1, 2 * kk))]
        })
        .collect()
}

fn completeness() -> Outcome {
    let mut checked = 0;
    for (k, eps, max_n) in [(7usize, ratio(1, 49), 5usize), (15, ratio(1, 225), 3)] {
        let t = Tester::new(k, &eps).unwrap();
        for n in 1..=max_n {
            for i in 0..n {
                let f = BooleanFunction::dictator(n, i).unwrap();
                let acc = t.exact_acceptance(&f).unwrap();
                if acc != Rational::one() {
                    return (false, format!("k={k} n={n} i={i}: acceptance {acc}"));
                }
                checked += 1;
            }
        }
    }
    (true, format!("{checked} dictators accept with probability exactly 1"))
}

fn distribution_exactness() -> Outcome {
    let mut failures = Vec::new();
    for (k, eps) in eps_pairs() {
        let d = TestDistribution::build(k, &eps).unwrap();
        let tag = format!("k={k} eps={eps}");
        if d.total_mass() != Rational::one() {
            failures.push(format!("{tag}: total mass {}", d.total_mass()));
        }
        let half = ratio(1, 2);
        for i in 0..k {
            if d.marginal(i).unwrap() != (half.clone(), half.clone()) {
                failures.push(format!("{tag}: marginal {i}"));
            }
        }
        let expected_cov = -(&eps / (integer(2) * (Rational::one() - d.alpha())));
        for i in 0..k {
            for j in i + 1..k {
                if d.covariance(i, j, Encoding::ZeroOne).unwrap() != expected_cov {
                    failures.push(format!("{tag}: covariance ({i},{j})"));
                }
            }
        }
        let expected_min = &eps / (Rational::one() - d.alpha());
        if d.min_mass() != expected_min {
            failures.push(format!("{tag}: minimum atom {} != eps/(1-alpha) = {expected_min}", d.min_mass()));
        }
        let support: BTreeSet<u32> = d.atoms().iter().filter(|a| !a.mass.is_zero()).map(|a| a.bits).collect();
        let pk: BTreeSet<u32> = Predicate::for_k(k).unwrap().strings().iter().map(|s| s.0).collect();
        if support != pk {
            failures.push(format!("{tag}: support differs from P_k"));
        }
        for i in 0..k {
            if !d.connectivity_check(i).unwrap() {
                failures.push(format!("{tag}: coordinate {i} disconnected"));
            }
        }
    }
    if failures.is_empty() {
        (true, "masses, marginals, covariances, minimum atom, support and connectivity exact".into())
    } else {
        (false, failures.join("; "))
    }
}

fn predicate_structure() -> Outcome {
    for k in [7usize, 15] {
        let p = Predicate::for_k(k).unwrap();
        if p.accepting_count() != 2 * k + 1 {
            return (false, format!("k={k}: {} accepting strings", p.accepting_count()));
        }
        let pf = p.fourier().unwrap();
        if pf.coefficient(0) != baseline(k) {
            return (false, format!("k={k}: empty coefficient {}", pf.coefficient(0)));
        }
        if pf.max_abs() > Rational::one() {
            return (false, format!("k={k}: coefficient above 1"));
        }
        let code = TestDistribution::uniform_code(k).unwrap();
        for i in 0..k {
            for j in i + 1..k {
                if !code.atom_moment((1 << i) | (1 << j)).is_zero() {
                    return (false, format!("k={k}: code pair ({i},{j}) correlated"));
                }
            }
        }
    }
    (true, "2k+1 strings, P(empty) = (2k+1)/2^k, |P(S)| <= 1, code pairwise independent".into())
}

fn correlation_bound() -> Outcome {
    let mut worst: f64 = f64::NEG_INFINITY;
    for k in [7usize, 15] {
        let d = TestDistribution::build(k, &ratio(1, (k * k) as i64)).unwrap();
        let bound = d.rho_bound();
        for i in 0..k {
            let split = d.split(i).unwrap();
            let rho = d.correlation_rho(i).unwrap();
            let a0 = to_f64(&split.min_atom());
            let generic = 1.0 - a0 * a0 / 2.0;
            if rho > bound + 1e-12 || rho > generic + 1e-12 {
                return (false, format!("k={k} i={i}: rho {rho} vs {bound} / {generic}"));
            }
            worst = worst.max(rho - bound);
        }
    }
    (true, format!("max rho - bound = {worst:.3e}"))
}

fn decomposition_identity() -> Outcome {
    let t = Tester::new(7, &ratio(1, 49)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for idx in 0..20 {
        let f = BooleanFunction::random_folded(4, &mut rng).unwrap();
        let exact = t.exact_acceptance(&f).unwrap();
        let fourier = t.fourier_acceptance(&f).unwrap();
        if exact != fourier {
            return (false, format!("random f #{idx}: {exact} != {fourier}"));
        }
    }
    for n in [3usize, 5] {
        let f = BooleanFunction::parity(n).unwrap();
        let exact = t.exact_acceptance(&f).unwrap();
        let closed = t.character_acceptance(n as u32).unwrap();
        let fourier = t.fourier_acceptance(&f).unwrap();
        if exact != closed || exact != fourier {
            return (false, format!("parity n={n}: {exact} / {closed} / {fourier}"));
        }
    }
    (true, "20 random folded f and parity n=3,5 agree as exact rationals".into())
}

fn empirical_soundness() -> Outcome {
    let t = Tester::new(7, &ratio(1, 49)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let target = 15.0 / 128.0;
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    let count = 200;
    for idx in 0..count {
        let f = BooleanFunction::random_folded(10, &mut rng).unwrap();
        let r = t.run(&f, 100_000, 1000 + idx).unwrap();
        sum += r.estimate;
        max = max.max(r.estimate);
    }
    let mean = sum / count as f64;
    let ok = (mean - target).abs() <= 0.005 && max <= target + 0.03;
    (ok, format!("mean {mean:.5} (target {target:.5}), max {max:.5}"))
}

fn efron_stein_markov() -> Outcome {
    let d = TestDistribution::build(7, &ratio(1, 49)).unwrap();
    let op = MarkovOperator::homogeneous(JointTable::from_split(&d.split(0).unwrap()), 2).unwrap();
    let ys = op.y_space().unwrap();
    let rho = op.rho().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for idx in 0..100 {
        let g: Vec<f64> = (0..ys.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let es = efron_stein(&g, &ys).unwrap();
        let devs = [
            es.reconstruction_error(&g),
            es.locality_error(&ys),
            es.conditional_mean_error(&ys),
            verify_commutation(&op, &g).unwrap(),
        ];
        let dev = devs.iter().copied().fold(0.0, f64::max);
        worst = worst.max(dev);
        if dev > 1e-10 {
            return (false, format!("g #{idx}: deviations {devs:?}"));
        }
        if !verify_contraction(&op, &g, rho).unwrap().holds {
            return (false, format!("g #{idx}: contraction violated"));
        }
    }
    (true, format!("100 random g, max deviation {worst:.2e}, rho = {rho:.6}"))
}

fn gaussian_construction() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in [7usize, 15] {
        for delta in [0.0, 1e-4, 1e-3, 1e-2, 2.0 / 43.0] {
            let m = solve_beta(k, delta).unwrap();
            let res = m.residual(&CovarianceMatrix::new(k, delta).unwrap());
            worst = worst.max(res);
            if res > 1e-12 || m.beta > delta {
                return (false, format!("k={k} delta={delta}: residual {res:e}, beta {}", m.beta));
            }
        }
    }
    let mut dev_worst: f64 = 0.0;
    for (k, eps) in [(7usize, ratio(1, 49)), (15, ratio(1, 225))] {
        let sigma = gaussian_from_distribution(&TestDistribution::build(k, &eps).unwrap());
        let m = solve_beta(k, sigma.delta()).unwrap();
        let emp = empirical_covariance(&m, 1_000_000, k as u64).unwrap();
        let dev = emp.max_deviation(&sigma);
        dev_worst = dev_worst.max(dev);
        if dev > 5e-3 {
            return (false, format!("k={k}: empirical covariance off by {dev}"));
        }
    }
    (true, format!("max residual {worst:.2e}, max empirical deviation {dev_worst:.2e}"))
}

fn perturbation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut worst_z: f64 = 0.0;
    let mut cases = 0;
    for degree in 1..=4 {
        for delta in [0.01, 0.05] {
            for _ in 0..50 {
                let p = MultilinearPoly::random_unit(12, degree, &mut rng).unwrap();
                let seed = rng.random();
                let r = perturbation_check(&p, delta, 10_000, seed).unwrap();
                worst_z = worst_z.max(r.z_score());
                if r.z_score() > 4.0 || !r.within_bound() {
                    return (false, format!("d={degree} delta={delta}: {r:?}"));
                }
                cases += 1;
            }
        }
    }
    (true, format!("{cases} cases, max |z| = {worst_z:.2}"))
}

fn hypercontractivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for idx in 0..50 {
        let degree = idx % 3 + 1;
        let p = MultilinearPoly::random_unit(10, degree, &mut rng).unwrap();
        let r = hypercontractivity_check(&p, 4, Measure::Uniform).unwrap();
        worst = worst.max(r.lhs / r.rhs);
        if !r.holds() {
            return (false, format!("poly #{idx}: {} > {}", r.lhs, r.rhs));
        }
    }
    (true, format!("50 polynomials, max ||Q||_4 / bound = {worst:.4}"))
}

fn schedule_arithmetic() -> Outcome {
    let k = 7usize;
    let eps = ratio(1, 49);
    let paper = TestSchedule::paper_exact(k, &eps, 3).unwrap();
    if paper.err != ratio(1, 31360) {
        return (false, format!("err = {}", paper.err));
    }
    if paper.r != Rational::from_integer(BigInt::from(219520u64).pow(2u32)) {
        return (false, format!("r = {}", paper.r));
    }
    // log2(err) - (k^10 / (err^3 eps_0))^k, evaluated independently
    let base = Pow::pow(integer(7), 10u32) / Pow::pow(ratio(1, 31360), 3u32) / &eps;
    let n1 = Pow::pow(&base, 7u32);
    let closed = -to_f64(&n1) + (1.0f64 / 31360.0).log2();
    let got = paper.levels[0].log2_epsilon.to_f64();
    let rel = ((got - closed) / closed).abs();
    let exact_part = matches!(&paper.levels[0].log2_epsilon, LogExpr::Lin { exact, .. } if *exact == -n1.clone());
    if rel > 1e-6 || !exact_part {
        return (false, format!("log2 eps_1 = {got:e} vs {closed:e}"));
    }
    let practical =
        TestSchedule::practical(k, &eps, &[ratio(1, 49), ratio(1, 500), ratio(1, 5000), ratio(1, 50000)]).unwrap();
    for s in [&paper, &practical] {
        let inv = s.invariants();
        if !(inv.window_chain && inv.windows_disjoint && inv.epsilon_decreasing && inv.s_increasing) {
            return (false, format!("{:?} invariants {inv:?}", s.mode));
        }
    }
    let target = LogScaled { coeff: integer(2 * k as i64), ln_power: 1 };
    for l in practical.levels.iter().chain(paper.levels.iter().take(1)) {
        let prod = l.gamma.as_ref().unwrap() * l.d1.as_ref().unwrap();
        if prod != target {
            return (false, format!("level {}: gamma d = {:?}", l.j, prod));
        }
    }
    if !paper.invariants().gamma_d_identity {
        return (false, "gamma d identity fails on symbolic levels".into());
    }
    (true, format!("err, r exact; log2 eps_1 = {got:.6e} (rel err {rel:.1e}); invariants hold in both modes"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("perfect completeness", completeness),
        ("distribution exactness", distribution_exactness),
        ("predicate structure", predicate_structure),
        ("correlation bound", correlation_bound),
        ("soundness decomposition identity", decomposition_identity),
        ("empirical soundness", empirical_soundness),
        ("Efron-Stein and Markov properties", efron_stein_markov),
        ("Gaussian construction", gaussian_construction),
        ("perturbation lemma", perturbation),
        ("hypercontractivity", hypercontractivity),
        ("schedule arithmetic", schedule_arithmetic),
    ];
    let mut failed = 0;
    for (idx, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = run();
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {:>2} {} {name} ({secs:.1}s): {detail}", idx + 1, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 && std::env::var("DICTLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
