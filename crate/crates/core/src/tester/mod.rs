//! The single-level test `T_{k,delta}` and the multi-level test `T'_{k,eps}`.
//!
//! A trial draws `n` independent atoms of `D_{k,delta}`, one per input
//! coordinate, which determines `k` query points `x_1..x_k` in `{0,1}^n`.
//! The test accepts iff `(f(x_1), ..., f(x_k))`, read as predicate bits,
//! lies in `P_k`.

pub mod enumerate;
pub mod schedule;

pub use enumerate::DEFAULT_BUDGET;
pub use schedule::{LogExpr, LogScaled, ScheduleInvariants, ScheduleLevel, ScheduleMode, TestSchedule};

use crate::boolfn::{wht, BooleanFunction};
use crate::distribution::TestDistribution;
use crate::error::{Error, Result};
use crate::predicate::Predicate;
use crate::rational::{integer, to_f64, RationalJson};
use crate::rng::{self, Moments, Z99};
use crate::Rational;
use enumerate::{exact_expectation, float_expectation, Support};
use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use rand::Rng;
use serde::{Serialize, Serializer};

fn ser_rational<S: Serializer>(v: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    RationalJson::from(v).serialize(s)
}

fn ser_opt_rational<S: Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    v.as_ref().map(RationalJson::from).serialize(s)
}

/// `(2k+1) / 2^k`, the acceptance probability of a uniformly random pattern.
pub fn baseline(k: usize) -> Rational {
    Rational::new(BigInt::from(2 * k + 1), BigInt::one() << k)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptanceReport {
    pub estimate: f64,
    pub trials: u64,
    pub accepted: u64,
    /// 99% Wilson interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub halfwidth: f64,
    #[serde(serialize_with = "ser_opt_rational")]
    pub exact: Option<Rational>,
    #[serde(serialize_with = "ser_rational")]
    pub baseline: Rational,
    pub baseline_f64: f64,
    /// `max_{|S| = s} |E_S|` for `s = 1..=k`, when computed.
    pub es_magnitudes: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl AcceptanceReport {
    fn from_counts(k: usize, accepted: u64, trials: u64, warnings: Vec<String>) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(accepted, trials, Z99);
        let base = baseline(k);
        AcceptanceReport {
            estimate: accepted as f64 / trials as f64,
            trials,
            accepted,
            ci_lo,
            ci_hi,
            halfwidth: (ci_hi - ci_lo) / 2.0,
            exact: None,
            baseline_f64: to_f64(&base),
            baseline: base,
            es_magnitudes: None,
            warnings,
        }
    }

    /// True when there is no exact value or it lies inside the interval.
    pub fn exact_within_ci(&self) -> bool {
        self.exact.as_ref().is_none_or(|e| {
            let v = to_f64(e);
            self.ci_lo <= v && v <= self.ci_hi
        })
    }
}

/// How `E_S = E[prod_{i in S} f(x_i)]` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelationMethod {
    Exact,
    /// Closed form for a single character `chi_T`: `E_S = (E_D[prod_{i in S} z_i])^|T|`.
    Character,
    MonteCarlo {
        trials: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationValue {
    Exact(Rational),
    Estimate { mean: f64, std_error: f64, trials: u64 },
}

impl CorrelationValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            CorrelationValue::Exact(r) => to_f64(r),
            CorrelationValue::Estimate { mean, .. } => *mean,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            CorrelationValue::Exact(r) => Some(r),
            CorrelationValue::Estimate { .. } => None,
        }
    }
}

fn pattern(f: &BooleanFunction, points: &[usize]) -> u32 {
    points.iter().enumerate().fold(0, |acc, (i, &x)| acc | (f.bit(x) << i))
}

fn product_over(f: &BooleanFunction, subset: u32, points: &[usize]) -> i64 {
    let mut sign = 1i64;
    let mut s = subset;
    while s != 0 {
        sign *= f.value(points[s.trailing_zeros() as usize]) as i64;
        s &= s - 1;
    }
    sign
}

/// `T_{k,delta}` with its distribution, predicate and enumeration support
/// prepared once.
#[derive(Debug, Clone)]
pub struct Tester {
    dist: TestDistribution,
    predicate: Predicate,
    support: Support,
    budget: u128,
}

impl Tester {
    pub fn new(k: usize, delta: &Rational) -> Result<Self> {
        Ok(Self::from_distribution(TestDistribution::build(k, delta)?))
    }

    pub fn from_distribution(dist: TestDistribution) -> Self {
        let predicate = Predicate::for_k(dist.k()).expect("distribution was built for a valid k");
        let support = Support::new(&dist);
        Self { dist, predicate, support, budget: DEFAULT_BUDGET }
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    pub fn k(&self) -> usize {
        self.dist.k()
    }

    pub fn distribution(&self) -> &TestDistribution {
        &self.dist
    }

    pub fn predicate(&self) -> &Predicate {
        &self.predicate
    }

    fn check_subset(&self, subset: u32) -> Result<()> {
        if subset == 0 || subset >> self.k() != 0 {
            return Err(Error::InvalidArgument(format!("subset {subset:#b} must be a nonempty subset of [k]")));
        }
        Ok(())
    }

    /// Whether one sampled trial accepts.
    #[inline]
    fn trial<R: Rng + ?Sized>(
        &self,
        sampler: &crate::distribution::AtomSampler,
        f: &BooleanFunction,
        points: &mut [u32],
        rng: &mut R,
    ) -> bool {
        sampler.sample_points(f.n(), rng, points);
        let z = points.iter().enumerate().fold(0u32, |acc, (i, &x)| acc | (f.bit(x as usize) << i));
        self.predicate.contains(z)
    }

    /// Monte Carlo acceptance over `trials` independent trials.
    pub fn run(&self, f: &BooleanFunction, trials: u64, seed: u64) -> Result<AcceptanceReport> {
        if trials == 0 {
            return Err(Error::ZeroTrials);
        }
        let mut warnings = Vec::new();
        if !f.is_folded() {
            warnings.push("function is not folded".to_string());
        }
        let sampler = self.dist.sampler();
        let k = self.k();
        let parts = rng::batched(seed, trials, |rng, count| {
            let mut points = vec![0u32; k];
            (0..count).filter(|_| self.trial(&sampler, f, &mut points, rng)).count() as u64
        });
        Ok(AcceptanceReport::from_counts(k, parts.iter().sum(), trials, warnings))
    }

    /// Exact acceptance probability by enumerating every atom sequence.
    pub fn exact_acceptance(&self, f: &BooleanFunction) -> Result<Rational> {
        exact_expectation(&self.support, f.n(), self.budget, |p| self.predicate.contains(pattern(f, p)) as i64)
    }

    pub fn correlation_term(
        &self,
        f: &BooleanFunction,
        subset: u32,
        method: CorrelationMethod,
    ) -> Result<CorrelationValue> {
        self.check_subset(subset)?;
        match method {
            CorrelationMethod::Exact => {
                exact_expectation(&self.support, f.n(), self.budget, |p| product_over(f, subset, p))
                    .map(CorrelationValue::Exact)
            }
            CorrelationMethod::Character => {
                let t = f.as_character().ok_or(Error::NotACharacter)?;
                Ok(CorrelationValue::Exact(self.character_term(subset, t.count_ones())))
            }
            CorrelationMethod::MonteCarlo { trials, seed } => {
                if trials == 0 {
                    return Err(Error::ZeroTrials);
                }
                let sampler = self.dist.sampler();
                let k = self.k();
                let parts = rng::batched(seed, trials, |rng, count| {
                    let mut points = vec![0u32; k];
                    let mut idx = vec![0usize; k];
                    let mut m = Moments::default();
                    for _ in 0..count {
                        sampler.sample_points(f.n(), rng, &mut points);
                        idx.iter_mut().zip(&points).for_each(|(a, &b)| *a = b as usize);
                        m.push(product_over(f, subset, &idx) as f64);
                    }
                    m
                });
                let m = Moments::combine(&parts);
                Ok(CorrelationValue::Estimate { mean: m.mean, std_error: m.std_error(), trials })
            }
        }
    }

    /// `(E_D[prod_{i in S} z_i])^t`, the correlation term of any character of size `t`.
    pub fn character_term(&self, subset: u32, t: u32) -> Rational {
        Pow::pow(&self.dist.atom_moment(subset), t)
    }

    /// `P(empty) + sum_{S != empty} P(S) E_S` with every `E_S` enumerated separately.
    pub fn fourier_acceptance(&self, f: &BooleanFunction) -> Result<Rational> {
        let pf = self.predicate.fourier()?;
        let mut total = pf.coefficient(0);
        for s in 1..1u32 << self.k() {
            if pf.numerators()[s as usize] == 0 {
                continue;
            }
            let es = self.correlation_term(f, s, CorrelationMethod::Exact)?;
            total += pf.coefficient(s) * es.exact().expect("exact method");
        }
        Ok(total)
    }

    /// Acceptance of a character of size `t` in closed form.
    pub fn character_acceptance(&self, t: u32) -> Result<Rational> {
        let pf = self.predicate.fourier()?;
        Ok((0..1u32 << self.k())
            .filter(|&s| pf.numerators()[s as usize] != 0)
            .map(|s| pf.coefficient(s) * self.character_term(s, t))
            .sum())
    }

    /// `max |E_S|` for each `|S| = 1..=k`, exactly.
    pub fn es_magnitudes(&self, f: &BooleanFunction) -> Result<Vec<f64>> {
        let mut out = vec![0.0f64; self.k()];
        for s in 1..1u32 << self.k() {
            let v = self.correlation_term(f, s, CorrelationMethod::Exact)?.as_f64().abs();
            let size = s.count_ones() as usize - 1;
            out[size] = out[size].max(v);
        }
        Ok(out)
    }

    /// Monte Carlo report with the exact value and `E_S` magnitudes attached.
    pub fn run_with_exact(&self, f: &BooleanFunction, trials: u64, seed: u64) -> Result<AcceptanceReport> {
        let mut report = self.run(f, trials, seed)?;
        report.exact = Some(self.exact_acceptance(f)?);
        report.es_magnitudes = Some(self.es_magnitudes(f)?);
        Ok(report)
    }
}

/// `run` for a freshly built `T_{k,delta}`.
pub fn run_t(f: &BooleanFunction, k: usize, delta: &Rational, trials: u64, seed: u64) -> Result<AcceptanceReport> {
    Tester::new(k, delta)?.run(f, trials, seed)
}

pub fn exact_acceptance(f: &BooleanFunction, k: usize, delta: &Rational) -> Result<Rational> {
    Tester::new(k, delta)?.exact_acceptance(f)
}

pub fn fourier_acceptance(f: &BooleanFunction, k: usize, delta: &Rational) -> Result<Rational> {
    Tester::new(k, delta)?.fourier_acceptance(f)
}

/// Which levels of a schedule a multi-level run may pick from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelSelection {
    All,
    /// A single level; `0` is the top-level `eps`.
    Only(usize),
}

/// Levels in sampling order, each as a prepared single-level test.
fn level_testers(schedule: &TestSchedule, selection: LevelSelection) -> Result<Vec<Tester>> {
    let eps_of = |j: usize| -> Result<Rational> {
        if j == 0 {
            return Ok(schedule.epsilon.clone());
        }
        let level = schedule.level(j).ok_or_else(|| Error::InvalidArgument(format!("no level {j}")))?;
        match (&level.epsilon, level.symbolic_only) {
            (Some(e), false) => Ok(e.clone()),
            _ => Err(Error::SymbolicLevel(j)),
        }
    };
    let js: Vec<usize> = match selection {
        LevelSelection::All => schedule.levels.iter().map(|l| l.j).collect(),
        LevelSelection::Only(j) => vec![j],
    };
    js.into_iter().map(|j| Tester::new(schedule.k, &eps_of(j)?)).collect()
}

/// `T'`: every trial picks a level uniformly and runs one trial of it.
pub fn run_t_prime(
    f: &BooleanFunction,
    schedule: &TestSchedule,
    selection: LevelSelection,
    trials: u64,
    seed: u64,
    with_exact: bool,
) -> Result<AcceptanceReport> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let testers = level_testers(schedule, selection)?;
    let samplers: Vec<_> = testers.iter().map(|t| t.dist.sampler()).collect();
    let k = schedule.k;
    let parts = rng::batched(seed, trials, |rng, count| {
        let mut points = vec![0u32; k];
        (0..count)
            .filter(|_| {
                let l = rng.random_range(0..testers.len());
                testers[l].trial(&samplers[l], f, &mut points, rng)
            })
            .count() as u64
    });
    let mut warnings = Vec::new();
    if !f.is_folded() {
        warnings.push("function is not folded".to_string());
    }
    let mut report = AcceptanceReport::from_counts(k, parts.iter().sum(), trials, warnings);
    if with_exact {
        let mut total = Rational::zero();
        for t in &testers {
            total += t.exact_acceptance(f)?;
        }
        report.exact = Some(total / integer(testers.len() as i64));
    }
    Ok(report)
}

/// Exact or sampled acceptance for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessCertificate {
    pub degree: usize,
    pub tau: f64,
    pub max_low_degree_influence: f64,
    pub quasirandom: bool,
    pub acceptance: f64,
    #[serde(serialize_with = "ser_opt_rational")]
    pub exact: Option<Rational>,
    pub ci: Option<(f64, f64)>,
    /// `(2k+1)/2^k + delta`
    pub target: f64,
    /// `target - acceptance`; negative means the acceptance exceeds the soundness target.
    pub margin: f64,
}

/// Influence profile and acceptance of `f` next to the soundness target.
/// Purely diagnostic: the asymptotic `d` and `tau` of the soundness claim are
/// far outside desk scale.
pub fn soundness_certificate(
    f: &BooleanFunction,
    tester: &Tester,
    degree: usize,
    tau: f64,
    evaluation: Evaluation,
) -> Result<SoundnessCertificate> {
    let expansion = wht(f);
    let max_inf = expansion.max_degree_influence(degree);
    let (acceptance, exact, ci) = match evaluation {
        Evaluation::Exact => {
            let e = tester.exact_acceptance(f)?;
            (to_f64(&e), Some(e), None)
        }
        Evaluation::MonteCarlo { trials, seed } => {
            let r = tester.run(f, trials, seed)?;
            (r.estimate, None, Some((r.ci_lo, r.ci_hi)))
        }
    };
    let target = to_f64(&(baseline(tester.k()) + tester.dist.epsilon()));
    Ok(SoundnessCertificate {
        degree,
        tau,
        max_low_degree_influence: max_inf,
        quasirandom: expansion.is_quasirandom(degree, tau),
        acceptance,
        exact,
        ci,
        target,
        margin: target - acceptance,
    })
}

/// Smoothing and truncation parameters for the low-degree replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct LowDegreeParams {
    pub gamma: f64,
    /// `d_1, d_2, ...`; the `r`-th smallest query index of `S` is truncated at `d_r`.
    pub degrees: Vec<usize>,
    pub err: f64,
    /// Window `[s, S]` whose Fourier mass enters the bound.
    pub s: f64,
    pub big_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetGap {
    pub subset: u32,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowDegreeReport {
    pub gaps: Vec<SubsetGap>,
    pub max_gap: f64,
    pub two_err: f64,
    /// `sum_{s <= |T| <= S} f(T)^2`
    pub band_mass: f64,
    /// `2 err + k sqrt(band_mass)`
    pub bound: f64,
    /// `err_1` read as `err`.
    pub err1_nominal: f64,
    /// Smallest `err_1` with `1-(1-gamma)^s <= err_1/k` and `rho^S <= err_1/k`.
    pub err1_measured: f64,
    pub rho: f64,
}

/// `|E[prod_{i in S} f(x_i)] - E[prod_r (T_{1-gamma} f)^{<= d_r}(x_{l_r})]|`
/// for every nonempty `S`, by floating point enumeration.
pub fn lowdeg_gap_diagnostic(
    f: &BooleanFunction,
    tester: &Tester,
    params: &LowDegreeParams,
) -> Result<LowDegreeReport> {
    let k = tester.k();
    if params.degrees.len() < k {
        return Err(Error::InvalidArgument(format!("need {k} degree cutoffs, got {}", params.degrees.len())));
    }
    let expansion = wht(f);
    let smoothed = expansion.noise(params.gamma)?;
    let tables: Vec<Vec<f64>> = params.degrees[..k].iter().map(|&d| smoothed.truncate(d).hypercube_values()).collect();
    let mut gaps = Vec::with_capacity((1 << k) - 1);
    for subset in 1..1u32 << k {
        let members: Vec<usize> = (0..k).filter(|i| (subset >> i) & 1 == 1).collect();
        let diff = float_expectation(&tester.support, f.n(), tester.budget, |p| {
            let mut orig = 1.0;
            let mut low = 1.0;
            for (r, &i) in members.iter().enumerate() {
                orig *= f.value(p[i]) as f64;
                low *= tables[r][p[i]];
            }
            orig - low
        })?;
        gaps.push(SubsetGap { subset, gap: diff.abs() });
    }
    let max_gap = gaps.iter().map(|g| g.gap).fold(0.0, f64::max);
    let band_mass: f64 = expansion
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(t, _)| {
            let size = t.count_ones() as f64;
            params.s <= size && size <= params.big_s
        })
        .map(|(_, c)| c * c)
        .sum();
    let rho = (0..k).map(|i| tester.dist.correlation_rho(i)).try_fold(0.0, |m, r| r.map(|r| f64::max(m, r)))?;
    let low_side = 1.0 - (1.0 - params.gamma).powf(params.s);
    let high_side = rho.powf(params.big_s);
    Ok(LowDegreeReport {
        gaps,
        max_gap,
        two_err: 2.0 * params.err,
        band_mass,
        bound: 2.0 * params.err + k as f64 * band_mass.sqrt(),
        err1_nominal: params.err,
        err1_measured: k as f64 * low_side.max(high_side),
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t7() -> Tester {
        Tester::new(7, &ratio(1, 49)).unwrap()
    }

    #[test]
    fn baseline_k7() {
        assert_eq!(baseline(7), ratio(15, 128));
    }

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(100, 100, Z99);
        assert!(hi == 1.0 && lo > 0.9);
        let (lo, hi) = wilson_interval(0, 100, Z99);
        assert!(lo == 0.0 && hi < 0.1);
    }

    #[test]
    fn dictators_always_accept() {
        let t = t7();
        for i in 0..4 {
            let f = BooleanFunction::dictator(4, i).unwrap();
            assert_eq!(t.exact_acceptance(&f).unwrap(), Rational::one());
            let r = t.run(&f, 5000, i as u64).unwrap();
            assert_eq!(r.accepted, 5000);
            assert!(r.warnings.is_empty());
        }
    }

    #[test]
    fn constant_accepts_with_warning() {
        let f = BooleanFunction::constant(3, 1).unwrap();
        let r = t7().run(&f, 1000, 0).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn rejecting_counter_case() {
        // f depends only on x_0: +1 unless x_0 = 1 and x_1 = 1, where it is -1.
        // Coordinate 0 carries an atom z; the pattern is (f(x_i))_i with
        // x_i = (z_i, w_i) for coordinate-1 atom w. Brute force over atom pairs.
        let f = BooleanFunction::from_fn(2, |x| x == 0b11).unwrap();
        let t = t7();
        let atoms = t.distribution().atoms();
        let mut expected = Rational::zero();
        for a in atoms {
            for b in atoms {
                let z = a.bits & b.bits;
                if t.predicate().contains(z) {
                    expected += &a.mass * &b.mass;
                }
            }
        }
        assert_eq!(t.exact_acceptance(&f).unwrap(), expected);
        assert!(expected < Rational::one());
    }

    #[test]
    fn parity_closed_form_matches_enumeration() {
        let t = t7();
        let f = BooleanFunction::parity(3).unwrap();
        let exact = t.exact_acceptance(&f).unwrap();
        assert_eq!(exact, t.character_acceptance(3).unwrap());
        assert_eq!(exact, t.fourier_acceptance(&f).unwrap());
    }

    #[test]
    fn correlation_terms() {
        let t = t7();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = BooleanFunction::random_folded(3, &mut rng).unwrap();
        for i in 0..7 {
            assert_eq!(
                t.correlation_term(&f, 1 << i, CorrelationMethod::Exact).unwrap(),
                CorrelationValue::Exact(Rational::zero())
            );
        }
        let parity = BooleanFunction::parity(3).unwrap();
        let pair = t.correlation_term(&parity, 0b11, CorrelationMethod::Exact).unwrap();
        assert_eq!(pair.exact().unwrap(), &Pow::pow(ratio(-2, 43), 3u32));
        assert_eq!(pair, t.correlation_term(&parity, 0b11, CorrelationMethod::Character).unwrap());
        let dict = BooleanFunction::dictator(3, 1).unwrap();
        let full = t.correlation_term(&dict, 0x7f, CorrelationMethod::Exact).unwrap();
        assert_eq!(full.exact().unwrap(), &t.distribution().atom_moment(0x7f));
        assert!(matches!(t.correlation_term(&f, 0b11, CorrelationMethod::Character), Err(Error::NotACharacter)));
        assert!(t.correlation_term(&f, 0, CorrelationMethod::Exact).is_err());
        let mc = t.correlation_term(&parity, 0b11, CorrelationMethod::MonteCarlo { trials: 100_000, seed: 1 }).unwrap();
        if let CorrelationValue::Estimate { mean, std_error, .. } = mc {
            assert!((mean - pair.as_f64()).abs() < 4.0 * std_error);
        }
    }

    #[test]
    fn random_folded_decomposition_identity() {
        let t = t7();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let f = BooleanFunction::random_folded(3, &mut rng).unwrap();
            assert_eq!(t.exact_acceptance(&f).unwrap(), t.fourier_acceptance(&f).unwrap());
        }
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let t = t7();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = BooleanFunction::random_folded(5, &mut rng).unwrap();
        let r = t.run_with_exact(&f, 100_000, 9).unwrap();
        assert!(r.exact_within_ci(), "{r:?}");
        assert_eq!(r.es_magnitudes.as_ref().unwrap()[0], 0.0);
    }

    #[test]
    fn reports_are_deterministic() {
        let t = t7();
        let f = BooleanFunction::majority(5).unwrap();
        assert_eq!(t.run(&f, 20_000, 4).unwrap(), t.run(&f, 20_000, 4).unwrap());
    }

    #[test]
    fn t_prime_levels() {
        let s = TestSchedule::practical(7, &ratio(1, 49), &[ratio(1, 500), ratio(1, 5000)]).unwrap();
        let dict = BooleanFunction::dictator(6, 2).unwrap();
        let r = run_t_prime(&dict, &s, LevelSelection::All, 10_000, 1, false).unwrap();
        assert_eq!(r.accepted, 10_000);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = BooleanFunction::random_folded(4, &mut rng).unwrap();
        let r = run_t_prime(&f, &s, LevelSelection::All, 100_000, 2, true).unwrap();
        assert!(r.exact_within_ci());

        let single = run_t_prime(&f, &s, LevelSelection::Only(1), 50_000, 3, true).unwrap();
        let direct = Tester::new(7, &ratio(1, 500)).unwrap().exact_acceptance(&f).unwrap();
        assert_eq!(single.exact.as_ref().unwrap(), &direct);
        assert!(single.exact_within_ci());

        let paper = TestSchedule::paper_exact(7, &ratio(1, 49), 2).unwrap();
        assert!(matches!(run_t_prime(&f, &paper, LevelSelection::All, 10, 0, false), Err(Error::SymbolicLevel(1))));
        assert!(run_t_prime(&f, &paper, LevelSelection::Only(0), 10, 0, false).is_ok());
    }

    #[test]
    fn soundness_certificate_cases() {
        let t = t7();
        let dict = BooleanFunction::dictator(5, 0).unwrap();
        let c = soundness_certificate(&dict, &t, 3, 0.1, Evaluation::Exact).unwrap();
        assert!(!c.quasirandom && c.acceptance == 1.0 && c.margin < 0.0);
        let parity = BooleanFunction::parity(5).unwrap();
        let c = soundness_certificate(&parity, &t, 4, 0.01, Evaluation::Exact).unwrap();
        assert!(c.quasirandom);
        assert_eq!(c.exact.unwrap(), t.character_acceptance(5).unwrap());
    }

    #[test]
    fn lowdeg_identity_operators_give_zero_gap() {
        let t = t7();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = BooleanFunction::random_folded(3, &mut rng).unwrap();
        let params = LowDegreeParams { gamma: 0.0, degrees: vec![3; 7], err: 0.01, s: 1.0, big_s: 2.0 };
        let r = lowdeg_gap_diagnostic(&f, &t, &params).unwrap();
        assert!(r.max_gap < 1e-12);
    }

    #[test]
    fn lowdeg_dictator_closed_form() {
        let t = t7();
        let f = BooleanFunction::dictator(3, 1).unwrap();
        let gamma = 0.1;
        let params = LowDegreeParams { gamma, degrees: vec![1; 7], err: 0.01, s: 1.0, big_s: 3.0 };
        let r = lowdeg_gap_diagnostic(&f, &t, &params).unwrap();
        for g in &r.gaps {
            let es = to_f64(&t.distribution().atom_moment(g.subset));
            let expected = es.abs() * (1.0 - (1.0f64 - gamma).powi(g.subset.count_ones() as i32));
            assert!((g.gap - expected).abs() < 1e-12, "{g:?}");
        }
        assert!((r.band_mass - 1.0).abs() < 1e-12);
        assert!(r.err1_measured > 0.0);
    }
}
