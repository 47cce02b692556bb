//! Gaussian ensembles with covariance `(1+delta) I - delta J`, their explicit
//! square root, and Monte Carlo checks of low-degree robustness,
//! hypercontractivity and the correlated/independent product gap.

use crate::boolfn::{Measure, MultilinearPoly, NormOrder};
use crate::distribution::TestDistribution;
use crate::error::{Error, Result};
use crate::rational::to_f64;
use crate::rng::{self, Moments, Z99};
use crate::Rational;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

const NORM_SLACK: f64 = 1e-12;

/// `(1+delta) I - delta J`: unit diagonal, `-delta` off the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    k: usize,
    delta: f64,
    exact: Option<Rational>,
}

impl CovarianceMatrix {
    pub fn new(k: usize, delta: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("k = {k} must be at least 2")));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::NegativeDelta(delta));
        }
        Ok(Self { k, delta, exact: None })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Exact off-diagonal magnitude when built from a distribution.
    pub fn exact_delta(&self) -> Option<&Rational> {
        self.exact.as_ref()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            1.0
        } else {
            -self.delta
        }
    }

    /// Row-major `k x k`.
    pub fn dense(&self) -> Vec<f64> {
        let k = self.k;
        (0..k * k).map(|e| self.entry(e / k, e % k)).collect()
    }
}

/// `delta = 2 eps / (1 - alpha)`, the +-1 covariance of `D_{k,eps}`.
pub fn gaussian_from_distribution(d: &TestDistribution) -> CovarianceMatrix {
    let exact = d.gaussian_delta();
    CovarianceMatrix { k: d.k(), delta: to_f64(&exact), exact: Some(exact) }
}

/// `M = (1 - delta') ((1 + beta) I - beta J)` with `M M = Sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqrtMatrix {
    pub k: usize,
    pub beta: f64,
    pub delta_prime: f64,
    /// `1 - delta'`, kept separately so it is not recomputed with cancellation.
    pub scale: f64,
}

/// Smaller root of `k' beta^2 - 2 beta + delta = 0`, `k' = k + delta k - delta - 2`.
///
/// Uses `beta = delta / (1 + sqrt(1 - k' delta))`, which avoids the
/// cancellation in `(1 - sqrt(.)) / k'` for small `delta`.
pub fn solve_beta(k: usize, delta: f64) -> Result<SqrtMatrix> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be at least 2")));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::NegativeDelta(delta));
    }
    let kf = k as f64;
    let k_prime = kf + delta * kf - delta - 2.0;
    let discriminant = 1.0 - k_prime * delta;
    if discriminant < 0.0 {
        return Err(Error::DeltaInadmissible { k, delta, discriminant });
    }
    let beta = delta / (1.0 + discriminant.sqrt());
    let scale = 1.0 / (1.0 + (kf - 1.0) * beta * beta).sqrt();
    Ok(SqrtMatrix { k, beta, delta_prime: 1.0 - scale, scale })
}

impl SqrtMatrix {
    pub fn for_covariance(sigma: &CovarianceMatrix) -> Result<Self> {
        solve_beta(sigma.k, sigma.delta)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let diag = if i == j { 1.0 + self.beta } else { 0.0 };
        self.scale * (diag - self.beta)
    }

    pub fn dense(&self) -> Vec<f64> {
        let k = self.k;
        (0..k * k).map(|e| self.entry(e / k, e % k)).collect()
    }

    /// `x = M y` in `O(k)`.
    pub fn apply(&self, y: &[f64], x: &mut [f64]) {
        let sum: f64 = y.iter().sum();
        let shift = self.beta * sum;
        for (xi, &yi) in x.iter_mut().zip(y) {
            *xi = self.scale * ((1.0 + self.beta) * yi - shift);
        }
    }

    /// `||M M - Sigma||_F` by dense multiplication.
    pub fn residual(&self, sigma: &CovarianceMatrix) -> f64 {
        let k = self.k;
        let m = self.dense();
        let mut total = 0.0;
        for i in 0..k {
            for j in 0..k {
                let prod: f64 = (0..k).map(|l| m[i * k + l] * m[l * k + j]).sum();
                total += (prod - sigma.entry(i, j)).powi(2);
            }
        }
        total.sqrt()
    }
}

fn fill_normal<R: Rng + ?Sized>(rng: &mut R, buf: &mut [f64]) {
    buf.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
}

/// `k` vectors of length `n`; coordinate `j` across the vectors is `M y_j`.
pub fn sample_correlated<R: Rng + ?Sized>(m: &SqrtMatrix, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let (_, g) = sample_pair(m, n, rng);
    g
}

/// Independent draw `h` and its correlated image `g = M h`, coordinatewise.
pub fn sample_pair<R: Rng + ?Sized>(m: &SqrtMatrix, n: usize, rng: &mut R) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let k = m.k;
    let mut h = vec![vec![0.0; n]; k];
    let mut g = vec![vec![0.0; n]; k];
    let mut y = vec![0.0; k];
    let mut x = vec![0.0; k];
    for j in 0..n {
        fill_normal(rng, &mut y);
        m.apply(&y, &mut x);
        for i in 0..k {
            h[i][j] = y[i];
            g[i][j] = x[i];
        }
    }
    (h, g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleMode {
    Independent,
    Correlated(SqrtMatrix),
}

/// `k` Gaussian vectors in `R^n`, either independent or correlated through `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEnsemble {
    pub k: usize,
    pub n: usize,
    pub mode: EnsembleMode,
}

impl GaussianEnsemble {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        match &self.mode {
            EnsembleMode::Independent => (0..self.k)
                .map(|_| {
                    let mut v = vec![0.0; self.n];
                    fill_normal(rng, &mut v);
                    v
                })
                .collect(),
            EnsembleMode::Correlated(m) => sample_correlated(m, self.n, rng),
        }
    }
}

/// Sample second moments of `x = M y` and the cross moments `E[x_i y_i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCovariance {
    pub samples: u64,
    /// Row-major `E[x_i x_j]`.
    pub covariance: Vec<f64>,
    pub cross: Vec<f64>,
}

impl EmpiricalCovariance {
    pub fn max_deviation(&self, sigma: &CovarianceMatrix) -> f64 {
        let k = sigma.k;
        self.covariance.iter().enumerate().map(|(e, v)| (v - sigma.entry(e / k, e % k)).abs()).fold(0.0, f64::max)
    }
}

pub fn empirical_covariance(m: &SqrtMatrix, samples: u64, seed: u64) -> Result<EmpiricalCovariance> {
    if samples == 0 {
        return Err(Error::ZeroTrials);
    }
    let k = m.k;
    let parts = rng::batched(seed, samples, |rng, count| {
        let mut acc = vec![0.0; k * k + k];
        let mut y = vec![0.0; k];
        let mut x = vec![0.0; k];
        for _ in 0..count {
            fill_normal(rng, &mut y);
            m.apply(&y, &mut x);
            for i in 0..k {
                for j in 0..k {
                    acc[i * k + j] += x[i] * x[j];
                }
                acc[k * k + i] += x[i] * y[i];
            }
        }
        acc
    });
    let mut total = vec![0.0; k * k + k];
    for p in &parts {
        total.iter_mut().zip(p).for_each(|(t, v)| *t += v);
    }
    total.iter_mut().for_each(|t| *t /= samples as f64);
    let cross = total.split_off(k * k);
    Ok(EmpiricalCovariance { samples, covariance: total, cross })
}

/// Mean-pair statistics of `E[(P(x) - P(z))^2]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub estimate: f64,
    pub std_error: f64,
    /// 99% normal-approximation halfwidth.
    pub halfwidth: f64,
    pub trials: u64,
    pub degree: usize,
    pub delta: f64,
    /// `sum_T P(T)^2 2 (1 - (1-delta)^|T|)`.
    pub closed_form: f64,
    /// `2 delta d`.
    pub bound: f64,
}

impl PerturbationReport {
    /// `estimate - 3 sigma <= 2 delta d`.
    pub fn within_bound(&self) -> bool {
        self.estimate - 3.0 * self.std_error <= self.bound
    }

    /// Distance from the closed form in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.std_error == 0.0 {
            if (self.estimate - self.closed_form).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.estimate - self.closed_form).abs() / self.std_error
        }
    }
}

/// `E[(P(x) - P(z))^2]` for Gaussian `x` and `z = (1-delta) x + sqrt(1 - (1-delta)^2) w`.
pub fn perturbation_closed_form(p: &MultilinearPoly, delta: f64) -> f64 {
    p.coeffs().iter().enumerate().map(|(t, c)| c * c * 2.0 * (1.0 - (1.0 - delta).powi(t.count_ones() as i32))).sum()
}

fn check_unit_norm(p: &MultilinearPoly) -> Result<()> {
    let norm = p.l2_norm();
    if norm > 1.0 + NORM_SLACK {
        Err(Error::NormTooLarge(norm))
    } else {
        Ok(())
    }
}

pub fn perturbation_check(p: &MultilinearPoly, delta: f64, trials: u64, seed: u64) -> Result<PerturbationReport> {
    check_unit_norm(p)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::NoiseOutOfRange(delta));
    }
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let rho = 1.0 - delta;
    let mix = (1.0 - rho * rho).sqrt();
    let sparse = p.sparse();
    let n = p.n();
    let parts = rng::batched(seed, trials, |rng, count| {
        let mut x = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut acc = Moments::default();
        for _ in 0..count {
            fill_normal(rng, &mut x);
            for (zi, &xi) in z.iter_mut().zip(&x) {
                let w: f64 = rng.sample(StandardNormal);
                *zi = rho * xi + mix * w;
            }
            acc.push((sparse.eval(&x) - sparse.eval(&z)).powi(2));
        }
        acc
    });
    let m = Moments::combine(&parts);
    let degree = p.degree();
    Ok(PerturbationReport {
        estimate: m.mean,
        std_error: m.std_error(),
        halfwidth: Z99 * m.std_error(),
        trials,
        degree,
        delta,
        closed_form: perturbation_closed_form(p, delta),
        bound: 2.0 * delta * degree as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypercontractivityReport {
    pub q: u32,
    pub degree: usize,
    /// `||P||_q`
    pub lhs: f64,
    /// `(sqrt(q-1))^d ||P||_2`
    pub rhs: f64,
    /// Lower end of a 3-sigma interval on `lhs` under Monte Carlo, equal to `lhs` when exact.
    pub lhs_lower: f64,
    pub exact: bool,
}

impl HypercontractivityReport {
    pub fn holds(&self) -> bool {
        self.lhs_lower <= self.rhs * (1.0 + 1e-12)
    }
}

pub fn hypercontractivity_check(p: &MultilinearPoly, q: u32, measure: Measure) -> Result<HypercontractivityReport> {
    if q < 2 || q % 2 == 1 {
        return Err(Error::OddMoment(q));
    }
    let degree = p.degree();
    let rhs = ((q - 1) as f64).sqrt().powi(degree as i32) * p.l2_norm();
    let (lhs, lhs_lower, exact) = match measure {
        Measure::Uniform => {
            let v = p.norm(NormOrder::Finite(q), Measure::Uniform)?;
            (v, v, true)
        }
        Measure::Gaussian { samples, seed } => {
            let m = p.gaussian_moment(q, samples, seed)?;
            let root = |v: f64| v.max(0.0).powf(1.0 / q as f64);
            (root(m.mean), root(m.mean - 3.0 * m.std_error()), false)
        }
    };
    Ok(HypercontractivityReport { q, degree, lhs, rhs, lhs_lower, exact })
}

/// Paired estimate of `|E_G[prod_{i<t} P(g_i)] - E_H[prod_{i<t} P(h_i)]|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub k: usize,
    pub t: usize,
    pub delta: f64,
    pub degree: usize,
    pub trials: u64,
    pub gap: f64,
    pub gap_std_error: f64,
    pub independent_mean: f64,
    pub independent_std_error: f64,
    /// `P(empty)^t`, the exact independent expectation.
    pub independent_expected: f64,
    /// `delta (2k)^{2kD}`; infinite when it overflows.
    pub bound: f64,
    pub log2_bound: f64,
}

impl GapReport {
    pub fn within_bound(&self) -> bool {
        let lower = self.gap - 3.0 * self.gap_std_error;
        lower <= 0.0 || lower.log2() <= self.log2_bound
    }

    /// Independent product mean within 3 sigma of `P(empty)^t`.
    pub fn independent_matches(&self) -> bool {
        (self.independent_mean - self.independent_expected).abs() <= 3.0 * self.independent_std_error + 1e-12
    }
}

pub fn product_gap_check(
    p: &MultilinearPoly,
    k: usize,
    t: usize,
    delta: f64,
    trials: u64,
    seed: u64,
) -> Result<GapReport> {
    check_unit_norm(p)?;
    if t == 0 || t > k {
        return Err(Error::InvalidArgument(format!("t = {t} must lie in 1..={k}")));
    }
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let m = solve_beta(k, delta)?;
    let sparse = p.sparse();
    let n = p.n();
    let parts = rng::batched(seed, trials, |rng, count| {
        let mut diff = Moments::default();
        let mut indep = Moments::default();
        for _ in 0..count {
            let (h, g) = sample_pair(&m, n, rng);
            let ph: f64 = h[..t].iter().map(|v| sparse.eval(v)).product();
            let pg: f64 = g[..t].iter().map(|v| sparse.eval(v)).product();
            diff.push(pg - ph);
            indep.push(ph);
        }
        (diff, indep)
    });
    let diff = Moments::combine(parts.iter().map(|(d, _)| d));
    let indep = Moments::combine(parts.iter().map(|(_, i)| i));
    let degree = p.degree();
    let exponent = 2.0 * k as f64 * degree as f64;
    let log2_bound = delta.log2() + exponent * (2.0 * k as f64).log2();
    Ok(GapReport {
        k,
        t,
        delta,
        degree,
        trials,
        gap: diff.mean.abs(),
        gap_std_error: diff.std_error(),
        independent_mean: indep.mean,
        independent_std_error: indep.std_error(),
        independent_expected: p.coeff(0).powi(t as i32),
        bound: log2_bound.exp2(),
        log2_bound,
    })
}
