use super::{check_arity, fourier::inverse_wht};
use crate::error::{Error, Result};
use crate::rng::{self, Moments};
use rand::Rng;
use rand_distr::StandardNormal;
use std::ops::{Add, Sub};

/// Multilinear polynomial `sum_T coeffs[T] prod_{i in T} z_i` over `n`
/// variables, coefficients indexed by subset mask.
///
/// The Fourier expansion of a Boolean function is the same object, so both
/// names refer to this type.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearPoly {
    n: usize,
    coeffs: Vec<f64>,
}

pub type FourierExpansion = MultilinearPoly;

/// Which `p`-norm to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormOrder {
    Finite(u32),
    Infinity,
}

/// Input distribution for norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    /// Uniform on `{-1,+1}^n`, computed by exhaustive enumeration.
    Uniform,
    /// Standard Gaussian inputs, estimated from `samples` draws.
    Gaussian { samples: u64, seed: u64 },
}

fn subset_len(mask: usize) -> usize {
    mask.count_ones() as usize
}

impl MultilinearPoly {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_arity(n)?;
        if coeffs.len() != 1 << n {
            return Err(Error::LengthMismatch { expected: 1 << n, got: coeffs.len() });
        }
        Ok(Self { n, coeffs })
    }

    pub fn zero(n: usize) -> Result<Self> {
        check_arity(n)?;
        Ok(Self { n, coeffs: vec![0.0; 1 << n] })
    }

    pub fn from_terms(n: usize, terms: &[(usize, f64)]) -> Result<Self> {
        let mut p = Self::zero(n)?;
        for &(mask, c) in terms {
            if mask >> n != 0 {
                return Err(Error::IndexOutOfRange { index: mask, len: 1 << n });
            }
            p.coeffs[mask] += c;
        }
        Ok(p)
    }

    /// Random polynomial with i.i.d. Gaussian coefficients on every `|T| <= degree`,
    /// scaled to unit 2-norm.
    pub fn random_unit<R: Rng + ?Sized>(n: usize, degree: usize, rng: &mut R) -> Result<Self> {
        let mut p = Self::zero(n)?;
        for (mask, c) in p.coeffs.iter_mut().enumerate() {
            if subset_len(mask) <= degree {
                *c = rng.sample(StandardNormal);
            }
        }
        let norm = p.l2_norm();
        p.coeffs.iter_mut().for_each(|c| *c /= norm);
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> f64 {
        self.coeffs[mask]
    }

    /// Largest `|T|` with a nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(m, _)| subset_len(m)).max().unwrap_or(0)
    }

    fn check_coordinate(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::IndexOutOfRange { index: i, len: self.n })
        } else {
            Ok(())
        }
    }

    /// `sum_{T containing i} c_T^2`.
    pub fn influence(&self, i: usize) -> Result<f64> {
        self.degree_influence(i, self.n)
    }

    /// `sum_{T containing i, |T| <= d} c_T^2`.
    pub fn degree_influence(&self, i: usize, d: usize) -> Result<f64> {
        self.check_coordinate(i)?;
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(m, _)| (m >> i) & 1 == 1 && subset_len(*m) <= d)
            .map(|(_, c)| c * c)
            .sum())
    }

    pub fn max_degree_influence(&self, d: usize) -> f64 {
        (0..self.n).map(|i| self.degree_influence(i, d).unwrap()).fold(0.0, f64::max)
    }

    /// Every degree-`d` influence is at most `tau`.
    pub fn is_quasirandom(&self, d: usize, tau: f64) -> bool {
        self.max_degree_influence(d) <= tau
    }

    /// `sum_T |T| c_T^2`, the total influence.
    pub fn total_influence(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(m, c)| subset_len(m) as f64 * c * c).sum()
    }

    /// Noise operator: scales `c_T` by `(1 - gamma)^|T|`.
    pub fn noise(&self, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::NoiseOutOfRange(gamma));
        }
        let rho = 1.0 - gamma;
        let powers: Vec<f64> = (0..=self.n).map(|j| rho.powi(j as i32)).collect();
        let coeffs = self.coeffs.iter().enumerate().map(|(m, &c)| c * powers[subset_len(m)]).collect();
        Ok(Self { n: self.n, coeffs })
    }

    fn filter_degree(&self, keep: impl Fn(usize) -> bool) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(m, &c)| if keep(subset_len(m)) { c } else { 0.0 }).collect();
        Self { n: self.n, coeffs }
    }

    /// Terms with `|T| <= degree`.
    pub fn truncate(&self, degree: usize) -> Self {
        self.filter_degree(|s| s <= degree)
    }

    /// Terms with `|T| > degree`.
    pub fn high_part(&self, degree: usize) -> Self {
        self.filter_degree(|s| s > degree)
    }

    /// Coefficient mass `sum c_T^2` over `lo < |T| < hi`.
    pub fn band_mass(&self, lo: f64, hi: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(m, _)| {
                let s = subset_len(*m) as f64;
                lo < s && s < hi
            })
            .map(|(_, c)| c * c)
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Variance under uniform (or Gaussian) inputs: all mass except `T = {}`.
    pub fn variance(&self) -> f64 {
        self.coeffs.iter().skip(1).map(|c| c * c).sum()
    }

    /// All even-size coefficients vanish, as for a folded function.
    pub fn is_odd(&self) -> bool {
        self.coeffs.iter().enumerate().all(|(m, &c)| subset_len(m) % 2 == 1 || c == 0.0)
    }

    /// Values on the hypercube, indexed like a Boolean function's table.
    pub fn hypercube_values(&self) -> Vec<f64> {
        inverse_wht(self)
    }

    /// Evaluates at an arbitrary real point.
    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: z.len() });
        }
        let mut scratch = Vec::new();
        Ok(self.eval_with(z, &mut scratch))
    }

    /// Evaluates by folding one coordinate at a time, `O(2^n)`.
    pub(crate) fn eval_with(&self, z: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend_from_slice(&self.coeffs);
        for i in (0..self.n).rev() {
            let half = 1 << i;
            let (lo, hi) = scratch[..2 * half].split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a += z[i] * b;
            }
        }
        scratch[0]
    }

    /// Nonzero terms, for fast repeated evaluation of sparse polynomials.
    pub(crate) fn sparse(&self) -> SparsePoly {
        let terms: Vec<(usize, f64)> =
            self.coeffs.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(m, &c)| (m, c)).collect();
        SparsePoly { n: self.n, terms }
    }

    /// `||P||_p` under the given measure.
    pub fn norm(&self, p: NormOrder, measure: Measure) -> Result<f64> {
        match (p, measure) {
            (NormOrder::Finite(q), _) if q == 0 || q % 2 == 1 => {
                Err(Error::UnsupportedNorm(format!("p = {q} (only even p)")))
            }
            (NormOrder::Infinity, Measure::Uniform) => {
                Ok(self.hypercube_values().iter().fold(0.0, |m, v| m.max(v.abs())))
            }
            (NormOrder::Infinity, Measure::Gaussian { .. }) => {
                Err(Error::UnsupportedNorm("infinity norm under Gaussian measure".into()))
            }
            (NormOrder::Finite(q), Measure::Uniform) => {
                let values = self.hypercube_values();
                let mean = values.iter().map(|v| v.powi(q as i32)).sum::<f64>() / values.len() as f64;
                Ok(mean.powf(1.0 / q as f64))
            }
            (NormOrder::Finite(q), Measure::Gaussian { samples, seed }) => {
                Ok(self.gaussian_moment(q, samples, seed)?.mean.powf(1.0 / q as f64))
            }
        }
    }

    /// Monte Carlo estimate of `E[P(g)^q]` for standard Gaussian `g`.
    pub fn gaussian_moment(&self, q: u32, samples: u64, seed: u64) -> Result<Moments> {
        if samples == 0 {
            return Err(Error::ZeroTrials);
        }
        let sparse = self.sparse();
        let parts = rng::batched(seed, samples, |rng, count| {
            let mut z = vec![0.0; self.n];
            let mut acc = Moments::default();
            for _ in 0..count {
                z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                acc.push(sparse.eval(&z).powi(q as i32));
            }
            acc
        });
        Ok(Moments::combine(&parts))
    }
}

impl Add for &MultilinearPoly {
    type Output = MultilinearPoly;
    fn add(self, rhs: &MultilinearPoly) -> MultilinearPoly {
        assert_eq!(self.n, rhs.n, "arity mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        MultilinearPoly { n: self.n, coeffs }
    }
}

impl Sub for &MultilinearPoly {
    type Output = MultilinearPoly;
    fn sub(self, rhs: &MultilinearPoly) -> MultilinearPoly {
        assert_eq!(self.n, rhs.n, "arity mismatch");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        MultilinearPoly { n: self.n, coeffs }
    }
}

/// Term list with an evaluation strategy picked by density.
#[derive(Debug, Clone)]
pub(crate) struct SparsePoly {
    n: usize,
    terms: Vec<(usize, f64)>,
}

impl SparsePoly {
    pub(crate) fn eval(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.n);
        self.terms
            .iter()
            .map(|&(mask, c)| {
                let mut prod = c;
                let mut m = mask;
                while m != 0 {
                    prod *= z[m.trailing_zeros() as usize];
                    m &= m - 1;
                }
                prod
            })
            .sum()
    }
}
