//! Streaming enumeration of `support^n` for exact expectations over `D^{(x)n}`.
//!
//! Each coordinate of the input space independently draws one atom, which
//! fixes that coordinate in all `k` query points. The walk keeps the `k`
//! points as bitmasks and updates them incrementally, so memory stays `O(k n)`.

use crate::distribution::AtomDistribution;
use crate::error::{Error, Result};
use crate::rational::to_f64;
use crate::Rational;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use std::ops::{Add, Mul};

/// Largest `support^n` enumerated by default.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// Positive-mass atoms of a distribution with integer weights over a common
/// denominator.
#[derive(Debug, Clone)]
pub(crate) struct Support {
    pub k: usize,
    pub bits: Vec<u32>,
    pub numerators: Vec<BigInt>,
    pub denominator: BigInt,
    pub masses: Vec<f64>,
}

impl Support {
    pub fn new(dist: &AtomDistribution) -> Self {
        let live: Vec<_> = dist.atoms().iter().filter(|a| !a.mass.is_zero()).collect();
        let denominator = live.iter().fold(BigInt::one(), |l, a| l.lcm(a.mass.denom()));
        let numerators = live.iter().map(|a| a.mass.numer() * (&denominator / a.mass.denom())).collect();
        Self {
            k: dist.k(),
            bits: live.iter().map(|a| a.bits).collect(),
            numerators,
            denominator,
            masses: live.iter().map(|a| to_f64(&a.mass)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn check_budget(&self, n: usize, budget: u128) -> Result<()> {
        let size = (self.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if size > budget {
            return Err(Error::BudgetExceeded { size, budget });
        }
        Ok(())
    }
}

fn toggle(points: &mut [usize], bits: u32, coordinate: usize) {
    let mut b = bits;
    while b != 0 {
        points[b.trailing_zeros() as usize] ^= 1 << coordinate;
        b &= b - 1;
    }
}

fn walk<W, F>(bits: &[u32], weights: &[W], n: usize, depth: usize, points: &mut [usize], leaf: &F) -> W
where
    W: Clone + Zero + Add<Output = W> + Mul<Output = W>,
    F: Fn(&[usize]) -> W,
{
    if depth == n {
        return leaf(points);
    }
    let mut total = W::zero();
    for (&b, w) in bits.iter().zip(weights) {
        toggle(points, b, depth);
        total = total + w.clone() * walk(bits, weights, n, depth + 1, points, leaf);
        toggle(points, b, depth);
    }
    total
}

/// `sum_{a in support^n} prod_j w(a_j) leaf(points(a))`, parallel over the
/// atom at coordinate 0 and summed in atom order.
pub(crate) fn enumerate<W, F>(bits: &[u32], weights: &[W], k: usize, n: usize, leaf: F) -> W
where
    W: Clone + Send + Sync + Zero + Add<Output = W> + Mul<Output = W>,
    F: Fn(&[usize]) -> W + Sync,
{
    assert!(n >= 1, "enumeration needs at least one coordinate");
    let parts: Vec<W> = bits
        .par_iter()
        .zip(weights.par_iter())
        .map(|(&b, w)| {
            let mut points = vec![0usize; k];
            toggle(&mut points, b, 0);
            w.clone() * walk(bits, weights, n, 1, &mut points, &leaf)
        })
        .collect();
    parts.into_iter().fold(W::zero(), |a, b| a + b)
}

/// Exact `E[leaf]` for an integer-valued leaf with `|leaf| <= 1`.
///
/// Uses `i128` when `denominator^n` leaves headroom, big integers otherwise.
pub(crate) fn exact_expectation<F>(support: &Support, n: usize, budget: u128, leaf: F) -> Result<Rational>
where
    F: Fn(&[usize]) -> i64 + Sync,
{
    support.check_budget(n, budget)?;
    let scale = support.denominator.pow(n as u32);
    let total = if scale.bits() < 120 {
        let weights: Vec<i128> = support.numerators.iter().map(|w| w.to_i128().expect("fits")).collect();
        BigInt::from(enumerate(&support.bits, &weights, support.k, n, |p| leaf(p) as i128))
    } else {
        enumerate(&support.bits, &support.numerators, support.k, n, |p| BigInt::from(leaf(p)))
    };
    Ok(Rational::new(total, scale))
}

/// Floating point `E[leaf]` for real-valued leaves.
pub(crate) fn float_expectation<F>(support: &Support, n: usize, budget: u128, leaf: F) -> Result<f64>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    support.check_budget(n, budget)?;
    Ok(enumerate(&support.bits, &support.masses, support.k, n, leaf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::TestDistribution;
    use crate::rational::ratio;

    #[test]
    fn total_mass_is_one() {
        let d = TestDistribution::build(7, &ratio(1, 49)).unwrap();
        let s = Support::new(&d);
        assert_eq!(s.denominator, BigInt::from(344));
        for n in 1..=3 {
            assert_eq!(exact_expectation(&s, n, DEFAULT_BUDGET, |_| 1).unwrap(), Rational::one());
            assert!((float_expectation(&s, n, DEFAULT_BUDGET, |_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coordinate_moments_match_atoms() {
        let d = TestDistribution::build(7, &ratio(1, 49)).unwrap();
        let s = Support::new(&d);
        // E[x_0 x_1] at coordinate 1 of n = 2 equals the atom moment
        let got = exact_expectation(&s, 2, DEFAULT_BUDGET, |p| {
            let a = if p[0] & 2 == 0 { 1 } else { -1 };
            let b = if p[1] & 2 == 0 { 1 } else { -1 };
            a * b
        })
        .unwrap();
        assert_eq!(got, d.atom_moment(0b11));
    }

    #[test]
    fn big_integer_path() {
        let d = TestDistribution::build(7, &ratio(1, 49)).unwrap();
        let mut s = Support::new(&d);
        // same distribution written over a much larger denominator
        let factor = BigInt::one() << 40usize;
        s.numerators.iter_mut().for_each(|w| *w *= &factor);
        s.denominator *= &factor;
        let got = exact_expectation(&s, 3, DEFAULT_BUDGET, |p| if p[2] & 1 == 0 { 1 } else { 0 }).unwrap();
        assert_eq!(got, ratio(1, 2));
    }

    #[test]
    fn budget_is_enforced() {
        let d = TestDistribution::build(7, &ratio(1, 49)).unwrap();
        let s = Support::new(&d);
        assert!(matches!(exact_expectation(&s, 7, DEFAULT_BUDGET, |_| 1), Err(Error::BudgetExceeded { .. })));
    }
}
