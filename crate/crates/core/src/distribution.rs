//! The test distribution on `P_k` and exact moment machinery for finite
//! distributions over k-bit strings.
//!
//! Masses are exact rationals everywhere. The only floating point values are
//! the correlation `rho` (a square root of an exact rational) and the 128-bit
//! fixed point thresholds used by the sampler.

use crate::error::{Error, Result};
use crate::predicate::{dimension_for, AtomLabel, Predicate};
use crate::rational::{integer, to_f64};
use crate::Rational;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use std::collections::{BTreeMap, VecDeque};
use std::ops::Deref;

/// How a bit is read as a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// The bit itself.
    ZeroOne,
    /// 0 as +1, 1 as -1.
    PlusMinus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub bits: u32,
    pub mass: Rational,
    pub label: Option<AtomLabel>,
}

/// A finite distribution on `{0,1}^k` given by its atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomDistribution {
    k: usize,
    atoms: Vec<Atom>,
}

fn sign(bits: u32, mask: u32) -> i64 {
    if (bits & mask).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

impl AtomDistribution {
    /// Validates that the masses are non-negative, distinct, fit in `k` bits
    /// and sum to exactly one.
    pub fn new(k: usize, atoms: Vec<(u32, Rational)>) -> Result<Self> {
        Self::labelled(k, atoms.into_iter().map(|(bits, mass)| Atom { bits, mass, label: None }).collect())
    }

    pub fn labelled(k: usize, atoms: Vec<Atom>) -> Result<Self> {
        if k == 0 || k > 31 {
            return Err(Error::InvalidDistribution(format!("k = {k} outside 1..=31")));
        }
        let mut seen = std::collections::HashSet::new();
        for a in &atoms {
            if a.bits >> k != 0 {
                return Err(Error::InvalidDistribution(format!("atom {:#x} wider than {k} bits", a.bits)));
            }
            if a.mass.is_negative() {
                return Err(Error::InvalidDistribution(format!("negative mass on {:#x}", a.bits)));
            }
            if !seen.insert(a.bits) {
                return Err(Error::InvalidDistribution(format!("duplicate atom {:#x}", a.bits)));
            }
        }
        let total: Rational = atoms.iter().map(|a| a.mass.clone()).sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        Ok(Self { k, atoms })
    }

    /// Equal mass on each listed string.
    pub fn uniform(k: usize, strings: &[u32]) -> Result<Self> {
        let mass = Rational::new(BigInt::one(), BigInt::from(strings.len()));
        Self::new(k, strings.iter().map(|&s| (s, mass.clone())).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> Rational {
        self.atoms.iter().map(|a| a.mass.clone()).sum()
    }

    /// Smallest positive atom.
    pub fn min_mass(&self) -> Rational {
        self.atoms.iter().filter(|a| a.mass.is_positive()).map(|a| a.mass.clone()).min().unwrap_or_else(Rational::zero)
    }

    fn check_coordinate(&self, i: usize) -> Result<()> {
        if i >= self.k {
            Err(Error::IndexOutOfRange { index: i, len: self.k })
        } else {
            Ok(())
        }
    }

    /// `(Pr[x_i = 0], Pr[x_i = 1])`.
    pub fn marginal(&self, i: usize) -> Result<(Rational, Rational)> {
        self.check_coordinate(i)?;
        let one: Rational = self.atoms.iter().filter(|a| (a.bits >> i) & 1 == 1).map(|a| a.mass.clone()).sum();
        Ok((Rational::one() - &one, one))
    }

    /// `E[prod_{i in mask} x_i]` in the +-1 encoding.
    pub fn atom_moment(&self, mask: u32) -> Rational {
        self.atoms.iter().map(|a| &a.mass * integer(sign(a.bits, mask))).sum()
    }

    fn mean(&self, i: usize, enc: Encoding) -> Rational {
        match enc {
            Encoding::PlusMinus => self.atom_moment(1 << i),
            Encoding::ZeroOne => self.atoms.iter().filter(|a| (a.bits >> i) & 1 == 1).map(|a| a.mass.clone()).sum(),
        }
    }

    /// `Cov[x_i, x_j]` for `i != j`.
    pub fn covariance(&self, i: usize, j: usize, enc: Encoding) -> Result<Rational> {
        self.check_coordinate(i)?;
        self.check_coordinate(j)?;
        if i == j {
            return Err(Error::SameCoordinate(i));
        }
        let joint: Rational = match enc {
            Encoding::PlusMinus => self.atom_moment((1 << i) | (1 << j)),
            Encoding::ZeroOne => {
                let both = (1u32 << i) | (1 << j);
                self.atoms.iter().filter(|a| a.bits & both == both).map(|a| a.mass.clone()).sum()
            }
        };
        Ok(joint - self.mean(i, enc) * self.mean(j, enc))
    }

    /// Coordinate `i` against the projection onto the other `k - 1` coordinates.
    pub fn split(&self, i: usize) -> Result<CoordinateSplit> {
        self.check_coordinate(i)?;
        let mut right: BTreeMap<u32, [Rational; 2]> = BTreeMap::new();
        for a in self.atoms.iter().filter(|a| a.mass.is_positive()) {
            let x = ((a.bits >> i) & 1) as usize;
            let low = a.bits & ((1 << i) - 1);
            let high = (a.bits >> (i + 1)) << i;
            let entry = right.entry(low | high).or_insert_with(|| [Rational::zero(), Rational::zero()]);
            entry[x] += &a.mass;
        }
        let (patterns, joint): (Vec<u32>, Vec<[Rational; 2]>) = right.into_iter().unzip();
        Ok(CoordinateSplit { coordinate: i, patterns, joint })
    }

    /// The bipartite support graph of [`split`](Self::split) is connected.
    pub fn connectivity_check(&self, i: usize) -> Result<bool> {
        Ok(self.split(i)?.is_connected())
    }

    /// Correlation between coordinate `i` and the rest.
    pub fn correlation_rho(&self, i: usize) -> Result<f64> {
        Ok(to_f64(&self.split(i)?.rho_squared()?).max(0.0).sqrt())
    }

    pub fn sampler(&self) -> AtomSampler {
        AtomSampler::new(self)
    }

    /// Draws `n` independent atoms and returns the `k` query points, each an
    /// `n`-bit table index whose bit `j` is coordinate `i` of the `j`-th atom.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u32> {
        let mut out = vec![0u32; self.k];
        self.sampler().sample_points(n, rng, &mut out);
        out
    }

    pub fn moment_report(&self) -> MomentReport {
        let k = self.k;
        let means = (0..k).map(|i| self.mean(i, Encoding::ZeroOne)).collect();
        let mut cov01 = Vec::new();
        let mut cov_pm = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                cov01.push((i, j, self.covariance(i, j, Encoding::ZeroOne).unwrap()));
                cov_pm.push((i, j, self.covariance(i, j, Encoding::PlusMinus).unwrap()));
            }
        }
        let rho = (0..k).map(|i| self.correlation_rho(i).ok()).collect();
        let connected = (0..k).map(|i| self.connectivity_check(i).unwrap()).collect();
        MomentReport { means, covariances_zero_one: cov01, covariances_plus_minus: cov_pm, rho, connected }
    }
}

/// Exact joint table of one coordinate against the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSplit {
    pub coordinate: usize,
    /// Distinct realized projections onto the other coordinates.
    pub patterns: Vec<u32>,
    /// `joint[y][x]` is the mass of `x_i = x` with projection `patterns[y]`.
    pub joint: Vec<[Rational; 2]>,
}

impl CoordinateSplit {
    pub fn left_marginal(&self) -> [Rational; 2] {
        let mut m = [Rational::zero(), Rational::zero()];
        for row in &self.joint {
            m[0] += &row[0];
            m[1] += &row[1];
        }
        m
    }

    pub fn right_marginal(&self) -> Vec<Rational> {
        self.joint.iter().map(|row| &row[0] + &row[1]).collect()
    }

    /// Smallest positive entry of the joint table.
    pub fn min_atom(&self) -> Rational {
        self.joint.iter().flatten().filter(|m| m.is_positive()).cloned().min().unwrap_or_else(Rational::zero)
    }

    /// BFS over left values `{0, 1}` and right patterns, edges where the joint is positive.
    pub fn is_connected(&self) -> bool {
        let right = self.patterns.len();
        let nodes = 2 + right;
        let mut seen = vec![false; nodes];
        let mut queue = VecDeque::new();
        let start = if self.joint.iter().any(|r| r[0].is_positive()) { 0 } else { 1 };
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let neighbours: Vec<usize> = if u < 2 {
                (0..right).filter(|&y| self.joint[y][u].is_positive()).map(|y| 2 + y).collect()
            } else {
                (0..2).filter(|&x| self.joint[u - 2][x].is_positive()).collect()
            };
            for v in neighbours {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        // A left value with no mass is not part of the space.
        let left = self.left_marginal();
        (0..2).all(|x| seen[x] || left[x].is_zero()) && seen[2..].iter().all(|&s| s)
    }

    /// Squared second singular value of `A[x,y] = mu(x,y)/sqrt(mu1(x) mu2(y))`.
    ///
    /// With two left values `A A^T` is 2x2 with top eigenvalue 1, so the
    /// answer is `trace(A A^T) - 1`, which is rational.
    pub fn rho_squared(&self) -> Result<Rational> {
        let left = self.left_marginal();
        if left.iter().any(|m| m.is_zero()) {
            return Err(Error::DegenerateMarginal(format!("coordinate {} is constant", self.coordinate)));
        }
        let right = self.right_marginal();
        let trace: Rational = self
            .joint
            .iter()
            .zip(&right)
            .flat_map(|(row, r)| row.iter().zip(&left).map(move |(m, l)| m * m / (l * r)))
            .sum();
        Ok(trace - Rational::one())
    }
}

/// Exact moments of an [`AtomDistribution`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    /// `Pr[x_i = 1]`.
    pub means: Vec<Rational>,
    pub covariances_zero_one: Vec<(usize, usize, Rational)>,
    pub covariances_plus_minus: Vec<(usize, usize, Rational)>,
    /// `None` where the coordinate is constant.
    pub rho: Vec<Option<f64>>,
    pub connected: Vec<bool>,
}

/// Inverse-CDF sampler over 128-bit fixed point thresholds.
#[derive(Debug, Clone)]
pub struct AtomSampler {
    // cumulative mass of atoms 0..=j scaled by 2^128, for all but the last atom
    thresholds: Vec<u128>,
    bits: Vec<u32>,
    k: usize,
}

impl AtomSampler {
    fn new(dist: &AtomDistribution) -> Self {
        let live: Vec<&Atom> = dist.atoms.iter().filter(|a| a.mass.is_positive()).collect();
        let scale = BigInt::one() << 128usize;
        let mut cumulative = Rational::zero();
        let mut thresholds = Vec::with_capacity(live.len().saturating_sub(1));
        for a in &live[..live.len() - 1] {
            cumulative += &a.mass;
            let t = (&cumulative * Rational::from_integer(scale.clone())).floor().to_integer();
            thresholds.push(t.to_u128().unwrap_or(u128::MAX));
        }
        Self { thresholds, bits: live.iter().map(|a| a.bits).collect(), k: dist.k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Bits of one drawn atom.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: u128 = rng.random();
        self.bits[self.thresholds.partition_point(|&t| t <= u)]
    }

    /// Fills `points` (length `k`) with `n` coordinates of fresh atoms.
    #[inline]
    pub fn sample_points<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, points: &mut [u32]) {
        points.iter_mut().for_each(|p| *p = 0);
        for j in 0..n {
            let mut b = self.draw(rng);
            while b != 0 {
                points[b.trailing_zeros() as usize] |= 1 << j;
                b &= b - 1;
            }
        }
    }
}

/// The almost pairwise independent distribution on `P_k`:
/// `0^k` gets `(1/(k+1) - alpha)/(1-alpha)`, each `h_a` gets
/// `(1/(k+1) - eps)/(1-alpha)` and each `e_i` gets `eps/(1-alpha)`, where
/// `alpha = (k-1) eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestDistribution {
    m: u32,
    epsilon: Rational,
    alpha: Rational,
    table: AtomDistribution,
}

impl TestDistribution {
    pub fn build(k: usize, epsilon: &Rational) -> Result<Self> {
        let m = dimension_for(k)?;
        let max = Rational::new(BigInt::one(), BigInt::from(k * k));
        if !epsilon.is_positive() || *epsilon > max {
            return Err(Error::EpsilonOutOfRange { eps: epsilon.to_string(), k });
        }
        let predicate = Predicate::build(m)?;
        let alpha = epsilon * integer(k as i64 - 1);
        let scale = (Rational::one() - &alpha).recip();
        let slot = Rational::new(BigInt::one(), BigInt::from(k + 1));
        let atoms = predicate
            .strings()
            .iter()
            .map(|&(bits, label)| {
                let mass = match label {
                    AtomLabel::Zero => (&slot - &alpha) * &scale,
                    AtomLabel::Hadamard(_) => (&slot - epsilon) * &scale,
                    AtomLabel::Unit(_) => epsilon * &scale,
                };
                Atom { bits, mass, label: Some(label) }
            })
            .collect();
        let table = AtomDistribution::labelled(k, atoms)?;
        Ok(Self { m, epsilon: epsilon.clone(), alpha, table })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn epsilon(&self) -> &Rational {
        &self.epsilon
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    /// `eps / (1 - (k-1) eps)`, the mass of each `e_i`.
    pub fn beta(&self) -> Rational {
        &self.epsilon / (Rational::one() - &self.alpha)
    }

    /// `-eps / (2 (1 - alpha))`, the pairwise covariance in the 0/1 encoding.
    pub fn pairwise_covariance(&self) -> Rational {
        -&self.epsilon / (integer(2) * (Rational::one() - &self.alpha))
    }

    /// `1 - eps^2 / (2 (1 - alpha)^2)`.
    pub fn rho_bound(&self) -> f64 {
        let b = self.beta();
        to_f64(&(Rational::one() - &b * &b / integer(2)))
    }

    /// Off-diagonal entry of the +-1 covariance matrix: `2 eps / (1 - alpha)`.
    pub fn gaussian_delta(&self) -> Rational {
        integer(2) * self.beta()
    }

    pub fn table(&self) -> &AtomDistribution {
        &self.table
    }

    /// Uniform distribution on `H_k + {0^k}`.
    pub fn uniform_code(k: usize) -> Result<AtomDistribution> {
        let p = Predicate::for_k(k)?;
        let code: Vec<u32> =
            p.strings().iter().filter(|(_, l)| !matches!(l, AtomLabel::Unit(_))).map(|&(s, _)| s).collect();
        AtomDistribution::uniform(k, &code)
    }
}

impl Deref for TestDistribution {
    type Target = AtomDistribution;
    fn deref(&self) -> &AtomDistribution {
        &self.table
    }
}
