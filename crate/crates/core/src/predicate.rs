//! The Hadamard predicate `H_k` and the accepting set `P_k = H_k + {e_i} + 0^k`.
//!
//! `k = 2^m - 1`. Coordinate `i` (0-based) of a predicate string is indexed by
//! the nonzero vector `w_{i+1}`, taken to be the binary expansion of `i + 1`.
//! A k-bit string is a `u32` whose bit `i` is coordinate `i`.

use crate::error::{Error, Result};
use crate::Rational;
use num_bigint::BigInt;
use serde::Serialize;
use std::fmt;

/// Largest `k` for which the Fourier table of the predicate is built.
pub const MAX_FOURIER_K: usize = 20;
const MAX_BITSET_K: usize = 24;
const MAX_M: u32 = 5;

/// Element of `F_2^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gf2Vector {
    m: u32,
    bits: u32,
}

impl Gf2Vector {
    pub fn new(m: u32, bits: u32) -> Self {
        assert!(m < 32 && bits >> m == 0, "{bits:#b} does not fit in {m} bits");
        Self { m, bits }
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn dot(self, other: Gf2Vector) -> u32 {
        debug_assert_eq!(self.m, other.m);
        (self.bits & other.bits).count_ones() & 1
    }
}

impl std::ops::Add for Gf2Vector {
    type Output = Gf2Vector;
    fn add(self, rhs: Gf2Vector) -> Gf2Vector {
        debug_assert_eq!(self.m, rhs.m);
        Gf2Vector { m: self.m, bits: self.bits ^ rhs.bits }
    }
}

/// Where an accepted string comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomLabel {
    /// `0^k`
    Zero,
    /// `h_a` for the nonzero `a` with this bit pattern.
    Hadamard(u32),
    /// `e_i`, 0-based.
    Unit(usize),
}

impl fmt::Display for AtomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomLabel::Zero => write!(f, "zero"),
            AtomLabel::Hadamard(a) => write!(f, "h{a}"),
            AtomLabel::Unit(i) => write!(f, "e{}", i + 1),
        }
    }
}

fn check_dimension(m: u32) -> Result<()> {
    if m <= 2 {
        Err(Error::DimensionTooSmall(m))
    } else if m > MAX_M {
        Err(Error::InvalidArgument(format!("m = {m} exceeds supported maximum {MAX_M}")))
    } else {
        Ok(())
    }
}

/// Recovers `m` from `k = 2^m - 1`.
pub fn dimension_for(k: usize) -> Result<u32> {
    let m = (k + 1).trailing_zeros();
    if k < 7 || (k + 1) != 1 << m || m > MAX_M {
        return Err(Error::NotHadamardLength(k));
    }
    Ok(m)
}

/// The Hadamard codeword for nonzero `a`: bit `i` is `a . w_{i+1}`.
pub fn hadamard_codeword(m: u32, a: u32) -> u32 {
    let k = (1u32 << m) - 1;
    let a = Gf2Vector::new(m, a);
    (0..k).fold(0, |acc, i| acc | (a.dot(Gf2Vector::new(m, i + 1)) << i))
}

/// `H_k`: `k` strings, entry `a - 1` holding `h_a`.
pub fn build_hadamard(m: u32) -> Result<Vec<u32>> {
    check_dimension(m)?;
    Ok((1..1u32 << m).map(|a| hadamard_codeword(m, a)).collect())
}

#[derive(Debug, Clone)]
enum Membership {
    Bitset(Vec<u64>),
    Sorted(Vec<u32>),
}

/// Accepting set of `P_k` with constant-time membership.
#[derive(Debug, Clone)]
pub struct Predicate {
    m: u32,
    k: usize,
    strings: Vec<(u32, AtomLabel)>,
    membership: Membership,
}

impl Predicate {
    /// `P_k` for `k = 2^m - 1`.
    pub fn build(m: u32) -> Result<Self> {
        let hadamard = build_hadamard(m)?;
        let k = hadamard.len();
        let mut strings = vec![(0u32, AtomLabel::Zero)];
        strings.extend(hadamard.iter().enumerate().map(|(a, &h)| (h, AtomLabel::Hadamard(a as u32 + 1))));
        strings.extend((0..k).map(|i| (1u32 << i, AtomLabel::Unit(i))));
        Ok(Self::from_strings(m, k, strings))
    }

    pub fn for_k(k: usize) -> Result<Self> {
        Self::build(dimension_for(k)?)
    }

    fn from_strings(m: u32, k: usize, strings: Vec<(u32, AtomLabel)>) -> Self {
        let membership = if k <= MAX_BITSET_K {
            let mut bits = vec![0u64; (1usize << k).div_ceil(64)];
            for &(s, _) in &strings {
                bits[s as usize / 64] |= 1 << (s % 64);
            }
            Membership::Bitset(bits)
        } else {
            let mut sorted: Vec<u32> = strings.iter().map(|&(s, _)| s).collect();
            sorted.sort_unstable();
            sorted.dedup();
            Membership::Sorted(sorted)
        };
        Self { m, k, strings, membership }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Accepted strings with their labels: `0^k`, then `h_1..h_k`, then `e_1..e_k`.
    pub fn strings(&self) -> &[(u32, AtomLabel)] {
        &self.strings
    }

    pub fn accepting_count(&self) -> usize {
        match &self.membership {
            Membership::Bitset(bits) => bits.iter().map(|w| w.count_ones() as usize).sum(),
            Membership::Sorted(v) => v.len(),
        }
    }

    /// Membership without the width check, for inner loops.
    #[inline]
    pub fn contains(&self, z: u32) -> bool {
        match &self.membership {
            Membership::Bitset(bits) => (bits[z as usize / 64] >> (z % 64)) & 1 == 1,
            Membership::Sorted(v) => v.binary_search(&z).is_ok(),
        }
    }

    pub fn membership(&self, z: u32) -> Result<bool> {
        if self.k < 32 && z >> self.k != 0 {
            return Err(Error::LengthMismatch { expected: self.k, got: 32 - z.leading_zeros() as usize });
        }
        Ok(self.contains(z))
    }

    /// Exact Fourier coefficients of the 0/1 indicator on `{-1,+1}^k`.
    pub fn fourier(&self) -> Result<PredicateFourier> {
        if self.k > MAX_FOURIER_K {
            return Err(Error::PredicateTooLarge { k: self.k, max: MAX_FOURIER_K });
        }
        let mut table: Vec<i64> = (0..1u32 << self.k).map(|z| self.contains(z) as i64).collect();
        crate::boolfn::wht_in_place(&mut table);
        Ok(PredicateFourier { k: self.k, numerators: table })
    }

    /// `E[prod_{i in S} (-1)^{z_i}]` for `z` uniform on `H_k + {0^k}`.
    pub fn code_moment(&self, subset: u32) -> Rational {
        let code: Vec<u32> = self
            .strings
            .iter()
            .filter(|(_, l)| matches!(l, AtomLabel::Zero | AtomLabel::Hadamard(_)))
            .map(|&(s, _)| s)
            .collect();
        let total: i64 = code.iter().map(|&z| if (z & subset).count_ones().is_multiple_of(2) { 1 } else { -1 }).sum();
        Rational::new(BigInt::from(total), BigInt::from(code.len()))
    }
}

/// `P_k(S) = 2^-k sum_z P(z) chi_S(z)` as integers over the common denominator `2^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateFourier {
    k: usize,
    numerators: Vec<i64>,
}

impl PredicateFourier {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn numerators(&self) -> &[i64] {
        &self.numerators
    }

    pub fn denominator(&self) -> i64 {
        1 << self.k
    }

    pub fn coefficient(&self, subset: u32) -> Rational {
        Rational::new(BigInt::from(self.numerators[subset as usize]), BigInt::from(self.denominator()))
    }

    pub fn sum_of_squares(&self) -> Rational {
        let total: i128 = self.numerators.iter().map(|&c| (c as i128) * (c as i128)).sum();
        Rational::new(BigInt::from(total), BigInt::from(1i128 << (2 * self.k)))
    }

    pub fn max_abs(&self) -> Rational {
        let m = self.numerators.iter().map(|c| c.abs()).max().unwrap_or(0);
        Rational::new(BigInt::from(m), BigInt::from(self.denominator()))
    }
}

/// Labels for reports.
#[derive(Debug, Clone, Serialize)]
pub struct PredicateDump {
    pub k: usize,
    pub m: u32,
    pub strings: Vec<String>,
    pub labels: Vec<String>,
}

impl From<&Predicate> for PredicateDump {
    fn from(p: &Predicate) -> Self {
        let width = p.k.div_ceil(4);
        Self {
            k: p.k,
            m: p.m,
            strings: p.strings.iter().map(|(s, _)| format!("{s:0width$x}")).collect(),
            labels: p.strings.iter().map(|(_, l)| l.to_string()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn hadamard_m3_weights() {
        let h = build_hadamard(3).unwrap();
        assert_eq!(h.len(), 7);
        assert!(h.iter().all(|s| s.count_ones() == 4));
        let mut sorted = h.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 7);
        assert!(build_hadamard(2).is_err());
    }

    #[test]
    fn hadamard_is_closed_under_xor() {
        for m in 3..=5 {
            let h = build_hadamard(m).unwrap();
            let k = h.len() as u32;
            for &a in &h {
                assert_eq!(a.count_ones(), k.div_ceil(2));
                for &b in &h {
                    if a != b {
                        assert!(h.contains(&(a ^ b)), "m = {m}");
                    }
                }
            }
        }
    }

    #[test]
    fn codeword_bits_are_dot_products() {
        let m = 4;
        for a in 1..16u32 {
            let h = hadamard_codeword(m, a);
            for i in 0..15u32 {
                assert_eq!((h >> i) & 1, (a & (i + 1)).count_ones() % 2);
            }
            assert_ne!(h, 0);
        }
    }

    #[test]
    fn p7_membership() {
        let p = Predicate::build(3).unwrap();
        assert_eq!(p.k(), 7);
        assert_eq!(p.accepting_count(), 15);
        assert!(p.membership(0).unwrap());
        assert!(p.membership(1).unwrap());
        assert!(!p.membership(0b11).unwrap());
        assert!(p.membership(1 << 7).is_err());
        // weight-1 strings are never codewords
        for i in 0..7 {
            assert!(!build_hadamard(3).unwrap().contains(&(1 << i)));
        }
    }

    #[test]
    fn sizes_for_every_m() {
        for m in 3..=5 {
            let p = Predicate::build(m).unwrap();
            assert_eq!(p.accepting_count(), 2 * p.k() + 1);
        }
        assert_eq!(dimension_for(15).unwrap(), 4);
        assert!(dimension_for(8).is_err());
        assert!(dimension_for(3).is_err());
    }

    #[test]
    fn fourier_of_p7() {
        let p = Predicate::build(3).unwrap();
        let f = p.fourier().unwrap();
        assert_eq!(f.coefficient(0), ratio(15, 128));
        assert_eq!(f.sum_of_squares(), ratio(15, 128));
        assert!(f.max_abs() <= ratio(1, 1));
        // brute force a few coefficients
        for s in [1u32, 3, 7, 0x55, 0x7f] {
            let direct: i64 = (0..128u32)
                .filter(|&z| p.contains(z))
                .map(|z| if (z & s).count_ones() % 2 == 0 { 1 } else { -1 })
                .sum();
            assert_eq!(f.numerators()[s as usize], direct);
        }
        assert!(Predicate::build(5).unwrap().fourier().is_err());
    }

    #[test]
    fn code_is_pairwise_independent() {
        for m in 3..=4 {
            let p = Predicate::build(m).unwrap();
            let k = p.k() as u32;
            for i in 0..k {
                assert_eq!(p.code_moment(1 << i), ratio(0, 1));
                for j in i + 1..k {
                    assert_eq!(p.code_moment((1 << i) | (1 << j)), ratio(0, 1));
                }
            }
        }
    }

    #[test]
    fn dump_layout() {
        let d = PredicateDump::from(&Predicate::build(3).unwrap());
        assert_eq!(d.strings.len(), 15);
        assert_eq!(d.labels[0], "zero");
        assert_eq!(d.labels[1], "h1");
        assert_eq!(d.labels[8], "e1");
        assert_eq!(d.strings[8], "01");
    }
}
