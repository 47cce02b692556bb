use super::{check_arity, BooleanFunction, FourierExpansion};
use crate::error::Result;
use crate::Rational;
use num_bigint::BigInt;
use rayon::prelude::*;
use std::ops::{Add, Sub};

const PAR_THRESHOLD: usize = 1 << 14;

/// Unnormalized in-place Walsh-Hadamard butterfly over a power-of-two table.
///
/// Stages run in a fixed order and each output depends on exactly the same
/// two inputs regardless of how the chunks are scheduled, so the parallel
/// path is bit-identical to the serial one.
pub fn wht_in_place<T>(buf: &mut [T])
where
    T: Copy + Send + Sync + Add<Output = T> + Sub<Output = T>,
{
    let len = buf.len();
    assert!(len.is_power_of_two(), "table length {len} is not a power of two");
    let mut h = 1;
    while h < len {
        let stage = |chunk: &mut [T]| {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        };
        if len >= PAR_THRESHOLD {
            buf.par_chunks_mut(2 * h).for_each(stage);
        } else {
            buf.chunks_mut(2 * h).for_each(stage);
        }
        h *= 2;
    }
}

/// Fourier coefficients in floating point.
///
/// For a `{-1,+1}` table every intermediate is an integer below `2^n` and the
/// final scaling is by a power of two, so the result is exact.
pub fn wht(f: &BooleanFunction) -> FourierExpansion {
    let mut buf: Vec<f64> = f.values().iter().map(|&v| v as f64).collect();
    wht_in_place(&mut buf);
    let scale = (-(f.n() as i32) as f64).exp2();
    buf.iter_mut().for_each(|c| *c *= scale);
    FourierExpansion::new(f.n(), buf).expect("table length matches arity")
}

/// Coefficient table to pointwise values.
pub fn inverse_wht(expansion: &FourierExpansion) -> Vec<f64> {
    let mut buf = expansion.coeffs().to_vec();
    wht_in_place(&mut buf);
    buf
}

/// Fourier coefficients as dyadic rationals `numerator / 2^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicExpansion {
    n: usize,
    numerators: Vec<i64>,
}

/// Exact Fourier transform of a Boolean function.
pub fn wht_exact(f: &BooleanFunction) -> DyadicExpansion {
    let mut buf: Vec<i64> = f.values().iter().map(|&v| v as i64).collect();
    wht_in_place(&mut buf);
    DyadicExpansion { n: f.n(), numerators: buf }
}

impl DyadicExpansion {
    pub fn from_numerators(n: usize, numerators: Vec<i64>) -> Result<Self> {
        check_arity(n)?;
        if numerators.len() != 1 << n {
            return Err(crate::Error::LengthMismatch { expected: 1 << n, got: numerators.len() });
        }
        Ok(Self { n, numerators })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn numerators(&self) -> &[i64] {
        &self.numerators
    }

    pub fn coefficient(&self, mask: usize) -> Rational {
        Rational::new(BigInt::from(self.numerators[mask]), BigInt::from(1u64 << self.n))
    }

    /// `sum_T (num_T / 2^n)^2 == 2^-n sum_x f(x)^2`, checked in integers.
    pub fn parseval_holds(&self) -> bool {
        let lhs: i128 = self.numerators.iter().map(|&c| (c as i128) * (c as i128)).sum();
        let energy: i128 = self.inverse().iter().map(|&v| (v as i128) * (v as i128)).sum();
        lhs == energy << self.n
    }

    /// Pointwise values `f(x)` recovered exactly. Assumes the numerators came
    /// from an integer-valued table, so every inverse sum is divisible by `2^n`.
    pub fn inverse(&self) -> Vec<i64> {
        let mut buf = self.numerators.clone();
        wht_in_place(&mut buf);
        let n = self.n;
        buf.iter().map(|&v| v >> n).collect()
    }

    pub fn to_expansion(&self) -> FourierExpansion {
        let scale = (-(self.n as i32) as f64).exp2();
        FourierExpansion::new(self.n, self.numerators.iter().map(|&c| c as f64 * scale).collect())
            .expect("table length matches arity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dictator_spectrum() {
        let f = BooleanFunction::dictator(3, 0).unwrap();
        let c = wht(&f);
        for mask in 0..8 {
            assert_eq!(c.coeff(mask), if mask == 1 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn parity_spectrum() {
        let f = BooleanFunction::parity(5).unwrap();
        let c = wht(&f);
        assert_eq!(c.coeff(31), 1.0);
        assert_eq!(c.coeffs().iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn inverse_of_constant_term() {
        let e = FourierExpansion::from_terms(3, &[(0, 1.0)]).unwrap();
        assert_eq!(inverse_wht(&e), vec![1.0; 8]);
        let half = FourierExpansion::from_terms(3, &[(0, 0.5), (1, 0.5)]).unwrap();
        // 0.5 + 0.5 x_1: 1 where bit 0 is clear, 0 where it is set.
        assert_eq!(inverse_wht(&half), vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn round_trip_random_n8_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = BooleanFunction::random(8, &mut rng).unwrap();
        let back = inverse_wht(&wht(&f));
        for (x, &v) in back.iter().enumerate() {
            assert_eq!(v, f.value(x) as f64);
        }
        assert_eq!(wht_exact(&f).inverse(), f.values().iter().map(|&v| v as i64).collect::<Vec<_>>());
    }

    #[test]
    fn parallel_butterfly_matches_serial() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let f = BooleanFunction::random(16, &mut rng).unwrap();
        let fast = wht_exact(&f);
        // direct O(4^n) would be too slow at n=16; check a few coefficients.
        for mask in [0usize, 1, 0x8001, 0xffff, 0x1234] {
            let direct: i64 = (0..1usize << 16)
                .map(|x| f.value(x) as i64 * if (x & mask).count_ones() % 2 == 0 { 1 } else { -1 })
                .sum();
            assert_eq!(fast.numerators()[mask], direct);
        }
    }

    #[test]
    fn exact_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=12 {
            let f = BooleanFunction::random(n, &mut rng).unwrap();
            let e = wht_exact(&f);
            assert!(e.parseval_holds());
            let total: Rational = (0..1usize << n).map(|m| e.coefficient(m) * e.coefficient(m)).sum();
            assert_eq!(total, Rational::from_integer(1.into()));
        }
    }
}
