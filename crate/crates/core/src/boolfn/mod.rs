//! Boolean functions on the hypercube and their Fourier expansions.
//!
//! Inputs are encoded as table indices: bit `i` of the index is the
//! `i`-th coordinate, with bit value 0 standing for +1 and 1 for -1. Under
//! this encoding the character of a subset mask `T` is
//! `chi_T(x) = (-1)^popcount(x & T)`, i.e. the product of the selected
//! coordinates. Coordinates are 0-based throughout the API.

mod fourier;
mod poly;

pub use fourier::{inverse_wht, wht, wht_exact, wht_in_place, DyadicExpansion};
pub use poly::{FourierExpansion, Measure, MultilinearPoly, NormOrder};

use crate::error::{Error, Result};
use rand::Rng;

/// Largest supported coordinate count.
pub const MAX_ARITY: usize = 24;

pub(crate) fn check_arity(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ARITY {
        Err(Error::ArityOutOfRange { n, max: MAX_ARITY })
    } else {
        Ok(())
    }
}

/// A `{-1,+1}`-valued function on `{-1,+1}^n`, stored as a full value table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BooleanFunction {
    n: usize,
    values: Vec<i8>,
}

impl BooleanFunction {
    pub fn from_values(n: usize, values: Vec<i8>) -> Result<Self> {
        check_arity(n)?;
        let expected = 1usize << n;
        if values.len() != expected {
            return Err(Error::LengthMismatch { expected, got: values.len() });
        }
        if let Some((index, &v)) = values.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(Error::NotBoolean { index, value: v as f64 });
        }
        Ok(Self { n, values })
    }

    /// Builds the table from a predicate on indices; `true` maps to -1.
    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        check_arity(n)?;
        let values = (0..1usize << n).map(|x| if f(x) { -1 } else { 1 }).collect();
        Ok(Self { n, values })
    }

    pub fn constant(n: usize, value: i8) -> Result<Self> {
        check_arity(n)?;
        Self::from_values(n, vec![value; 1 << n])
    }

    /// `f(x) = x_i`.
    pub fn dictator(n: usize, i: usize) -> Result<Self> {
        check_arity(n)?;
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        Self::from_fn(n, |x| (x >> i) & 1 == 1)
    }

    /// Character `chi_T` for the subset mask `T`.
    pub fn character(n: usize, mask: usize) -> Result<Self> {
        check_arity(n)?;
        if mask >> n != 0 {
            return Err(Error::IndexOutOfRange { index: mask, len: 1 << n });
        }
        Self::from_fn(n, |x| (x & mask).count_ones() % 2 == 1)
    }

    /// Parity of all `n` coordinates.
    pub fn parity(n: usize) -> Result<Self> {
        check_arity(n)?;
        Self::character(n, (1 << n) - 1)
    }

    /// Majority of an odd number of coordinates.
    pub fn majority(n: usize) -> Result<Self> {
        check_arity(n)?;
        if n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("majority needs odd n, got {n}")));
        }
        Self::from_fn(n, |x| x.count_ones() as usize > n / 2)
    }

    /// OR of ANDs over consecutive blocks of `width` coordinates, reading
    /// -1 as true. Trailing coordinates that do not fill a block are ignored.
    pub fn tribes(n: usize, width: usize) -> Result<Self> {
        check_arity(n)?;
        if width == 0 || width > n {
            return Err(Error::InvalidArgument(format!("tribe width {width} for n = {n}")));
        }
        let block = (1usize << width) - 1;
        let tribes = n / width;
        Self::from_fn(n, |x| (0..tribes).any(|t| (x >> (t * width)) & block == block))
    }

    /// A function of the listed coordinates only, given by `table` indexed by
    /// the bits of those coordinates in the listed order.
    pub fn junta(n: usize, coords: &[usize], table: &[i8]) -> Result<Self> {
        check_arity(n)?;
        if let Some(&bad) = coords.iter().find(|&&c| c >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        let expected = 1usize << coords.len();
        if table.len() != expected {
            return Err(Error::LengthMismatch { expected, got: table.len() });
        }
        let values = (0..1usize << n)
            .map(|x| {
                let sub = coords.iter().enumerate().fold(0usize, |acc, (j, &c)| acc | (((x >> c) & 1) << j));
                table[sub]
            })
            .collect();
        Self::from_values(n, values)
    }

    /// Uniformly random function.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_arity(n)?;
        let values = (0..1usize << n).map(|_| if rng.random::<bool>() { -1 } else { 1 }).collect();
        Ok(Self { n, values })
    }

    /// Uniformly random folded function.
    pub fn random_folded<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Ok(Self::random(n, rng)?.fold_enforce())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    #[inline]
    pub fn value(&self, x: usize) -> i8 {
        self.values[x]
    }

    /// Output as a predicate bit: +1 is 0, -1 is 1.
    #[inline]
    pub fn bit(&self, x: usize) -> u32 {
        (self.values[x] < 0) as u32
    }

    fn complement(&self, x: usize) -> usize {
        !x & ((1 << self.n) - 1)
    }

    /// `f(-x) = -f(x)` at every point.
    pub fn is_folded(&self) -> bool {
        (0..self.len()).all(|x| self.values[x] == -self.values[self.complement(x)])
    }

    /// Folds using inputs with bit 0 clear as representatives.
    pub fn fold_enforce(&self) -> Self {
        let mut values = self.values.clone();
        for x in (0..self.len()).filter(|x| x & 1 == 0) {
            values[self.complement(x)] = -self.values[x];
        }
        Self { n: self.n, values }
    }

    /// For a single character `chi_T`, its mask.
    pub fn as_character(&self) -> Option<usize> {
        let spectrum = wht_exact(self);
        let full = 1i64 << self.n;
        let mut found = None;
        for (mask, &c) in spectrum.numerators().iter().enumerate() {
            if c == full {
                found = Some(mask);
            } else if c != 0 {
                return None;
            }
        }
        found
    }

    /// Two-line text form: `n=<n>` then one `+`/`-` per table entry.
    pub fn to_truth_table(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        out.extend(self.values.iter().map(|&v| if v > 0 { '+' } else { '-' }));
        out.push('\n');
        out
    }

    pub fn parse_truth_table(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty truth table".into()))?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .ok_or_else(|| Error::Parse(format!("bad header {header:?}")))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad arity: {e}")))?;
        check_arity(n)?;
        let body = lines.next().unwrap_or("").trim();
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::Parse("trailing content after table".into()));
        }
        let values = body
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::Parse(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::from_values(n, values)
    }
}
