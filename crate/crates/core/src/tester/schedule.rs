//! Parameter schedule of the multi-level test.
//!
//! With `err = (eps/5)/2^k` and `L = ln(k/err)`, level `j` uses noise
//! `eps_j`, degree window `(s_j, S_j)` with `s_j = L/eps_{j-1}^2` and
//! `S_j = s_{j+1}`, smoothing `gamma_j = err/(k s_j)` and degree cutoffs
//! `d_{j,1} = (2k^2 s_j/err) L`, `d_{j,i} = d_{j,1}^i`.
//!
//! In paper-exact mode `eps_{j+1} = err 2^{-(k^10/(err^3 eps_j))^k}`, which
//! is doubly exponentially small, so every quantity is carried as a base-2
//! logarithm and deeper levels as towers of powers of two.

use crate::error::{Error, Result};
use crate::rational::{integer, log2_abs, to_f64, RationalJson};
use crate::Rational;
use num_traits::{One, Pow, Signed, Zero};
use serde::ser::{Serialize, SerializeStruct, Serializer};
use std::cmp::Ordering;

/// Levels above which a float would be meaningless.
pub const SYMBOLIC_LOG2_LIMIT: f64 = 900.0;
const TOWER_FLOAT_LIMIT: f64 = 1000.0;

/// A real number given either as `exact + approx` or as
/// `offset +- 2^exponent`.
#[derive(Debug, Clone, PartialEq)]
pub enum LogExpr {
    Lin { exact: Rational, approx: f64 },
    Tower { offset: f64, negative: bool, exponent: Box<LogExpr> },
}

/// Sign, tower height and top value: `|x| ~ 2^2^...^top` with `height` twos.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key {
    sign: i8,
    height: usize,
    top: f64,
}

fn signum(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

impl LogExpr {
    pub fn float(v: f64) -> Self {
        LogExpr::Lin { exact: Rational::zero(), approx: v }
    }

    pub fn exact(r: Rational) -> Self {
        LogExpr::Lin { exact: r, approx: 0.0 }
    }

    pub fn add_f64(&self, c: f64) -> Self {
        match self {
            LogExpr::Lin { exact, approx } => LogExpr::Lin { exact: exact.clone(), approx: approx + c },
            LogExpr::Tower { offset, negative, exponent } => {
                LogExpr::Tower { offset: offset + c, negative: *negative, exponent: exponent.clone() }
            }
        }
    }

    pub fn scale(&self, c: i64) -> Self {
        match self {
            _ if c == 0 => LogExpr::float(0.0),
            LogExpr::Lin { exact, approx } => LogExpr::Lin { exact: exact * integer(c), approx: approx * c as f64 },
            LogExpr::Tower { offset, negative, exponent } => LogExpr::Tower {
                offset: offset * c as f64,
                negative: *negative != (c < 0),
                exponent: Box::new(exponent.add_f64((c.unsigned_abs() as f64).log2())),
            },
        }
    }

    /// Sum when it can be formed without losing the exact parts: two linear
    /// terms, or two towers over the same exponent with opposite signs.
    pub fn checked_add(&self, other: &LogExpr) -> Option<LogExpr> {
        match (self, other) {
            (LogExpr::Lin { exact: a, approx: x }, LogExpr::Lin { exact: b, approx: y }) => {
                Some(LogExpr::Lin { exact: a + b, approx: x + y })
            }
            (
                LogExpr::Tower { offset: o1, negative: n1, exponent: e1 },
                LogExpr::Tower { offset: o2, negative: n2, exponent: e2 },
            ) if n1 != n2 && e1 == e2 => Some(LogExpr::float(o1 + o2)),
            _ => None,
        }
    }

    /// Nearest float; infinite once a tower outgrows `f64`.
    pub fn to_f64(&self) -> f64 {
        match self {
            LogExpr::Lin { exact, approx } => to_f64(exact) + approx,
            LogExpr::Tower { offset, negative, exponent } => {
                let e = exponent.to_f64();
                let mag = if e > TOWER_FLOAT_LIMIT { f64::INFINITY } else { e.exp2() };
                if *negative {
                    offset - mag
                } else {
                    offset + mag
                }
            }
        }
    }

    fn key(&self) -> Key {
        match self {
            LogExpr::Lin { .. } => {
                let v = self.to_f64();
                Key { sign: signum(v), height: 0, top: v.abs() }
            }
            LogExpr::Tower { negative, exponent, .. } => {
                let e = exponent.key();
                if e.sign <= 0 || (e.height == 0 && e.top <= TOWER_FLOAT_LIMIT) {
                    let v = self.to_f64();
                    return Key { sign: signum(v), height: 0, top: v.abs() };
                }
                Key { sign: if *negative { -1 } else { 1 }, height: e.height + 1, top: e.top }
            }
        }
    }

    /// Number of nested powers of two needed to write the value.
    pub fn tower_height(&self) -> usize {
        self.key().height
    }

    /// `|x| > limit`.
    pub fn exceeds(&self, limit: f64) -> bool {
        let k = self.key();
        k.height > 0 || k.top > limit
    }

    /// Human-readable form, e.g. `-2^(5.5e165)`.
    pub fn describe(&self) -> String {
        match self {
            LogExpr::Lin { .. } => format!("{:e}", self.to_f64()),
            LogExpr::Tower { offset, negative, exponent } => {
                let sign = if *negative { "-" } else { "" };
                if exponent.exceeds(TOWER_FLOAT_LIMIT) {
                    format!("{sign}2^({})", exponent.describe())
                } else {
                    format!("{:e}", offset + if *negative { -1.0 } else { 1.0 } * exponent.to_f64().exp2())
                }
            }
        }
    }
}

impl PartialOrd for LogExpr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (a, b) = (self.key(), other.key());
        if a.sign != b.sign {
            return Some(a.sign.cmp(&b.sign));
        }
        let mag = (a.height, a.top).partial_cmp(&(b.height, b.top))?;
        Some(if a.sign < 0 { mag.reverse() } else { mag })
    }
}

impl Serialize for LogExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LogExpr::Lin { exact, approx } => {
                let mut st = s.serialize_struct("Lin", 3)?;
                st.serialize_field("exact", &RationalJson::from(exact))?;
                st.serialize_field("approx", approx)?;
                st.serialize_field("value", &self.to_f64())?;
                st.end()
            }
            LogExpr::Tower { offset, negative, exponent } => {
                let mut st = s.serialize_struct("Tower", 4)?;
                st.serialize_field("offset", offset)?;
                st.serialize_field("negative", negative)?;
                st.serialize_field("exponent", exponent.as_ref())?;
                st.serialize_field("describe", &self.describe())?;
                st.end()
            }
        }
    }
}

/// `coeff * L^ln_power` with `L = ln(k/err)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogScaled {
    pub coeff: Rational,
    pub ln_power: i32,
}

impl LogScaled {
    pub fn value(&self, ln_k_over_err: f64) -> f64 {
        to_f64(&self.coeff) * ln_k_over_err.powi(self.ln_power)
    }

    pub fn pow(&self, i: u32) -> LogScaled {
        LogScaled { coeff: Pow::pow(&self.coeff, i), ln_power: self.ln_power * i as i32 }
    }
}

impl std::ops::Mul for &LogScaled {
    type Output = LogScaled;
    fn mul(self, rhs: &LogScaled) -> LogScaled {
        LogScaled { coeff: &self.coeff * &rhs.coeff, ln_power: self.ln_power + rhs.ln_power }
    }
}

impl Serialize for LogScaled {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("LogScaled", 2)?;
        st.serialize_field("coeff", &RationalJson::from(&self.coeff))?;
        st.serialize_field("ln_power", &self.ln_power)?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    PaperExact,
    Practical,
}

/// One level `j >= 1`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScheduleLevel {
    pub j: usize,
    #[serde(serialize_with = "ser_opt_rational")]
    pub epsilon: Option<Rational>,
    pub log2_epsilon: LogExpr,
    /// `s_j = L / eps_{j-1}^2`
    pub log2_s: LogExpr,
    /// `S_j = s_{j+1} = L / eps_j^2`
    pub log2_big_s: LogExpr,
    pub log2_gamma: LogExpr,
    pub log2_d1: LogExpr,
    pub s: Option<LogScaled>,
    pub big_s: Option<LogScaled>,
    pub gamma: Option<LogScaled>,
    pub d1: Option<LogScaled>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub alpha: Option<Rational>,
    #[serde(serialize_with = "ser_opt_rational")]
    pub beta: Option<Rational>,
    pub symbolic_only: bool,
}

fn ser_opt_rational<S: Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    v.as_ref().map(RationalJson::from).serialize(s)
}

fn ser_rational<S: Serializer>(v: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    RationalJson::from(v).serialize(s)
}

impl ScheduleLevel {
    /// `log2 d_{j,i} = i log2 d_{j,1}`.
    pub fn log2_d(&self, i: u32) -> LogExpr {
        self.log2_d1.scale(i as i64)
    }

    pub fn d(&self, i: u32) -> Option<LogScaled> {
        self.d1.as_ref().map(|d| d.pow(i))
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TestSchedule {
    pub k: usize,
    #[serde(serialize_with = "ser_rational")]
    pub epsilon: Rational,
    /// `(eps/5) / 2^k`
    #[serde(serialize_with = "ser_rational")]
    pub err: Rational,
    /// `(k/err)^2`, the nominal number of levels.
    #[serde(serialize_with = "ser_rational")]
    pub r: Rational,
    pub mode: ScheduleMode,
    /// `L = ln(k/err)`
    pub ln_k_over_err: f64,
    pub levels: Vec<ScheduleLevel>,
}

/// Pass/fail of each structural property.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ScheduleInvariants {
    pub window_chain: bool,
    pub windows_disjoint: bool,
    pub epsilon_decreasing: bool,
    pub s_increasing: bool,
    pub gamma_d_identity: bool,
}

impl ScheduleInvariants {
    pub fn all(&self) -> bool {
        self.window_chain
            && self.windows_disjoint
            && self.epsilon_decreasing
            && self.s_increasing
            && self.gamma_d_identity
    }
}

fn check_top_epsilon(k: usize, eps: &Rational) -> Result<()> {
    let cap = Rational::new(1.into(), (k * k).into());
    if !eps.is_positive() || eps > &cap {
        return Err(Error::EpsilonOutOfRange { eps: eps.to_string(), k });
    }
    Ok(())
}

struct Common {
    k: usize,
    err: Rational,
    ln_l: f64,
    log2_l: f64,
    log2_err: f64,
    log2_k: f64,
    log2_d_scale: f64,
}

impl Common {
    fn new(k: usize, eps: &Rational) -> Self {
        let err = eps / integer(5) / Rational::from_integer(num_bigint::BigInt::one() << k);
        let ratio = integer(k as i64) / &err;
        let ln_l = log2_abs(&ratio) * std::f64::consts::LN_2;
        Self {
            k,
            log2_err: log2_abs(&err),
            log2_k: (k as f64).log2(),
            log2_d_scale: log2_abs(&(integer(2 * (k * k) as i64) / &err)),
            err,
            ln_l,
            log2_l: ln_l.log2(),
        }
    }

    fn log2_s_from(&self, log2_eps_prev: &LogExpr) -> LogExpr {
        log2_eps_prev.scale(-2).add_f64(self.log2_l)
    }

    fn s_from(&self, eps_prev: &Rational) -> LogScaled {
        LogScaled { coeff: (eps_prev * eps_prev).recip(), ln_power: 1 }
    }

    fn level(
        &self,
        j: usize,
        eps: Option<&Rational>,
        eps_prev: Option<&Rational>,
        log2_eps: LogExpr,
        log2_eps_prev: &LogExpr,
    ) -> ScheduleLevel {
        let log2_s = self.log2_s_from(log2_eps_prev);
        let log2_big_s = self.log2_s_from(&log2_eps);
        let log2_gamma = log2_s.scale(-1).add_f64(self.log2_err - self.log2_k);
        let log2_d1 = log2_s.add_f64(self.log2_d_scale + self.log2_l);
        let k = integer(self.k as i64);
        let s = eps_prev.map(|e| self.s_from(e));
        let gamma = s.as_ref().map(|s| LogScaled { coeff: &self.err / &k / &s.coeff, ln_power: -1 });
        let d1 = s.as_ref().map(|s| LogScaled { coeff: integer(2) * &k * &k * &s.coeff / &self.err, ln_power: 2 });
        let alpha = eps.map(|e| integer(self.k as i64 - 1) * e);
        let beta = eps.zip(alpha.as_ref()).map(|(e, a)| e / (Rational::one() - a));
        ScheduleLevel {
            j,
            epsilon: eps.cloned(),
            symbolic_only: log2_eps.exceeds(SYMBOLIC_LOG2_LIMIT),
            log2_epsilon: log2_eps,
            log2_s,
            log2_big_s,
            log2_gamma,
            log2_d1,
            s,
            big_s: eps.map(|e| self.s_from(e)),
            gamma,
            d1,
            alpha,
            beta,
        }
    }
}

impl TestSchedule {
    /// Paper-exact schedule materialized for its first `levels` levels.
    pub fn paper_exact(k: usize, eps: &Rational, levels: usize) -> Result<Self> {
        check_top_epsilon(k, eps)?;
        crate::predicate::dimension_for(k)?;
        if levels == 0 {
            return Err(Error::InvalidSchedule("at least one level is required".into()));
        }
        let c = Common::new(k, eps);
        let kk = integer(k as i64);
        let k10_over_err3 = Pow::pow(&kk, 10u32) / Pow::pow(&c.err, 3u32);
        let log2_a = log2_abs(&k10_over_err3);
        // V_1 = (k^10 / (err^3 eps_0))^k exactly
        let v1 = Pow::pow(&(&k10_over_err3 / eps), k as u32);
        let mut v = LogExpr::exact(v1);
        let log2_eps0 = LogExpr::float(log2_abs(eps));
        let mut prev = log2_eps0;
        let mut out = Vec::with_capacity(levels);
        for j in 1..=levels {
            if j > 1 {
                // log2 V_j = k (A - log2 err + V_{j-1})
                let exponent = v.scale(k as i64).add_f64(k as f64 * (log2_a - c.log2_err));
                v = LogExpr::Tower { offset: 0.0, negative: false, exponent: Box::new(exponent) };
            }
            let log2_eps = v.scale(-1).add_f64(c.log2_err);
            let eps_prev = (j == 1).then_some(eps);
            out.push(c.level(j, None, eps_prev, log2_eps.clone(), &prev));
            prev = log2_eps;
        }
        Ok(Self::assemble(c, eps, ScheduleMode::PaperExact, out))
    }

    /// Schedule over an explicit decreasing list `eps_1 > eps_2 > ...`; a
    /// leading entry equal to `eps` is taken as `eps_0` and dropped.
    pub fn practical(k: usize, eps: &Rational, list: &[Rational]) -> Result<Self> {
        check_top_epsilon(k, eps)?;
        crate::predicate::dimension_for(k)?;
        let list: &[Rational] = if list.first() == Some(eps) { &list[1..] } else { list };
        if list.is_empty() {
            return Err(Error::InvalidSchedule("no levels below the top-level epsilon".into()));
        }
        let mut prev = eps;
        for e in list {
            check_top_epsilon(k, e)?;
            if e >= prev {
                return Err(Error::InvalidSchedule(format!("{e} does not decrease from {prev}")));
            }
            prev = e;
        }
        let c = Common::new(k, eps);
        let mut out = Vec::with_capacity(list.len());
        let mut prev = eps;
        for (idx, e) in list.iter().enumerate() {
            let log2_eps = LogExpr::float(log2_abs(e));
            let log2_prev = LogExpr::float(log2_abs(prev));
            out.push(c.level(idx + 1, Some(e), Some(prev), log2_eps, &log2_prev));
            prev = e;
        }
        Ok(Self::assemble(c, eps, ScheduleMode::Practical, out))
    }

    fn assemble(c: Common, eps: &Rational, mode: ScheduleMode, levels: Vec<ScheduleLevel>) -> Self {
        let ratio = integer(c.k as i64) / &c.err;
        TestSchedule {
            k: c.k,
            epsilon: eps.clone(),
            r: &ratio * &ratio,
            err: c.err,
            mode,
            ln_k_over_err: c.ln_l,
            levels,
        }
    }

    pub fn level(&self, j: usize) -> Option<&ScheduleLevel> {
        self.levels.iter().find(|l| l.j == j)
    }

    pub fn invariants(&self) -> ScheduleInvariants {
        let pairs = || self.levels.windows(2).map(|w| (&w[0], &w[1]));
        let window_chain = pairs().all(|(a, b)| a.log2_big_s == b.log2_s && a.big_s == b.s);
        let windows_disjoint =
            self.levels.iter().all(|l| l.log2_s < l.log2_big_s) && pairs().all(|(a, b)| a.log2_big_s <= b.log2_s);
        let top = LogExpr::float(log2_abs(&self.epsilon));
        let epsilon_decreasing = self.levels.first().is_none_or(|l| l.log2_epsilon < top)
            && pairs().all(|(a, b)| b.log2_epsilon < a.log2_epsilon);
        let s_increasing = pairs().all(|(a, b)| a.log2_s < b.log2_s);
        let target = LogScaled { coeff: integer(2 * self.k as i64), ln_power: 1 };
        let log2_target = (2.0 * self.k as f64 * self.ln_k_over_err).log2();
        let gamma_d_identity = self.levels.iter().all(|l| match (&l.gamma, &l.d1) {
            (Some(g), Some(d)) => g * d == target,
            _ => l
                .log2_gamma
                .checked_add(&l.log2_d1)
                .is_some_and(|sum| (sum.to_f64() - log2_target).abs() <= 1e-9 * log2_target.abs().max(1.0)),
        });
        ScheduleInvariants { window_chain, windows_disjoint, epsilon_decreasing, s_increasing, gamma_d_identity }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use num_bigint::BigInt;

    #[test]
    fn err_and_r_for_k7() {
        let s = TestSchedule::paper_exact(7, &ratio(1, 49), 3).unwrap();
        assert_eq!(s.err, ratio(1, 31360));
        assert_eq!(s.r, Rational::from_integer(BigInt::from(219520u64 * 219520u64)));
        assert!((s.ln_k_over_err - (219520f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn paper_level_one_is_exact() {
        let s = TestSchedule::paper_exact(7, &ratio(1, 49), 3).unwrap();
        let l1 = s.level(1).unwrap();
        let base: BigInt = BigInt::from(7).pow(10u32) * BigInt::from(31360).pow(3u32) * BigInt::from(49);
        let v = base.pow(7u32);
        assert_eq!(l1.log2_epsilon, LogExpr::Lin { exact: -Rational::from_integer(v), approx: -(31360f64).log2() });
        // independent log-space magnitude: log2 N = 7 (10 log2 7 + 3 log2 31360 + log2 49)
        let log2_n = 7.0 * (10.0 * 7f64.log2() + 3.0 * 31360f64.log2() + 49f64.log2());
        let got = (-l1.log2_epsilon.to_f64()).log2();
        assert!((got - log2_n).abs() / log2_n < 1e-12);
        assert!(l1.symbolic_only);
        assert!((l1.log2_epsilon.to_f64().abs().log10() - 165.4).abs() < 0.5);
    }

    #[test]
    fn paper_towers_grow() {
        let s = TestSchedule::paper_exact(7, &ratio(1, 49), 3).unwrap();
        let h: Vec<usize> = s.levels.iter().map(|l| l.log2_epsilon.tower_height()).collect();
        assert_eq!(h, vec![0, 1, 2]);
        assert!(s.invariants().all(), "{:?}", s.invariants());
    }

    #[test]
    fn practical_schedule_invariants() {
        let list = [ratio(1, 49), ratio(1, 500), ratio(1, 5000)];
        let s = TestSchedule::practical(7, &ratio(1, 49), &list).unwrap();
        assert_eq!(s.levels.len(), 2);
        let inv = s.invariants();
        assert!(inv.all(), "{inv:?}");
        let l = &s.levels[0];
        assert_eq!(l.s.as_ref().unwrap().coeff, integer(49 * 49));
        assert_eq!(l.big_s, s.levels[1].s);
        assert_eq!(l.beta, Some(ratio(1, 500) / (Rational::one() - ratio(6, 500))));
        let d2 = l.d(2).unwrap();
        assert_eq!(d2.ln_power, 4);
    }

    #[test]
    fn practical_rejects_bad_lists() {
        let e = ratio(1, 49);
        assert!(TestSchedule::practical(7, &e, &[ratio(1, 500), ratio(1, 400)]).is_err());
        assert!(TestSchedule::practical(7, &e, &[ratio(1, 40)]).is_err());
        assert!(TestSchedule::practical(7, &e, &[]).is_err());
        assert!(TestSchedule::practical(7, &ratio(1, 40), &[ratio(1, 500)]).is_err());
    }

    #[test]
    fn log_expr_ordering() {
        let a = LogExpr::float(-5.0);
        let b = LogExpr::exact(-Rational::from_integer(BigInt::from(10).pow(200u32)));
        let t = LogExpr::Tower { offset: 0.0, negative: true, exponent: Box::new(LogExpr::float(5000.0)) };
        assert!(b < a && t < b);
        assert_eq!(t.scale(-2).tower_height(), 1);
        assert!(t.scale(-2) > LogExpr::float(1e300));
        assert_eq!(t.checked_add(&t.scale(-1)).unwrap().to_f64(), 0.0);
    }
}
