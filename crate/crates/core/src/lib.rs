//! Hadamard-predicate dictatorship testing.
//!
//! The crate builds the `2k+1` string predicate `P_k` for `k = 2^m - 1`, the
//! almost pairwise independent test distribution on it, and the single and
//! multi-level tests that query a Boolean function at `k` correlated points.
//! Around that core sit the analysis tools needed to check the test's
//! claimed properties at small scale: Fourier and Efron-Stein
//! decompositions, Markov operators of correlated spaces, correlated
//! Gaussian ensembles, and exact or Monte Carlo acceptance probabilities.

pub mod boolfn;
pub mod correlated;
pub mod distribution;
pub mod error;
pub mod gaussian;
pub mod predicate;
pub mod rational;
pub mod rng;
pub mod tester;

pub use error::{Error, Result};
pub use rational::Rational;
