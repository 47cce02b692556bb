//! Efron-Stein decompositions over finite product spaces and Markov operators
//! of product correlated spaces.
//!
//! Functions on a product space are dense value tables in mixed radix order,
//! coordinate 0 varying fastest.

use crate::distribution::CoordinateSplit;
use crate::error::{Error, Result};
use crate::rational::to_f64;
use nalgebra::DMatrix;

/// Largest value table handled.
pub const MAX_TABLE: usize = 1 << 20;
const PROB_TOL: f64 = 1e-12;

/// `(Omega_1 x ... x Omega_n, mu_1 x ... x mu_n)` with finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProductSpace {
    probs: Vec<Vec<f64>>,
    strides: Vec<usize>,
    size: usize,
}

impl FiniteProductSpace {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no coordinates".into()));
        }
        let mut size: u128 = 1;
        let mut strides = Vec::with_capacity(probs.len());
        for (i, p) in probs.iter().enumerate() {
            if p.is_empty() || p.iter().any(|&v| v.is_nan() || v < 0.0) {
                return Err(Error::InvalidDistribution(format!("coordinate {i} has invalid probabilities")));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidDistribution(format!("coordinate {i} sums to {total}")));
            }
            strides.push(size as usize);
            size *= p.len() as u128;
            if size > MAX_TABLE as u128 {
                return Err(Error::TableTooLarge { size, cap: MAX_TABLE as u128 });
            }
        }
        Ok(Self { probs, strides, size: size as usize })
    }

    pub fn homogeneous(p: Vec<f64>, n: usize) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dims(&self) -> Vec<usize> {
        self.probs.iter().map(Vec::len).collect()
    }

    pub fn probs(&self, i: usize) -> &[f64] {
        &self.probs[i]
    }

    pub fn digit(&self, index: usize, i: usize) -> usize {
        (index / self.strides[i]) % self.probs[i].len()
    }

    fn check(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.size {
            Err(Error::LengthMismatch { expected: self.size, got: g.len() })
        } else {
            Ok(())
        }
    }

    /// Probability of a single point.
    pub fn point_mass(&self, index: usize) -> f64 {
        (0..self.n()).map(|i| self.probs[i][self.digit(index, i)]).product()
    }

    pub fn expectation(&self, g: &[f64]) -> f64 {
        g.iter().enumerate().map(|(x, v)| self.point_mass(x) * v).sum()
    }

    pub fn inner(&self, g: &[f64], h: &[f64]) -> f64 {
        g.iter().zip(h).enumerate().map(|(x, (a, b))| self.point_mass(x) * a * b).sum()
    }

    pub fn norm2(&self, g: &[f64]) -> f64 {
        self.inner(g, g).max(0.0).sqrt()
    }

    /// Replaces `g` by its average over coordinate `i`.
    fn average_out(&self, g: &[f64], i: usize) -> Vec<f64> {
        let stride = self.strides[i];
        let p = &self.probs[i];
        (0..self.size)
            .map(|x| {
                let base = x - self.digit(x, i) * stride;
                p.iter().enumerate().map(|(a, pa)| pa * g[base + a * stride]).sum()
            })
            .collect()
    }

    /// `E[g | x_keep]` as a table on the whole space.
    pub fn conditional_expectation(&self, g: &[f64], keep: usize) -> Result<Vec<f64>> {
        self.check(g)?;
        let mut out = g.to_vec();
        for i in (0..self.n()).filter(|i| (keep >> i) & 1 == 0) {
            out = self.average_out(&out, i);
        }
        Ok(out)
    }
}

/// Components `g_S` indexed by subset mask `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct EfronSteinDecomposition {
    components: Vec<Vec<f64>>,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `g_S = sum_{T subset S} (-1)^{|S \ T|} E[g | x_T]`.
pub fn efron_stein(g: &[f64], space: &FiniteProductSpace) -> Result<EfronSteinDecomposition> {
    space.check(g)?;
    let n = space.n();
    let subsets = 1usize << n;
    let conditional: Vec<Vec<f64>> =
        (0..subsets).map(|t| space.conditional_expectation(g, t)).collect::<Result<_>>()?;
    let components = (0..subsets)
        .map(|s| {
            let mut comp = vec![0.0; space.size()];
            // iterate over T subset S
            let mut t = s;
            loop {
                let sign = if (s & !t).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                comp.iter_mut().zip(&conditional[t]).for_each(|(c, v)| *c += sign * v);
                if t == 0 {
                    break;
                }
                t = (t - 1) & s;
            }
            comp
        })
        .collect();
    Ok(EfronSteinDecomposition { components })
}

impl EfronSteinDecomposition {
    pub fn component(&self, subset: usize) -> &[f64] {
        &self.components[subset]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.components[0].len()];
        for c in &self.components {
            out.iter_mut().zip(c).for_each(|(o, v)| *o += v);
        }
        out
    }

    /// `max |sum_S g_S - g|`.
    pub fn reconstruction_error(&self, g: &[f64]) -> f64 {
        max_abs_diff(&self.reconstruct(), g)
    }

    /// How far each `g_S` is from depending only on `S`.
    pub fn locality_error(&self, space: &FiniteProductSpace) -> f64 {
        self.components
            .iter()
            .enumerate()
            .map(|(s, c)| max_abs_diff(&space.conditional_expectation(c, s).unwrap(), c))
            .fold(0.0, f64::max)
    }

    /// `max |E[g_S | x_B]|` over all `B` not containing `S`.
    pub fn conditional_mean_error(&self, space: &FiniteProductSpace) -> f64 {
        let subsets = self.components.len();
        let mut worst: f64 = 0.0;
        for (s, c) in self.components.iter().enumerate() {
            for b in (0..subsets).filter(|b| b & s != s) {
                let cond = space.conditional_expectation(c, b).unwrap();
                worst = worst.max(cond.iter().fold(0.0, |m, v| m.max(v.abs())));
            }
        }
        worst
    }

    /// `|sum_S ||g_S||^2 - ||g||^2|`.
    pub fn orthogonality_error(&self, g: &[f64], space: &FiniteProductSpace) -> f64 {
        let parts: f64 = self.components.iter().map(|c| space.inner(c, c)).sum();
        (parts - space.inner(g, g)).abs()
    }
}

/// Joint law `mu(x, y)` of one correlated coordinate, stored as `probs[x][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    probs: Vec<Vec<f64>>,
}

impl JointTable {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        let cols = probs.first().map(Vec::len).unwrap_or(0);
        if cols == 0 || probs.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidDistribution("ragged or empty joint table".into()));
        }
        if probs.iter().flatten().any(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::InvalidDistribution("negative joint mass".into()));
        }
        let total: f64 = probs.iter().flatten().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!("joint sums to {total}")));
        }
        Ok(Self { probs })
    }

    /// Coordinate `i` (left, values 0/1) against the other coordinates (right).
    pub fn from_split(split: &CoordinateSplit) -> Self {
        let probs = (0..2).map(|x| split.joint.iter().map(|row| to_f64(&row[x])).collect()).collect();
        Self { probs }
    }

    pub fn left_len(&self) -> usize {
        self.probs.len()
    }

    pub fn right_len(&self) -> usize {
        self.probs[0].len()
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.probs[x][y]
    }

    pub fn left_marginal(&self) -> Vec<f64> {
        self.probs.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn right_marginal(&self) -> Vec<f64> {
        (0..self.right_len()).map(|y| self.probs.iter().map(|r| r[y]).sum()).collect()
    }

    /// Second singular value of `mu(x,y)/sqrt(mu1(x) mu2(y))`, by symmetric
    /// eigendecomposition of the smaller Gram matrix.
    pub fn correlation(&self) -> Result<f64> {
        let left = self.left_marginal();
        let right = self.right_marginal();
        if left.iter().chain(&right).any(|&m| m <= 0.0) {
            return Err(Error::DegenerateMarginal("zero-mass value in joint table".into()));
        }
        let a =
            DMatrix::from_fn(self.left_len(), self.right_len(), |x, y| self.probs[x][y] / (left[x] * right[y]).sqrt());
        let gram = if a.nrows() <= a.ncols() { &a * a.transpose() } else { a.transpose() * &a };
        let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|p, q| q.partial_cmp(p).unwrap());
        Ok(eig.get(1).copied().unwrap_or(0.0).max(0.0).sqrt())
    }

    /// `mu(y | x)`.
    fn kernel(&self) -> Result<Vec<Vec<f64>>> {
        self.probs
            .iter()
            .enumerate()
            .map(|(x, row)| {
                let total: f64 = row.iter().sum();
                if total <= 0.0 {
                    return Err(Error::DegenerateMarginal(format!("conditioning on zero-mass x = {x}")));
                }
                Ok(row.iter().map(|v| v / total).collect())
            })
            .collect()
    }
}

/// Product Markov operator `(Ug)(x) = E[g(Y) | X = x]` over `n` independent
/// correlated coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovOperator {
    joints: Vec<JointTable>,
}

impl MarkovOperator {
    pub fn new(joints: Vec<JointTable>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidDistribution("no coordinates".into()));
        }
        Ok(Self { joints })
    }

    pub fn homogeneous(joint: JointTable, n: usize) -> Result<Self> {
        Self::new(vec![joint; n])
    }

    pub fn n(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[JointTable] {
        &self.joints
    }

    /// Product of left marginals.
    pub fn x_space(&self) -> Result<FiniteProductSpace> {
        FiniteProductSpace::new(self.joints.iter().map(JointTable::left_marginal).collect())
    }

    /// Product of right marginals.
    pub fn y_space(&self) -> Result<FiniteProductSpace> {
        FiniteProductSpace::new(self.joints.iter().map(JointTable::right_marginal).collect())
    }

    /// Largest per-coordinate correlation.
    pub fn rho(&self) -> Result<f64> {
        self.joints.iter().map(JointTable::correlation).try_fold(0.0, |m, r| r.map(|r| f64::max(m, r)))
    }

    /// Applies the conditional kernel one axis at a time.
    pub fn apply(&self, g: &[f64]) -> Result<Vec<f64>> {
        let mut dims: Vec<usize> = self.joints.iter().map(JointTable::right_len).collect();
        let expected: usize = dims.iter().product();
        if g.len() != expected {
            return Err(Error::LengthMismatch { expected, got: g.len() });
        }
        let mut table = g.to_vec();
        for (axis, joint) in self.joints.iter().enumerate() {
            let kernel = joint.kernel()?;
            let stride: usize = dims[..axis].iter().product();
            let outer: usize = dims[axis + 1..].iter().product();
            let (cols, rows) = (dims[axis], kernel.len());
            let mut out = vec![0.0; stride * rows * outer];
            for o in 0..outer {
                for x in 0..rows {
                    for s in 0..stride {
                        out[s + stride * (x + rows * o)] =
                            (0..cols).map(|y| kernel[x][y] * table[s + stride * (y + cols * o)]).sum();
                    }
                }
            }
            dims[axis] = rows;
            table = out;
        }
        Ok(table)
    }
}

/// `U g`.
pub fn markov_apply(op: &MarkovOperator, g: &[f64]) -> Result<Vec<f64>> {
    op.apply(g)
}

/// `max_S ||(Ug)_S - U(g_S)||_2`, norms on the X side.
pub fn verify_commutation(op: &MarkovOperator, g: &[f64]) -> Result<f64> {
    let xs = op.x_space()?;
    let ys = op.y_space()?;
    let ug_parts = efron_stein(&op.apply(g)?, &xs)?;
    let g_parts = efron_stein(g, &ys)?;
    let mut worst: f64 = 0.0;
    for (s, gs) in g_parts.components().iter().enumerate() {
        let ugs = op.apply(gs)?;
        let diff: Vec<f64> = ug_parts.component(s).iter().zip(&ugs).map(|(a, b)| a - b).collect();
        worst = worst.max(xs.norm2(&diff));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionEntry {
    pub subset: usize,
    /// `||U(g_S)||_2`
    pub lhs: f64,
    /// `rho^|S| ||g_S||_2`
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub rho: f64,
    pub entries: Vec<ContractionEntry>,
    pub holds: bool,
}

/// Checks `||U(g_S)||_2 <= rho^|S| ||g_S||_2` for every `S`, with slack `1e-10`.
pub fn verify_contraction(op: &MarkovOperator, g: &[f64], rho: f64) -> Result<ContractionReport> {
    const SLACK: f64 = 1e-10;
    let xs = op.x_space()?;
    let ys = op.y_space()?;
    let parts = efron_stein(g, &ys)?;
    let entries: Vec<ContractionEntry> = parts
        .components()
        .iter()
        .enumerate()
        .map(|(s, gs)| {
            let lhs = xs.norm2(&op.apply(gs)?);
            let rhs = rho.powi(s.count_ones() as i32) * ys.norm2(gs);
            Ok(ContractionEntry { subset: s, lhs, rhs })
        })
        .collect::<Result<_>>()?;
    let holds = entries.iter().all(|e| e.lhs <= e.rhs + SLACK);
    Ok(ContractionReport { rho, entries, holds })
}
