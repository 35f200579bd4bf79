//! Exact reference quantities.
//!
//! Weighted norms, distortion and p-norms are computed directly with pairwise
//! summation. The two `exact_*_expectation` functions average the estimators
//! over every possible projection row or hash assignment, which is feasible
//! for `d <= 8` and gives the exact expectation with no sampling error.

use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum, pairwise_sum_map};
use crate::projection::{rho, ProjectionMatrix};
use crate::sketch::{ForcedHashes, SketchConfig, StreamMode, StreamSketch};
use crate::units::ComplexUnit;

/// Largest dimension accepted by the enumeration oracles (`4^8` cases).
pub const MAX_ENUMERATION_DIM: usize = 8;

/// A data vector and a non-negative weight vector of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPair {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl WeightedPair {
    pub fn new(x: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if x.len() != w.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: w.len() });
        }
        if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| v.is_nan() || **v < 0.0) {
            return Err(Error::NegativeWeight { index, value });
        }
        Ok(WeightedPair { x, w })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    /// Nonzero entries of `x` as `(index, value)`.
    pub fn x_sparse(&self) -> Vec<(usize, f64)> {
        nonzeros(&self.x)
    }

    /// Nonzero entries of `w` as `(index, value)`.
    pub fn w_sparse(&self) -> Vec<(usize, f64)> {
        nonzeros(&self.w)
    }

    pub fn weighted_sq_norm(&self) -> f64 {
        let terms: Vec<f64> = self.x.iter().zip(&self.w).map(|(x, w)| (w * x) * (w * x)).collect();
        pairwise_sum(&terms)
    }

    pub fn distortion(&self) -> Result<f64> {
        let weighted = self.weighted_sq_norm();
        if weighted == 0.0 {
            return Err(Error::ZeroWeightedNorm);
        }
        Ok(l2(&self.x) * l2(&self.w) / weighted.sqrt())
    }
}

pub fn nonzeros(v: &[f64]) -> Vec<(usize, f64)> {
    v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, x)| (i, *x)).collect()
}

fn l2(v: &[f64]) -> f64 {
    pairwise_sum_map(v, |x| x * x).sqrt()
}

/// `sum_i w_i^2 x_i^2`.
pub fn weighted_sq_norm(pair: &WeightedPair) -> f64 {
    pair.weighted_sq_norm()
}

/// `||x||_2 ||w||_2 / ||x||_w`; at least 1 whenever defined.
pub fn distortion(pair: &WeightedPair) -> Result<f64> {
    pair.distortion()
}

/// `(sum |x_i|^p)^(1/p)` for `p >= 1`.
pub fn p_norm(x: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(format!("p-norm needs p >= 1, got {p}")));
    }
    if p == 1.0 {
        return Ok(pairwise_sum_map(x, |v| v.abs()));
    }
    if p == 2.0 {
        return Ok(l2(x));
    }
    if p.is_infinite() {
        return Ok(x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    Ok(pairwise_sum_map(x, |v| v.abs().powf(p)).powf(1.0 / p))
}

fn check_enumerable(x: &[f64], w: &[f64]) -> Result<usize> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: w.len() });
    }
    let d = x.len();
    if d == 0 {
        return Err(Error::ZeroDimension { name: "d" });
    }
    if d > MAX_ENUMERATION_DIM {
        return Err(Error::EnumerationTooLarge { d, max: MAX_ENUMERATION_DIM });
    }
    Ok(d)
}

/// Every assignment of `d` units, as base-4 digits of a counter.
fn assignments(d: usize) -> impl Iterator<Item = Vec<ComplexUnit>> {
    (0..1usize << (2 * d)).map(move |code| {
        (0..d).map(|j| ComplexUnit::from_low_bits((code >> (2 * j)) as u64)).collect()
    })
}

/// Mean of `rho(x, w)` with `k = 1` over all `4^d` projection rows.
pub fn exact_rho_expectation(x: &[f64], w: &[f64]) -> Result<f64> {
    let d = check_enumerable(x, w)?;
    let mut values = Vec::with_capacity(1 << (2 * d));
    for row in assignments(d) {
        let a = ProjectionMatrix::from_entries(1, d, &row)?;
        let reduced = a.reduce_many(&[x, w])?;
        values.push(rho(&reduced[0], &reduced[1])?);
    }
    Ok(pairwise_sum(&values) / values.len() as f64)
}

/// Mean of the `r = m = 1` sketch estimate over all `4^d` joint hash
/// assignments, with coordinate `j` streamed at timestep `j + 1`.
pub fn exact_sketch_expectation(x: &[f64], w: &[f64]) -> Result<f64> {
    let d = check_enumerable(x, w)?;
    let config = SketchConfig::new(1, 1, 0, StreamMode::Timestep)?;
    let mut values = Vec::with_capacity(1 << (2 * d));
    for assignment in assignments(d) {
        let mut table = Vec::with_capacity(d + 1);
        table.push(ComplexUnit::ONE);
        table.extend(assignment);
        let mut sx = StreamSketch::with_forced_hashes(config, ForcedHashes::new(vec![table]))?;
        let mut sw = sx.empty_like();
        for t in 0..d {
            sx.update(t as u64 + 1, x[t])?;
            sw.update(t as u64 + 1, w[t])?;
        }
        values.push(StreamSketch::estimate(&sx, &sw)?.value);
    }
    Ok(pairwise_sum(&values) / values.len() as f64)
}
