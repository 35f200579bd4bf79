//! Seeded sparse inputs with controlled support overlap.
//!
//! `x` gets `l_x` standard-normal nonzeros rescaled to a target Euclidean
//! norm; `w` gets `l_w` entries equal to 1. Exactly `l_overlap` coordinates
//! are nonzero in both.

use std::io::Write;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum_map;
use crate::oracle::WeightedPair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseSpec {
    pub d: usize,
    pub l_x: usize,
    pub l_w: usize,
    pub l_overlap: usize,
    #[serde(default = "default_norm")]
    pub norm_x: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_norm() -> f64 {
    1.0
}

impl SparseSpec {
    pub fn new(d: usize, l_x: usize, l_w: usize, l_overlap: usize, seed: u64) -> Self {
        SparseSpec { d, l_x, l_w, l_overlap, norm_x: 1.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InfeasibleSpec("d must be positive".into()));
        }
        if self.l_overlap > self.l_x.min(self.l_w) {
            return Err(Error::InfeasibleSpec(format!(
                "overlap {} exceeds min(l_x, l_w) = {}",
                self.l_overlap,
                self.l_x.min(self.l_w)
            )));
        }
        if self.l_x + self.l_w - self.l_overlap > self.d {
            return Err(Error::InfeasibleSpec(format!(
                "supports need {} coordinates but d = {}",
                self.l_x + self.l_w - self.l_overlap,
                self.d
            )));
        }
        if !(self.norm_x > 0.0 && self.norm_x.is_finite()) {
            return Err(Error::InfeasibleSpec(format!("norm_x must be positive, got {}", self.norm_x)));
        }
        Ok(())
    }
}

/// Standard-normal values, never exactly zero, rescaled to Euclidean norm `norm`.
fn gaussian_values(rng: &mut ChaCha8Rng, n: usize, norm: f64) -> Vec<f64> {
    let mut values: Vec<f64> = (0..n)
        .map(|_| loop {
            let v: f64 = StandardNormal.sample(rng);
            if v != 0.0 {
                break v;
            }
        })
        .collect();
    let current = pairwise_sum_map(&values, |v| v * v).sqrt();
    for v in &mut values {
        *v *= norm / current;
    }
    values
}

/// Draws a pair per `spec`. Deterministic in `spec.seed`.
pub fn gen_pair(spec: &SparseSpec) -> Result<WeightedPair> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let union = spec.l_x + spec.l_w - spec.l_overlap;
    // A uniform random subset in random order: the first l_overlap indices are
    // shared, then the x-only indices, then the w-only ones.
    let picked = index::sample(&mut rng, spec.d, union).into_vec();
    let (shared, rest) = picked.split_at(spec.l_overlap);
    let (x_only, w_only) = rest.split_at(spec.l_x - spec.l_overlap);

    let mut x = vec![0.0; spec.d];
    let mut w = vec![0.0; spec.d];
    let values = gaussian_values(&mut rng, spec.l_x, spec.norm_x);
    for (&j, v) in shared.iter().chain(x_only).zip(values) {
        x[j] = v;
    }
    for &j in shared.iter().chain(w_only) {
        w[j] = 1.0;
    }
    WeightedPair::new(x, w)
}

/// Draws a new `x` against a fixed weight vector: `l_overlap` of its nonzeros
/// fall uniformly inside `support(w)`, the rest uniformly outside it.
pub fn gen_x_against(w: &[f64], l_x: usize, l_overlap: usize, norm_x: f64, seed: u64) -> Result<Vec<f64>> {
    let inside: Vec<usize> = (0..w.len()).filter(|&j| w[j] != 0.0).collect();
    let outside: Vec<usize> = (0..w.len()).filter(|&j| w[j] == 0.0).collect();
    if l_overlap > l_x || l_overlap > inside.len() || l_x - l_overlap > outside.len() {
        return Err(Error::InfeasibleSpec(format!(
            "cannot place {l_x} nonzeros with {l_overlap} inside a support of {}",
            inside.len()
        )));
    }
    if !(norm_x > 0.0 && norm_x.is_finite()) {
        return Err(Error::InfeasibleSpec(format!("norm_x must be positive, got {norm_x}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = index::sample(&mut rng, inside.len(), l_overlap);
    let own = index::sample(&mut rng, outside.len(), l_x - l_overlap);
    let mut x = vec![0.0; w.len()];
    let values = gaussian_values(&mut rng, l_x, norm_x);
    let positions = shared.iter().map(|i| inside[i]).chain(own.iter().map(|i| outside[i]));
    for (j, v) in positions.zip(values) {
        x[j] = v;
    }
    Ok(x)
}

/// Sparse CSV: header `index,value`, one row per nonzero.
pub fn write_sparse_csv<W: Write>(out: W, v: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "value"])?;
    for (j, x) in v.iter().enumerate().filter(|(_, x)| **x != 0.0) {
        w.write_record([j.to_string(), x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sparse `index,value` CSV (header required) into `(index, value)`
/// pairs. If `d` is given, indices must be below it.
pub fn read_sparse_csv<R: std::io::Read>(input: R, d: Option<usize>) -> Result<Vec<(usize, f64)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(input);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::Format(format!("expected `index,value`, got {record:?}")));
        }
        let j: usize = record[0].parse().map_err(|_| Error::Format(format!("bad index `{}`", &record[0])))?;
        let v: f64 = record[1].parse().map_err(|_| Error::Format(format!("bad value `{}`", &record[1])))?;
        if let Some(d) = d {
            if j >= d {
                return Err(Error::IndexOutOfRange { index: j, dim: d });
            }
        }
        out.push((j, v));
    }
    Ok(out)
}
