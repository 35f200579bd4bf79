//! Random projection into `C^k` and the weighted-norm estimators built on it.
//!
//! A [`ProjectionMatrix`] has i.i.d. entries uniform over `{1, -1, i, -i}`.
//! Reducing `x` gives `g(x) = A x / sqrt(k)`. Once a weight vector `w` is known
//! (possibly long after `x` was reduced), `rho(g(x), g(w))` is an unbiased
//! estimate of `||x||_w^2 = sum_j w_j^2 x_j^2`, and by linearity
//! `rho(g(x) - g(y), g(w))` estimates the weighted squared distance.
//!
//! Seeded matrices are never materialized: entry `(i, j)` is bit pair
//! `j mod 32` of output `j / 32` of a SplitMix64 stream keyed by `(seed, i)`,
//! so any entry can be produced in O(1) and rows can be generated in parallel.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum, pairwise_sum_map};
use crate::rng::{mix64, SplitMix64, GOLDEN_GAMMA};
use crate::units::{unit_axpy, Complex, ComplexUnit};

/// Entries per generated 64-bit word.
const ENTRIES_PER_WORD: usize = 32;

const ROW_TAG: u64 = 0x5752_4f57_5f4b_4559;

/// Default universal constant for [`required_k`].
pub const DEFAULT_PLAN_CONSTANT: f64 = 576.0;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Entries {
    /// Entries regenerated on demand from the seed.
    Seeded,
    /// Row-major, 2 bits per entry, 4 entries per byte (low bits first).
    Packed(Vec<u8>),
}

/// A `k x d` matrix over `{1, -1, i, -i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionMatrix {
    k: usize,
    d: usize,
    seed: u64,
    entries: Entries,
}

impl ProjectionMatrix {
    /// Seeded lazy matrix. Entries are a pure function of `(seed, k, d)`.
    pub fn sample(d: usize, k: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension { name: "d" });
        }
        if k == 0 {
            return Err(Error::ZeroDimension { name: "k" });
        }
        Ok(ProjectionMatrix { k, d, seed, entries: Entries::Seeded })
    }

    /// Explicit matrix from row-major entries.
    ///
    /// The provenance tag is a fingerprint of the entries, so two explicit
    /// matrices with equal contents produce interoperable reductions.
    pub fn from_entries(k: usize, d: usize, entries: &[ComplexUnit]) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension { name: "d" });
        }
        if k == 0 {
            return Err(Error::ZeroDimension { name: "k" });
        }
        let n = k.checked_mul(d).ok_or_else(|| Error::invalid("k * d overflows"))?;
        if entries.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: entries.len() });
        }
        let packed = pack(entries);
        let mut tag = mix64((k as u64) ^ mix64(d as u64) ^ 0x4558_504c_4943_4954);
        for chunk in packed.chunks(8) {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            tag = mix64(tag ^ u64::from_le_bytes(word)).wrapping_add(GOLDEN_GAMMA);
        }
        Ok(ProjectionMatrix { k, d, seed: tag, entries: Entries::Packed(packed) })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Seed for sampled matrices, content fingerprint for explicit ones.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.entries, Entries::Packed(_))
    }

    /// Packs every entry into memory (`k * d / 4` bytes). Entries and
    /// provenance are unchanged.
    pub fn materialize(&self) -> ProjectionMatrix {
        match &self.entries {
            Entries::Packed(_) => self.clone(),
            Entries::Seeded => {
                let mut packed = vec![0u8; (self.k * self.d).div_ceil(4)];
                for i in 0..self.k {
                    for j in 0..self.d {
                        let e = i * self.d + j;
                        packed[e / 4] |= self.entry(i, j).exponent() << (2 * (e % 4));
                    }
                }
                ProjectionMatrix { entries: Entries::Packed(packed), ..self.clone() }
            }
        }
    }

    /// The packed entry bytes (row-major, 4 entries per byte).
    pub fn packed_bytes(&self) -> Vec<u8> {
        match self.materialize().entries {
            Entries::Packed(bytes) => bytes,
            Entries::Seeded => unreachable!(),
        }
    }

    #[inline]
    fn row_key(&self, i: usize) -> u64 {
        mix64(self.seed ^ mix64((i as u64) ^ ROW_TAG))
    }

    #[inline]
    fn seeded_word(row_key: u64, block: usize) -> u64 {
        SplitMix64::at(row_key, block as u64)
    }

    /// Entry `A[i, j]` (zero-based). Panics when out of range.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> ComplexUnit {
        assert!(i < self.k && j < self.d, "entry ({i}, {j}) out of range");
        match &self.entries {
            Entries::Seeded => {
                let word = Self::seeded_word(self.row_key(i), j / ENTRIES_PER_WORD);
                ComplexUnit::from_low_bits(word >> (2 * (j % ENTRIES_PER_WORD)))
            }
            Entries::Packed(bytes) => {
                let e = i * self.d + j;
                ComplexUnit::from_low_bits((bytes[e / 4] >> (2 * (e % 4))) as u64)
            }
        }
    }

    /// Calls `f(j, A[i, j])` for every column of row `i`, in order.
    #[inline]
    fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, ComplexUnit)) {
        match &self.entries {
            Entries::Seeded => {
                let key = self.row_key(i);
                for (block, start) in (0..self.d).step_by(ENTRIES_PER_WORD).enumerate() {
                    let mut word = Self::seeded_word(key, block);
                    let end = (start + ENTRIES_PER_WORD).min(self.d);
                    for j in start..end {
                        f(j, ComplexUnit::from_low_bits(word));
                        word >>= 2;
                    }
                }
            }
            Entries::Packed(_) => {
                for j in 0..self.d {
                    f(j, self.entry(i, j));
                }
            }
        }
    }

    /// `g(x)` for a dense `x` of length `d`.
    pub fn reduce(&self, x: &[f64]) -> Result<ReducedVector> {
        Ok(self.reduce_many(&[x])?.pop().expect("one input"))
    }

    /// Reduces several dense vectors in one pass over the matrix.
    pub fn reduce_many(&self, xs: &[&[f64]]) -> Result<Vec<ReducedVector>> {
        for x in xs {
            if x.len() != self.d {
                return Err(Error::DimensionMismatch { expected: self.d, found: x.len() });
            }
        }
        let mut sums = vec![vec![Complex::new(0.0, 0.0); self.k]; xs.len()];
        for i in 0..self.k {
            let mut acc = vec![Complex::new(0.0, 0.0); xs.len()];
            self.for_each_in_row(i, |j, unit| {
                for (a, x) in acc.iter_mut().zip(xs) {
                    *a = unit_axpy(*a, unit, x[j]);
                }
            });
            for (s, a) in sums.iter_mut().zip(acc) {
                s[i] = a;
            }
        }
        Ok(sums.into_iter().map(|s| self.wrap(s)).collect())
    }

    /// `g(x)` for a sparse `x` given as `(index, value)` pairs. Only the listed
    /// columns are touched. Repeated indices accumulate.
    pub fn reduce_sparse(&self, entries: &[(usize, f64)]) -> Result<ReducedVector> {
        if let Some(&(index, _)) = entries.iter().find(|(j, _)| *j >= self.d) {
            return Err(Error::IndexOutOfRange { index, dim: self.d });
        }
        let mut sums = vec![Complex::new(0.0, 0.0); self.k];
        for (i, slot) in sums.iter_mut().enumerate() {
            let mut acc = Complex::new(0.0, 0.0);
            match &self.entries {
                Entries::Seeded => {
                    let key = self.row_key(i);
                    for &(j, v) in entries {
                        let word = Self::seeded_word(key, j / ENTRIES_PER_WORD);
                        let unit = ComplexUnit::from_low_bits(word >> (2 * (j % ENTRIES_PER_WORD)));
                        acc = unit_axpy(acc, unit, v);
                    }
                }
                Entries::Packed(_) => {
                    for &(j, v) in entries {
                        acc = unit_axpy(acc, self.entry(i, j), v);
                    }
                }
            }
            *slot = acc;
        }
        Ok(self.wrap(sums))
    }

    fn wrap(&self, sums: Vec<Complex>) -> ReducedVector {
        ReducedVector { k: self.k, d: self.d, matrix_seed: self.seed, sums }
    }
}

fn pack(entries: &[ComplexUnit]) -> Vec<u8> {
    let mut packed = vec![0u8; entries.len().div_ceil(4)];
    for (e, unit) in entries.iter().enumerate() {
        packed[e / 4] |= unit.exponent() << (2 * (e % 4));
    }
    packed
}

/// Convenience wrapper for [`ProjectionMatrix::sample`].
pub fn sample_matrix(d: usize, k: usize, seed: u64) -> Result<ProjectionMatrix> {
    ProjectionMatrix::sample(d, k, seed)
}

/// Convenience wrapper for [`ProjectionMatrix::reduce`].
pub fn reduce(matrix: &ProjectionMatrix, x: &[f64]) -> Result<ReducedVector> {
    matrix.reduce(x)
}

/// The reduced representation `g(x) = A x / sqrt(k)`.
///
/// The unscaled projection `A x` is what is stored; the `1/sqrt(k)` factor is
/// applied by [`ReducedVector::values`] and folded into the estimators as a
/// single `1/k`, which keeps integer-valued inputs exact through `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedVector {
    k: usize,
    d: usize,
    matrix_seed: u64,
    sums: Vec<Complex>,
}

impl ReducedVector {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix_seed(&self) -> u64 {
        self.matrix_seed
    }

    /// The unscaled projection `A x`.
    pub fn projection(&self) -> &[Complex] {
        &self.sums
    }

    /// `g(x)_i = (A x)_i / sqrt(k)`.
    pub fn values(&self) -> Vec<Complex> {
        let scale = 1.0 / (self.k as f64).sqrt();
        self.sums.iter().map(|z| z * scale).collect()
    }

    fn check_provenance(&self, other: &ReducedVector) -> Result<()> {
        if self.k != other.k || self.d != other.d || self.matrix_seed != other.matrix_seed {
            return Err(Error::ProvenanceMismatch);
        }
        Ok(())
    }

    /// `g(x) - g(y)`, which equals `g(x - y)`.
    pub fn try_sub(&self, other: &ReducedVector) -> Result<ReducedVector> {
        self.check_provenance(other)?;
        let sums = self.sums.iter().zip(&other.sums).map(|(a, b)| a - b).collect();
        Ok(ReducedVector { sums, ..self.clone() })
    }

    pub fn try_add(&self, other: &ReducedVector) -> Result<ReducedVector> {
        self.check_provenance(other)?;
        let sums = self.sums.iter().zip(&other.sums).map(|(a, b)| a + b).collect();
        Ok(ReducedVector { sums, ..self.clone() })
    }

    /// `g(alpha x)`.
    pub fn scale(&self, alpha: f64) -> ReducedVector {
        let sums = self.sums.iter().map(|z| z * alpha).collect();
        ReducedVector { sums, ..self.clone() }
    }

    pub const MAGIC: [u8; 4] = *b"WJLR";
    pub const VERSION: u16 = 1;

    /// Byte length of the binary encoding for a given `k`.
    pub fn encoded_len(k: usize) -> usize {
        4 + 2 + 4 + 4 + 8 + 16 * k
    }

    /// Binary encoding: magic `WJLR`, version `u16`, `k: u32`, `d: u32`,
    /// `matrix_seed: u64`, then `k` pairs `(re, im)` of `f64`, all little
    /// endian. The pairs are the unscaled components of `A x`.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let k = u32::try_from(self.k).map_err(|_| Error::invalid("k exceeds u32"))?;
        let d = u32::try_from(self.d).map_err(|_| Error::invalid("d exceeds u32"))?;
        let mut buf = Vec::with_capacity(Self::encoded_len(self.k));
        buf.extend_from_slice(&Self::MAGIC);
        buf.extend_from_slice(&Self::VERSION.to_le_bytes());
        buf.extend_from_slice(&k.to_le_bytes());
        buf.extend_from_slice(&d.to_le_bytes());
        buf.extend_from_slice(&self.matrix_seed.to_le_bytes());
        for z in &self.sums {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; 22];
        input.read_exact(&mut header).map_err(|_| Error::Format("truncated WJLR header".into()))?;
        if header[..4] != Self::MAGIC {
            return Err(Error::Format("bad magic, expected WJLR".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != Self::VERSION {
            return Err(Error::Format(format!("unsupported WJLR version {version}")));
        }
        let k = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
        let matrix_seed = u64::from_le_bytes(header[14..22].try_into().unwrap());
        if k == 0 || d == 0 {
            return Err(Error::Format("zero dimension in WJLR header".into()));
        }
        let mut body = Vec::new();
        input.read_to_end(&mut body)?;
        if body.len() != 16 * k {
            return Err(Error::Format(format!(
                "WJLR body has {} bytes, expected {}",
                body.len(),
                16 * k
            )));
        }
        let sums = body
            .chunks_exact(16)
            .map(|c| {
                Complex::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Ok(ReducedVector { k, d, matrix_seed, sums })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }

    /// CSV export of `g(x)`: header `index,re,im`, one row per component.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "re", "im"])?;
        for (i, z) in self.values().iter().enumerate() {
            w.write_record([i.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Re of the square of `a * b`, i.e. `Re((a b)^2)`.
#[inline]
fn re_square_of_product(a: Complex, b: Complex) -> f64 {
    let p = a * b;
    p.re * p.re - p.im * p.im
}

/// `rho(x, w) = Re[k * sum_i (g(x)_i g(w)_i)^2]`, an unbiased estimate of
/// `||x||_w^2`. Can be negative.
pub fn rho(gx: &ReducedVector, gw: &ReducedVector) -> Result<f64> {
    gx.check_provenance(gw)?;
    let terms: Vec<f64> =
        gx.sums.iter().zip(&gw.sums).map(|(&a, &b)| re_square_of_product(a, b)).collect();
    Ok(pairwise_sum(&terms) / gx.k as f64)
}

/// `rho(x - y, w)` computed from the reductions alone.
pub fn rho_pairwise(gx: &ReducedVector, gy: &ReducedVector, gw: &ReducedVector) -> Result<f64> {
    gx.check_provenance(gy)?;
    gx.check_provenance(gw)?;
    let terms: Vec<f64> = gx
        .sums
        .iter()
        .zip(&gy.sums)
        .zip(&gw.sums)
        .map(|((&a, &b), &c)| re_square_of_product(a - b, c))
        .collect();
    Ok(pairwise_sum(&terms) / gx.k as f64)
}

/// Inputs to the reduced-dimension planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanParams {
    epsilon: f64,
    delta: f64,
    distortion_threshold: f64,
    c: f64,
}

impl PlanParams {
    /// Uses [`DEFAULT_PLAN_CONSTANT`] for `c`.
    pub fn new(epsilon: f64, delta: f64, distortion_threshold: f64) -> Result<Self> {
        Self::with_constant(epsilon, delta, distortion_threshold, DEFAULT_PLAN_CONSTANT)
    }

    pub fn with_constant(epsilon: f64, delta: f64, distortion_threshold: f64, c: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        if !(distortion_threshold > 0.0 && distortion_threshold.is_finite()) {
            return Err(Error::invalid(format!(
                "distortion threshold must be positive, got {distortion_threshold}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("constant c must be positive, got {c}")));
        }
        Ok(PlanParams { epsilon, delta, distortion_threshold, c })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn distortion_threshold(&self) -> f64 {
        self.distortion_threshold
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// The unrounded bound `c * Delta^4 * ln(1/delta) / epsilon^2`.
    pub fn k_bound(&self) -> f64 {
        self.c * self.distortion_threshold.powi(4) * (-self.delta.ln()) / (self.epsilon * self.epsilon)
    }
}

/// `ceil(c * Delta^4 * ln(1/delta) / epsilon^2)`, at least 1.
pub fn required_k(params: &PlanParams) -> u64 {
    (params.k_bound().ceil() as u64).max(1)
}

/// The 1-norm planner `ceil((||x||_1 ||w||_1 / ||x||_w)^4 ln(2/delta) / epsilon^2)`.
pub fn hoeffding_k(x: &[f64], w: &[f64], epsilon: f64, delta: f64) -> Result<u64> {
    if x.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: w.len() });
    }
    if !(epsilon > 0.0 && epsilon.is_finite() && delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("bad epsilon/delta: {epsilon}, {delta}")));
    }
    let terms: Vec<f64> = x.iter().zip(w).map(|(a, b)| (a * b) * (a * b)).collect();
    let weighted_sq = pairwise_sum(&terms);
    if weighted_sq == 0.0 {
        return Err(Error::ZeroWeightedNorm);
    }
    let l1x = pairwise_sum_map(x, |v| v.abs());
    let l1w = pairwise_sum_map(w, |v| v.abs());
    // (l1x l1w / ||x||_w)^4 = (l1x l1w)^4 / weighted_sq^2
    let ratio4 = (l1x * l1w).powi(4) / (weighted_sq * weighted_sq);
    let bound = ratio4 * (2.0 / delta).ln() / (epsilon * epsilon);
    Ok((bound.ceil() as u64).max(1))
}
