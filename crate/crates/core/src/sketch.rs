//! Streaming sketch for squared weighted norms.
//!
//! Each vector is summarized by an `r x m` array of complex counters,
//! `C[i][j] = sum_t v_t h_ij(t)`, where every cell has its own 8-independent
//! hash `h_ij` into `{1, -1, i, -i}`. Two sketches built from the same
//! [`SketchConfig`] share their hashes, and the estimate of `||x||_w^2` is
//!
//! ```text
//! median_i Re[ (1/m) sum_j (C_x[i][j] C_w[i][j])^2 ]
//! ```
//!
//! Counters are linear in the stream, so sketches of disjoint shards can be
//! merged. The estimate itself is not linear in `x`: there is no pairwise
//! distance query on sketches.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hashing::{HashPolynomial, PowerTable};
use crate::numeric::{median, pairwise_sum};
use crate::rng::mix_cell;
use crate::units::{unit_axpy, Complex, ComplexUnit};

/// How the `t` passed to [`StreamSketch::update`] is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamMode {
    /// `t` is the arrival position of the value.
    Timestep,
    /// `t` is a coordinate index and the value an increment to it.
    Turnstile,
}

impl StreamMode {
    fn to_byte(self) -> u8 {
        match self {
            StreamMode::Timestep => 0,
            StreamMode::Turnstile => 1,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(StreamMode::Timestep),
            1 => Ok(StreamMode::Turnstile),
            other => Err(Error::Format(format!("unknown stream mode byte {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SketchConfig {
    r: usize,
    m: usize,
    seed: u64,
    mode: StreamMode,
}

impl SketchConfig {
    pub fn new(r: usize, m: usize, seed: u64, mode: StreamMode) -> Result<Self> {
        if r == 0 {
            return Err(Error::ZeroDimension { name: "r" });
        }
        if m == 0 {
            return Err(Error::ZeroDimension { name: "m" });
        }
        if u32::try_from(r).is_err() || u32::try_from(m).is_err() {
            return Err(Error::invalid("r and m must fit in 32 bits"));
        }
        Ok(SketchConfig { r, m, seed, mode })
    }

    pub fn from_dims(dims: SketchDims, seed: u64, mode: StreamMode) -> Result<Self> {
        Self::new(dims.r, dims.m, seed, mode)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> StreamMode {
        self.mode
    }

    pub fn cells(&self) -> usize {
        self.r * self.m
    }
}

/// Sketch dimensions produced by [`plan_sketch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SketchDims {
    pub r: usize,
    pub m: usize,
}

/// `m = ceil(136 Delta^4 / epsilon^2) + 1` and `r` the smallest odd integer
/// strictly greater than `12 ln(1/delta)`.
pub fn plan_sketch(epsilon: f64, delta: f64, distortion: f64) -> Result<SketchDims> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(distortion >= 1.0 && distortion.is_finite()) {
        return Err(Error::invalid(format!("distortion must be >= 1, got {distortion}")));
    }
    let m_bound = 136.0 * distortion.powi(4) / (epsilon * epsilon);
    let m = m_bound.ceil() as usize + 1;
    let r_bound = 12.0 * (1.0 / delta).ln();
    let mut r = r_bound.floor() as usize + 1;
    if r.is_multiple_of(2) {
        r += 1;
    }
    Ok(SketchDims { r, m })
}

/// The per-cell hash polynomials derived from a config seed:
/// cell `(i, j)` uses `HashPolynomial::new(mix_cell(seed, i, j))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFamily {
    r: usize,
    m: usize,
    polys: Vec<HashPolynomial>,
}

impl HashFamily {
    pub fn derive(config: &SketchConfig) -> Self {
        let mut polys = Vec::with_capacity(config.cells());
        for i in 0..config.r {
            for j in 0..config.m {
                polys.push(HashPolynomial::new(mix_cell(config.seed, i as u64, j as u64)));
            }
        }
        HashFamily { r: config.r, m: config.m, polys }
    }

    pub fn polynomials(&self) -> &[HashPolynomial] {
        &self.polys
    }
}

/// Explicit per-cell hash values, indexed by `t`. Lets exact-expectation
/// oracles enumerate every joint hash outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForcedHashes {
    tables: Vec<Vec<ComplexUnit>>,
}

impl ForcedHashes {
    /// One table per cell in row-major order; `tables[c][t]` is `h_c(t)`.
    pub fn new(tables: Vec<Vec<ComplexUnit>>) -> Self {
        ForcedHashes { tables }
    }
}

#[derive(Debug, Clone)]
enum CellHashes {
    Polynomial(Arc<HashFamily>),
    Forced(Arc<ForcedHashes>),
}

impl CellHashes {
    fn same_as(&self, other: &CellHashes) -> bool {
        match (self, other) {
            (CellHashes::Polynomial(a), CellHashes::Polynomial(b)) => Arc::ptr_eq(a, b) || a == b,
            (CellHashes::Forced(a), CellHashes::Forced(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

/// Point estimate of `||x||_w^2` from two sketches.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WeightedNormEstimate {
    pub value: f64,
    pub r_used: usize,
    pub m_used: usize,
}

impl WeightedNormEstimate {
    /// The estimator is not a norm and may fall below zero; this is reported,
    /// never clamped.
    pub fn is_negative(&self) -> bool {
        self.value < 0.0
    }
}

#[derive(Debug, Clone)]
pub struct StreamSketch {
    config: SketchConfig,
    counters: Vec<Complex>,
    hashes: CellHashes,
    items_seen: u64,
}

impl StreamSketch {
    /// Zeroed sketch with hashes derived from `config.seed`.
    pub fn new(config: SketchConfig) -> Self {
        Self::with_family(config, Arc::new(HashFamily::derive(&config)))
            .expect("derived family matches its config")
    }

    /// Zeroed sketch reusing an existing hash family (which must have been
    /// derived from an identical config).
    pub fn with_family(config: SketchConfig, family: Arc<HashFamily>) -> Result<Self> {
        if family.r != config.r || family.m != config.m {
            return Err(Error::ConfigMismatch);
        }
        Ok(StreamSketch {
            config,
            counters: vec![Complex::new(0.0, 0.0); config.cells()],
            hashes: CellHashes::Polynomial(family),
            items_seen: 0,
        })
    }

    /// Zeroed sketch whose cell hashes are read from explicit tables.
    pub fn with_forced_hashes(config: SketchConfig, forced: ForcedHashes) -> Result<Self> {
        if forced.tables.len() != config.cells() {
            return Err(Error::DimensionMismatch {
                expected: config.cells(),
                found: forced.tables.len(),
            });
        }
        Ok(StreamSketch {
            config,
            counters: vec![Complex::new(0.0, 0.0); config.cells()],
            hashes: CellHashes::Forced(Arc::new(forced)),
            items_seen: 0,
        })
    }

    /// A zeroed sketch sharing this sketch's config and hashes.
    pub fn empty_like(&self) -> Self {
        StreamSketch {
            config: self.config,
            counters: vec![Complex::new(0.0, 0.0); self.config.cells()],
            hashes: self.hashes.clone(),
            items_seen: 0,
        }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn counters(&self) -> &[Complex] {
        &self.counters
    }

    pub fn items_seen(&self) -> u64 {
        self.items_seen
    }

    /// The hash family, or `None` for sketches built on forced tables.
    pub fn family(&self) -> Option<&Arc<HashFamily>> {
        match &self.hashes {
            CellHashes::Polynomial(f) => Some(f),
            CellHashes::Forced(_) => None,
        }
    }

    /// `C[i][j] += v * h_ij(t)` for every cell.
    pub fn update(&mut self, t: u64, v: f64) -> Result<()> {
        match &self.hashes {
            CellHashes::Polynomial(family) => {
                let powers = PowerTable::new(t)?;
                for (c, h) in self.counters.iter_mut().zip(&family.polys) {
                    let unit = ComplexUnit::from_low_bits(h.eval_with_powers(&powers));
                    *c = unit_axpy(*c, unit, v);
                }
            }
            CellHashes::Forced(forced) => {
                let t_idx = usize::try_from(t).map_err(|_| Error::IndexOutOfRange {
                    index: usize::MAX,
                    dim: 0,
                })?;
                for (c, table) in self.counters.iter_mut().zip(&forced.tables) {
                    let unit = *table
                        .get(t_idx)
                        .ok_or(Error::IndexOutOfRange { index: t_idx, dim: table.len() })?;
                    *c = unit_axpy(*c, unit, v);
                }
            }
        }
        self.items_seen += 1;
        Ok(())
    }

    /// Feeds a dense vector as a stream: coordinate `j` arrives at `t = j + 1`
    /// (timestep) or as index `j` (turnstile). Zero coordinates are skipped.
    pub fn update_dense(&mut self, values: &[f64]) -> Result<()> {
        for (j, &v) in values.iter().enumerate() {
            if v != 0.0 {
                self.update(self.position(j), v)?;
            }
        }
        Ok(())
    }

    /// Feeds `(index, value)` pairs with the same position convention as
    /// [`StreamSketch::update_dense`].
    pub fn update_sparse(&mut self, entries: &[(usize, f64)]) -> Result<()> {
        for &(j, v) in entries {
            self.update(self.position(j), v)?;
        }
        Ok(())
    }

    fn position(&self, j: usize) -> u64 {
        match self.config.mode {
            StreamMode::Timestep => j as u64 + 1,
            StreamMode::Turnstile => j as u64,
        }
    }

    fn check_compatible(&self, other: &StreamSketch) -> Result<()> {
        if self.config != other.config || !self.hashes.same_as(&other.hashes) {
            return Err(Error::ConfigMismatch);
        }
        Ok(())
    }

    /// Median over rows of `Re[(1/m) sum_j (C_x C_w)^2]`.
    pub fn estimate(sx: &StreamSketch, sw: &StreamSketch) -> Result<WeightedNormEstimate> {
        sx.check_compatible(sw)?;
        let m = sx.config.m;
        let mut row_means: Vec<f64> = sx
            .counters
            .chunks_exact(m)
            .zip(sw.counters.chunks_exact(m))
            .map(|(cx, cw)| {
                let terms: Vec<f64> = cx
                    .iter()
                    .zip(cw)
                    .map(|(a, b)| {
                        let p = a * b;
                        p.re * p.re - p.im * p.im
                    })
                    .collect();
                pairwise_sum(&terms) / m as f64
            })
            .collect();
        Ok(WeightedNormEstimate {
            value: median(&mut row_means),
            r_used: sx.config.r,
            m_used: m,
        })
    }

    /// The per-cell estimates `(C_x[c] C_w[c])^2` as complex numbers.
    pub fn cell_estimates(sx: &StreamSketch, sw: &StreamSketch) -> Result<Vec<Complex>> {
        sx.check_compatible(sw)?;
        Ok(sx.counters.iter().zip(&sw.counters).map(|(a, b)| (a * b) * (a * b)).collect())
    }

    /// Elementwise counter sum of two sketches over the same hashes.
    pub fn merge(a: &StreamSketch, b: &StreamSketch) -> Result<StreamSketch> {
        a.check_compatible(b)?;
        let counters = a.counters.iter().zip(&b.counters).map(|(x, y)| x + y).collect();
        Ok(StreamSketch {
            config: a.config,
            counters,
            hashes: a.hashes.clone(),
            items_seen: a.items_seen + b.items_seen,
        })
    }

    pub const MAGIC: [u8; 4] = *b"WJLS";
    pub const VERSION: u16 = 1;
    const HEADER_LEN: usize = 4 + 2 + 1 + 4 + 4 + 8 + 8;

    /// Exact byte length of the encoding of an `r x m` sketch.
    pub fn encoded_len(r: usize, m: usize) -> usize {
        Self::HEADER_LEN + r * m * (16 + HashPolynomial::ENCODED_LEN)
    }

    /// Magic `WJLS`, version `u16`, mode byte, `r: u32`, `m: u32`, `seed: u64`,
    /// `items_seen: u64`, `r*m` counters as `(re, im)` `f64` pairs, then `r*m`
    /// `WJLH` hash records. Little endian throughout.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let family = match &self.hashes {
            CellHashes::Polynomial(f) => f,
            CellHashes::Forced(_) => {
                return Err(Error::invalid("sketches with forced hash tables cannot be serialized"))
            }
        };
        let mut buf = Vec::with_capacity(Self::encoded_len(self.config.r, self.config.m));
        buf.extend_from_slice(&Self::MAGIC);
        buf.extend_from_slice(&Self::VERSION.to_le_bytes());
        buf.push(self.config.mode.to_byte());
        buf.extend_from_slice(&(self.config.r as u32).to_le_bytes());
        buf.extend_from_slice(&(self.config.m as u32).to_le_bytes());
        buf.extend_from_slice(&self.config.seed.to_le_bytes());
        buf.extend_from_slice(&self.items_seen.to_le_bytes());
        for z in &self.counters {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        for h in &family.polys {
            h.write_to(&mut buf)?;
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; Self::HEADER_LEN];
        input.read_exact(&mut header).map_err(|_| Error::Format("truncated WJLS header".into()))?;
        if header[..4] != Self::MAGIC {
            return Err(Error::Format("bad magic, expected WJLS".into()));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != Self::VERSION {
            return Err(Error::Format(format!("unsupported WJLS version {version}")));
        }
        let mode = StreamMode::from_byte(header[6])?;
        let r = u32::from_le_bytes(header[7..11].try_into().unwrap()) as usize;
        let m = u32::from_le_bytes(header[11..15].try_into().unwrap()) as usize;
        let seed = u64::from_le_bytes(header[15..23].try_into().unwrap());
        let items_seen = u64::from_le_bytes(header[23..31].try_into().unwrap());
        let config = SketchConfig::new(r, m, seed, mode)
            .map_err(|e| Error::Format(format!("bad WJLS config: {e}")))?;
        let cells = config.cells();
        let mut raw = vec![0u8; 16 * cells];
        input.read_exact(&mut raw).map_err(|_| Error::Format("truncated WJLS counters".into()))?;
        let counters = raw
            .chunks_exact(16)
            .map(|c| {
                Complex::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        let mut polys = Vec::with_capacity(cells);
        for _ in 0..cells {
            polys.push(HashPolynomial::read_from(&mut input)?);
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after WJLS payload".into()));
        }
        Ok(StreamSketch {
            config,
            counters,
            hashes: CellHashes::Polynomial(Arc::new(HashFamily { r, m, polys })),
            items_seen,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

pub fn sketch_new(config: SketchConfig) -> StreamSketch {
    StreamSketch::new(config)
}

pub fn sketch_update(sketch: &mut StreamSketch, t: u64, v: f64) -> Result<()> {
    sketch.update(t, v)
}

pub fn sketch_estimate(sx: &StreamSketch, sw: &StreamSketch) -> Result<WeightedNormEstimate> {
    StreamSketch::estimate(sx, sw)
}

pub fn sketch_merge(a: &StreamSketch, b: &StreamSketch) -> Result<StreamSketch> {
    StreamSketch::merge(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn cfg(r: usize, m: usize, seed: u64, mode: StreamMode) -> SketchConfig {
        SketchConfig::new(r, m, seed, mode).unwrap()
    }

    #[test]
    fn construction() {
        let s = sketch_new(cfg(3, 2, 9, StreamMode::Timestep));
        assert_eq!(s.counters().len(), 6);
        assert!(s.counters().iter().all(|c| *c == Complex::new(0.0, 0.0)));
        let polys: HashSet<_> = s.family().unwrap().polynomials().iter().cloned().collect();
        assert_eq!(polys.len(), 6);
        assert_eq!(s.items_seen(), 0);
    }

    #[test]
    fn config_validation() {
        assert!(SketchConfig::new(0, 1, 0, StreamMode::Timestep).is_err());
        assert!(SketchConfig::new(1, 0, 0, StreamMode::Timestep).is_err());
    }

    #[test]
    fn hashes_deterministic_in_seed() {
        let a = sketch_new(cfg(3, 4, 100, StreamMode::Turnstile));
        let b = sketch_new(cfg(3, 4, 100, StreamMode::Turnstile));
        let c = sketch_new(cfg(3, 4, 101, StreamMode::Turnstile));
        assert_eq!(a.family().unwrap().polynomials(), b.family().unwrap().polynomials());
        assert_ne!(a.family().unwrap().polynomials(), c.family().unwrap().polynomials());
    }

    #[test]
    fn single_update_with_constant_hash() {
        let config = cfg(1, 1, 0, StreamMode::Timestep);
        let forced = ForcedHashes::new(vec![vec![ComplexUnit::MINUS_I; 4]]);
        let mut s = StreamSketch::with_forced_hashes(config, forced).unwrap();
        s.update(1, 5.0).unwrap();
        assert_eq!(s.counters()[0], Complex::new(0.0, -5.0));
        assert_eq!(s.items_seen(), 1);
    }

    #[test]
    fn turnstile_updates_accumulate() {
        let config = cfg(3, 5, 42, StreamMode::Turnstile);
        let mut split = sketch_new(config);
        split.update(3, 2.0).unwrap();
        split.update(3, 3.0).unwrap();
        let mut single = split.empty_like();
        single.update(3, 5.0).unwrap();
        assert_eq!(split.counters(), single.counters());
    }

    #[test]
    fn update_matches_horner_evaluation() {
        let config = cfg(2, 3, 5, StreamMode::Timestep);
        let mut s = sketch_new(config);
        s.update(12345, 1.5).unwrap();
        for (c, h) in s.counters().iter().zip(s.family().unwrap().polynomials()) {
            let expected = unit_axpy(Complex::new(0.0, 0.0), h.eval(12345).unwrap(), 1.5);
            assert_eq!(*c, expected);
        }
    }

    #[test]
    fn interleaved_shards_sum_to_whole_stream() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let config = cfg(3, 7, 8, StreamMode::Timestep);
        let whole_base = sketch_new(config);
        let mut whole = whole_base.empty_like();
        let mut even = whole_base.empty_like();
        let mut odd = whole_base.empty_like();
        for t in 1..=40u64 {
            let v = rng.random_range(-4i32..5) as f64;
            whole.update(t, v).unwrap();
            if t % 2 == 0 { even.update(t, v).unwrap() } else { odd.update(t, v).unwrap() }
        }
        let merged = sketch_merge(&even, &odd).unwrap();
        assert_eq!(merged.counters(), whole.counters());
        assert_eq!(merged.items_seen(), 40);
    }

    #[test]
    fn merge_identity_and_commutativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut a = sketch_new(cfg(2, 3, 1, StreamMode::Turnstile));
        let mut b = a.empty_like();
        for _ in 0..10 {
            a.update(rng.random_range(0..50), rng.random_range(-1.0..1.0)).unwrap();
            b.update(rng.random_range(0..50), rng.random_range(-1.0..1.0)).unwrap();
        }
        let zero = a.empty_like();
        assert_eq!(sketch_merge(&a, &zero).unwrap().counters(), a.counters());
        let ab = sketch_merge(&a, &b).unwrap();
        let ba = sketch_merge(&b, &a).unwrap();
        assert_eq!(ab.counters(), ba.counters());
        let other = sketch_new(cfg(2, 3, 2, StreamMode::Turnstile));
        assert!(matches!(sketch_merge(&a, &other), Err(Error::ConfigMismatch)));
    }

    #[test]
    fn merged_turnstile_halves_equal_full_stream() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let updates: Vec<(u64, f64)> =
            (0..30).map(|_| (rng.random_range(0..20), rng.random_range(-8i32..8) as f64)).collect();
        let base = sketch_new(cfg(3, 3, 77, StreamMode::Turnstile));
        let mut full = base.empty_like();
        let mut first = base.empty_like();
        let mut second = base.empty_like();
        for (n, &(i, v)) in updates.iter().enumerate() {
            full.update(i, v).unwrap();
            if n < 15 { first.update(i, v).unwrap() } else { second.update(i, v).unwrap() }
        }
        assert_eq!(sketch_merge(&first, &second).unwrap().counters(), full.counters());
    }

    #[test]
    fn single_coordinate_estimate_is_exact() {
        for seed in 0..5 {
            for (r, m) in [(1, 1), (3, 4), (5, 2)] {
                let base = sketch_new(cfg(r, m, seed, StreamMode::Timestep));
                let mut sx = base.empty_like();
                let mut sw = base.empty_like();
                sx.update(1, 5.0).unwrap();
                sw.update(1, 2.0).unwrap();
                let est = sketch_estimate(&sx, &sw).unwrap();
                assert_eq!(est.value, 100.0);
                assert_eq!((est.r_used, est.m_used), (r, m));
            }
        }
    }

    #[test]
    fn empty_x_gives_zero() {
        let base = sketch_new(cfg(3, 3, 1, StreamMode::Timestep));
        let sx = base.empty_like();
        let mut sw = base.empty_like();
        sw.update_dense(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(sketch_estimate(&sx, &sw).unwrap().value, 0.0);
    }

    #[test]
    fn enumerated_mean_over_forced_hashes() {
        // All 16 joint outcomes of (h(1), h(2)) for x = w = (1, 1).
        let config = cfg(1, 1, 0, StreamMode::Timestep);
        let mut total = 0.0;
        for a in ComplexUnit::ALL {
            for b in ComplexUnit::ALL {
                let forced = ForcedHashes::new(vec![vec![ComplexUnit::ONE, a, b]]);
                let mut sx = StreamSketch::with_forced_hashes(config, forced).unwrap();
                let mut sw = sx.empty_like();
                sx.update_dense(&[1.0, 1.0]).unwrap();
                sw.update_dense(&[1.0, 1.0]).unwrap();
                total += sketch_estimate(&sx, &sw).unwrap().value;
            }
        }
        assert_eq!(total / 16.0, 2.0);
    }

    #[test]
    fn estimate_requires_matching_config_and_hashes() {
        let a = sketch_new(cfg(1, 2, 1, StreamMode::Timestep));
        let b = sketch_new(cfg(1, 2, 2, StreamMode::Timestep));
        let c = sketch_new(cfg(1, 2, 1, StreamMode::Turnstile));
        assert!(matches!(sketch_estimate(&a, &b), Err(Error::ConfigMismatch)));
        assert!(matches!(sketch_estimate(&a, &c), Err(Error::ConfigMismatch)));
        let forced = StreamSketch::with_forced_hashes(
            *a.config(),
            ForcedHashes::new(vec![vec![ComplexUnit::ONE]; 2]),
        )
        .unwrap();
        assert!(matches!(sketch_estimate(&a, &forced), Err(Error::ConfigMismatch)));
        // Independently constructed sketches with the same config agree.
        let a2 = sketch_new(cfg(1, 2, 1, StreamMode::Timestep));
        assert!(sketch_estimate(&a, &a2).is_ok());
    }

    #[test]
    fn even_r_uses_midpoint_median() {
        let config = cfg(2, 1, 0, StreamMode::Timestep);
        let forced = ForcedHashes::new(vec![
            vec![ComplexUnit::ONE, ComplexUnit::ONE, ComplexUnit::ONE],
            vec![ComplexUnit::ONE, ComplexUnit::ONE, ComplexUnit::MINUS_ONE],
        ]);
        let mut sx = StreamSketch::with_forced_hashes(config, forced).unwrap();
        let mut sw = sx.empty_like();
        sx.update_dense(&[1.0, 1.0]).unwrap();
        sw.update_dense(&[1.0, 1.0]).unwrap();
        // Row 0: (2 * 2)^2 = 16. Row 1: (0 * 0)^2 = 0.
        assert_eq!(sketch_estimate(&sx, &sw).unwrap().value, 8.0);
    }

    #[test]
    fn negative_estimates_are_not_clamped() {
        let config = cfg(1, 1, 0, StreamMode::Timestep);
        let forced = ForcedHashes::new(vec![vec![ComplexUnit::ONE, ComplexUnit::ONE, ComplexUnit::I]]);
        let mut sx = StreamSketch::with_forced_hashes(config, forced).unwrap();
        let mut sw = sx.empty_like();
        sx.update_dense(&[1.0, 1.0]).unwrap();
        sw.update_dense(&[1.0, 1.0]).unwrap();
        // C = 1 + i, (C * C)^2 = (2i)^2 = -4.
        let est = sketch_estimate(&sx, &sw).unwrap();
        assert_eq!(est.value, -4.0);
        assert!(est.is_negative());
    }

    #[test]
    fn plan_examples() {
        let inv_e = (-1.0f64).exp();
        assert_eq!(plan_sketch(1.0, inv_e, 1.0).unwrap(), SketchDims { r: 13, m: 137 });
        assert_eq!(plan_sketch(0.5, inv_e, 1.0).unwrap().m, 545);
        assert!(plan_sketch(0.0, 0.1, 1.0).is_err());
        assert!(plan_sketch(0.1, 1.0, 1.0).is_err());
        assert!(plan_sketch(0.1, 0.1, 0.5).is_err());
    }

    #[test]
    fn plan_scales_with_fourth_power_of_distortion() {
        for eps in [0.2, 0.5, 1.0] {
            for delta in [0.01, 0.1] {
                let one = plan_sketch(eps, delta, 1.0).unwrap();
                let two = plan_sketch(eps, delta, 2.0).unwrap();
                assert_eq!(two.m - 1, 16 * (136.0 / (eps * eps)).ceil() as usize);
                assert!(two.m > 15 * one.m);
                assert_eq!(one.r, two.r);
                assert_eq!(one.r % 2, 1);
                assert!(one.r as f64 > 12.0 * (1.0 / delta).ln());
            }
        }
    }

    #[test]
    fn serialized_size_and_round_trip() {
        let mut s = sketch_new(cfg(3, 5, 11, StreamMode::Turnstile));
        s.update_sparse(&[(0, 1.0), (9, -2.5), (4, 0.25)]).unwrap();
        let bytes = s.to_bytes().unwrap();
        assert_eq!(bytes.len(), StreamSketch::encoded_len(3, 5));
        assert_eq!(bytes.len(), 31 + 15 * (16 + 68));
        assert_eq!(&bytes[..4], b"WJLS");
        assert_eq!(bytes[6], 1);
        let back = StreamSketch::from_bytes(&bytes).unwrap();
        assert_eq!(back.config(), s.config());
        assert_eq!(back.counters(), s.counters());
        assert_eq!(back.items_seen(), 3);
        assert_eq!(back.family().unwrap().polynomials(), s.family().unwrap().polynomials());
        // Deserialized sketches interoperate with freshly built ones.
        let mut sw = sketch_new(*s.config());
        sw.update(9, 1.0).unwrap();
        assert_eq!(sketch_estimate(&back, &sw).unwrap(), sketch_estimate(&s, &sw).unwrap());

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(StreamSketch::from_bytes(&trailing).is_err());
        assert!(StreamSketch::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn memory_independent_of_stream_dimension() {
        let config = cfg(3, 4, 2, StreamMode::Timestep);
        let mut short = sketch_new(config);
        short.update_dense(&[1.0; 10]).unwrap();
        let mut long = short.empty_like();
        long.update_dense(&vec![1.0; 10_000]).unwrap();
        assert_eq!(short.to_bytes().unwrap().len(), long.to_bytes().unwrap().len());
    }
}
