use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use super::records::{fmt_float, Table};
use crate::error::Result;
use crate::hashing::{HashPolynomial, MERSENNE_61};
use crate::oracle::{exact_rho_expectation, exact_sketch_expectation, WeightedPair};
use crate::projection::{rho, rho_pairwise, ProjectionMatrix, ReducedVector};
use crate::sketch::{SketchConfig, StreamMode, StreamSketch};
use crate::units::{unit_axpy, ComplexUnit};

/// Outcome of one equivalence check.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &'static str, errors: &[f64], tolerance: f64) -> Self {
        let max_error = errors.iter().copied().fold(0.0, f64::max);
        let passed = errors.iter().all(|e| *e <= tolerance);
        CheckResult { name, cases: errors.len(), max_error, tolerance, passed }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub metadata: Value,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> Table {
        let mut table = Table::new(&["check", "cases", "max_error", "tolerance", "passed"]);
        for c in &self.checks {
            table.push(vec![
                c.name.to_string(),
                c.cases.to_string(),
                fmt_float(c.max_error),
                fmt_float(c.tolerance),
                c.passed.to_string(),
            ]);
        }
        table
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join("verify.csv");
        self.table().write_file(&path, &self.metadata)?;
        Ok(path)
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn random_pair(rng: &mut ChaCha8Rng, d: usize) -> WeightedPair {
    loop {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..2.0)).collect();
        let pair = WeightedPair::new(x, w).expect("valid pair");
        if pair.weighted_sq_norm() > 0.0 {
            return pair;
        }
    }
}

/// `(1/k) sum |g_i(x)|^2 |g_i(w)|^2`: the magnitude of the terms of `rho`,
/// which bounds its rounding error.
fn rho_scale(gx: &ReducedVector, gw: &ReducedVector) -> f64 {
    let k = gx.k() as f64;
    gx.projection().iter().zip(gw.projection()).map(|(a, b)| a.norm_sqr() * b.norm_sqr()).sum::<f64>() / k
}

fn check_d1_exact(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut errors = Vec::new();
    for _ in 0..100 {
        let x = rng.random_range(-10.0..10.0);
        let w = rng.random_range(0.01..10.0);
        let k = rng.random_range(1..=256);
        let a = ProjectionMatrix::sample(1, k, rng.random())?;
        let est = rho(&a.reduce(&[x])?, &a.reduce(&[w])?)?;
        errors.push(rel_err(est, x * x * w * w));
    }
    Ok(CheckResult::new("d1_exact", &errors, 1e-12))
}

fn check_rho_expectation(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut errors = Vec::new();
    for d in 1..=6 {
        for _ in 0..25 {
            let p = random_pair(rng, d);
            errors.push(rel_err(exact_rho_expectation(p.x(), p.w())?, p.weighted_sq_norm()));
        }
    }
    Ok(CheckResult::new("rho_expectation", &errors, 1e-9))
}

fn check_sketch_expectation(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut errors = Vec::new();
    for d in 1..=6 {
        for _ in 0..25 {
            let p = random_pair(rng, d);
            errors.push(rel_err(exact_sketch_expectation(p.x(), p.w())?, p.weighted_sq_norm()));
        }
    }
    Ok(CheckResult::new("sketch_expectation", &errors, 1e-9))
}

fn check_pairwise_linearity(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut errors = Vec::new();
    for _ in 0..100 {
        let d = rng.random_range(1..=40);
        let k = rng.random_range(1..=64);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..2.0)).collect();
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let a = ProjectionMatrix::sample(d, k, rng.random())?;
        let g = a.reduce_many(&[&x, &y, &w, &diff])?;
        let pairwise = rho_pairwise(&g[0], &g[1], &g[2])?;
        let direct = rho(&g[3], &g[2])?;
        let scale = rho_scale(&g[3], &g[2]).max(f64::MIN_POSITIVE);
        errors.push((pairwise - direct).abs() / scale);
    }
    Ok(CheckResult::new("pairwise_linearity", &errors, 1e-12))
}

fn check_unit_axpy() -> CheckResult {
    let mut errors = Vec::new();
    for u in ComplexUnit::ALL {
        for s in [0.0, 1.0, -2.5, 1e-300, 3.75e12] {
            let acc = crate::units::Complex::new(0.25, -1.5);
            let fast = unit_axpy(acc, u, s);
            let slow = acc + u.to_complex() * s;
            errors.push((fast - slow).norm());
        }
    }
    CheckResult::new("unit_axpy", &errors, 0.0)
}

fn check_hash_field(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let p = MERSENNE_61 as u128;
    let mut errors = Vec::new();
    for _ in 0..200 {
        let h = HashPolynomial::new(rng.random());
        for _ in 0..10 {
            let t = rng.random_range(0..MERSENNE_61);
            let mut power = 1u128;
            let mut reference = 0u128;
            for &a in h.coefficients() {
                reference = (reference + a as u128 * power) % p;
                power = power * t as u128 % p;
            }
            errors.push(if h.eval_field(t)? as u128 == reference { 0.0 } else { 1.0 });
        }
    }
    Ok(CheckResult::new("hash_field", &errors, 0.0))
}

/// Sketch counters against a direct evaluation of every cell's polynomial.
fn check_sketch_counters(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut errors = Vec::new();
    for _ in 0..10 {
        let config = SketchConfig::new(3, 5, rng.random(), StreamMode::Turnstile)?;
        let mut sketch = StreamSketch::new(config);
        let updates: Vec<(u64, f64)> = (0..20).map(|_| (rng.random_range(0..1000), rng.random_range(-1.0..1.0))).collect();
        for &(t, v) in &updates {
            sketch.update(t, v)?;
        }
        let family = sketch.family().expect("polynomial hashes").clone();
        for (c, h) in sketch.counters().iter().zip(family.polynomials()) {
            let mut direct = crate::units::Complex::new(0.0, 0.0);
            for &(t, v) in &updates {
                direct = unit_axpy(direct, h.eval(t)?, v);
            }
            errors.push((c - direct).norm());
        }
    }
    Ok(CheckResult::new("sketch_counters", &errors, 0.0))
}

fn check_sketch_merge(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut errors = Vec::new();
    for _ in 0..10 {
        let d = 30;
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let mut sa = StreamSketch::new(SketchConfig::new(3, 4, rng.random(), StreamMode::Turnstile)?);
        let mut sb = sa.empty_like();
        let mut ss = sa.empty_like();
        sa.update_dense(&a)?;
        sb.update_dense(&b)?;
        ss.update_dense(&sum)?;
        let merged = StreamSketch::merge(&sa, &sb)?;
        for (m, s) in merged.counters().iter().zip(ss.counters()) {
            errors.push((m - s).norm());
        }
    }
    Ok(CheckResult::new("sketch_merge", &errors, 1e-12))
}

fn check_round_trips(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut errors = Vec::new();
    for _ in 0..10 {
        let x: Vec<f64> = (0..17).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = ProjectionMatrix::sample(17, 9, rng.random())?.reduce(&x)?;
        errors.push(if ReducedVector::from_bytes(&g.to_bytes())? == g { 0.0 } else { 1.0 });

        let h = HashPolynomial::new(rng.random());
        let mut buf = Vec::new();
        h.write_to(&mut buf)?;
        errors.push(if HashPolynomial::read_from(&buf[..])? == h { 0.0 } else { 1.0 });

        let mut s = StreamSketch::new(SketchConfig::new(3, 2, rng.random(), StreamMode::Timestep)?);
        s.update_dense(&x)?;
        let back = StreamSketch::from_bytes(&s.to_bytes()?)?;
        let same = back.config() == s.config() && back.counters() == s.counters();
        errors.push(if same { 0.0 } else { 1.0 });
    }
    Ok(CheckResult::new("binary_round_trip", &errors, 0.0))
}

/// Runs every implementation-versus-oracle check with inputs drawn from
/// `cfg.master_seed`.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    let checks = vec![
        check_d1_exact(&mut rng)?,
        check_rho_expectation(&mut rng)?,
        check_sketch_expectation(&mut rng)?,
        check_pairwise_linearity(&mut rng)?,
        check_unit_axpy(),
        check_hash_field(&mut rng)?,
        check_sketch_counters(&mut rng)?,
        check_sketch_merge(&mut rng)?,
        check_round_trips(&mut rng)?,
    ];
    let metadata = json!({
        "experiment": "verify",
        "version": crate::VERSION,
        "config": cfg.echo(),
        "true_value": Value::Null,
    });
    Ok(VerifyReport { checks, metadata })
}
