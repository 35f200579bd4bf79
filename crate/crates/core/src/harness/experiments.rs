use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{Experiment, ExperimentConfig};
use super::records::{fmt_float, records_table, summary_table, ArmSummary, ExperimentReport, Table, TrialRecord};
use crate::error::{Error, Result};
use crate::generators::{gen_pair, gen_x_against, SparseSpec};
use crate::numeric::{mean_std, pairwise_sum};
use crate::oracle::WeightedPair;
use crate::projection::{rho, ProjectionMatrix};
use crate::rng::derive_seed;
use crate::sketch::{plan_sketch, SketchConfig, StreamMode, StreamSketch};

/// Seed streams. Each experiment draws its matrices from its own stream; the
/// pair stream is shared so that `fig1` and the `l = 10` arm of `fig4` use
/// the same input pair.
pub mod streams {
    pub const PAIR: u64 = 1;
    pub const FIG1_MATRIX: u64 = 2;
    pub const FIG2_MATRIX: u64 = 3;
    pub const FIG2_X: u64 = 4;
    pub const FIG3_MATRIX: u64 = 5;
    pub const FIG4_MATRIX: u64 = 6;
    pub const SKETCH_PAIR: u64 = 7;
    pub const SKETCH_SEED: u64 = 8;
}

/// `l` values of the density experiment.
pub const FIG4_DENSITIES: [usize; 3] = [10, 30, 100];
/// Overlaps of the distortion experiment.
pub const FIG3_OVERLAPS: [usize; 2] = [2, 10];

pub fn pair_seed(master: u64) -> u64 {
    derive_seed(master, streams::PAIR, 0)
}

/// Matrix seed of trial `trial` at reduced dimension `k` on `stream`.
pub fn matrix_seed(master: u64, stream: u64, k: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(master, stream, k as u64), 0, trial as u64)
}

pub fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))
}

/// Runs `f` over `tasks` on the pool; results come back in task order.
fn run_ordered<T, R, F>(pool: &rayon::ThreadPool, tasks: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    pool.install(|| tasks.par_iter().map(&f).collect())
}

struct Arm {
    name: String,
    pair: WeightedPair,
    x: Vec<(usize, f64)>,
    w: Vec<(usize, f64)>,
    truth: f64,
    distortion: f64,
}

impl Arm {
    fn new(name: String, pair: WeightedPair) -> Result<Self> {
        let truth = pair.weighted_sq_norm();
        let distortion = pair.distortion().unwrap_or(f64::INFINITY);
        Ok(Arm { name, x: pair.x_sparse(), w: pair.w_sparse(), pair, truth, distortion })
    }
}

struct ProjectionTask<'a> {
    arm: &'a Arm,
    trial: usize,
    k: usize,
    seed: u64,
}

fn projection_trial(task: &ProjectionTask<'_>) -> Result<TrialRecord> {
    let start = Instant::now();
    let a = ProjectionMatrix::sample(task.arm.pair.d(), task.k, task.seed)?;
    let gx = a.reduce_sparse(&task.arm.x)?;
    let gw = a.reduce_sparse(&task.arm.w)?;
    let estimate = rho(&gx, &gw)?;
    Ok(TrialRecord {
        arm: task.arm.name.clone(),
        trial_index: task.trial,
        k: task.k,
        matrix_seed: task.seed,
        estimate,
        true_value: task.arm.truth,
        distortion: task.arm.distortion,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn metadata(cfg: &ExperimentConfig, truths: &BTreeMap<String, f64>, reference: Value) -> Value {
    let mut values = truths.values();
    let true_value = match values.next() {
        Some(&first) if values.all(|&v| v == first) => json!(first),
        _ => Value::Null,
    };
    json!({
        "experiment": cfg.experiment.name(),
        "version": crate::VERSION,
        "config": cfg.echo(),
        "true_value": true_value,
        "true_values": truths,
        "reference": reference,
    })
}

fn report(cfg: &ExperimentConfig, name: &str, records: Vec<TrialRecord>, meta: Value) -> ExperimentReport {
    let summaries = ArmSummary::group(&records);
    ExperimentReport {
        name: name.to_string(),
        metadata: meta,
        table: records_table(&records, cfg.record_timings),
        summary: summary_table(&summaries),
        records,
        summaries,
    }
}

fn projection_tasks<'a>(cfg: &ExperimentConfig, arms: &'a [Arm], ks: &[usize], stream: u64) -> Vec<ProjectionTask<'a>> {
    let mut tasks = Vec::with_capacity(arms.len() * ks.len() * cfg.trials);
    for arm in arms {
        for &k in ks {
            for trial in 0..cfg.trials {
                tasks.push(ProjectionTask { arm, trial, k, seed: matrix_seed(cfg.master_seed, stream, k, trial) });
            }
        }
    }
    tasks
}

/// Fixed pair, a fresh matrix for every `(k, trial)`.
pub fn run_fig1(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pool = build_pool(cfg.threads)?;
    let spec = SparseSpec { seed: pair_seed(cfg.master_seed), ..cfg.spec };
    let arms = [Arm::new("main".into(), gen_pair(&spec)?)?];
    let tasks = projection_tasks(cfg, &arms, &cfg.k_list, streams::FIG1_MATRIX);
    let records = run_ordered(&pool, &tasks, projection_trial)?;
    let truths = BTreeMap::from([(arms[0].name.clone(), arms[0].truth)]);
    let meta = metadata(cfg, &truths, json!({"ratio": 1.0}));
    Ok(report(cfg, "fig1", records, meta))
}

/// Fixed matrix and weights, a fresh `x` for every trial. At each `k` the
/// matrix is the first `k` rows of one seeded matrix.
pub fn run_fig2(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pool = build_pool(cfg.threads)?;
    let spec = SparseSpec { seed: pair_seed(cfg.master_seed), ..cfg.spec };
    let base = gen_pair(&spec)?;
    let seed = derive_seed(cfg.master_seed, streams::FIG2_MATRIX, 0);
    let arms = (0..cfg.trials)
        .map(|trial| {
            let x_seed = derive_seed(cfg.master_seed, streams::FIG2_X, trial as u64);
            let x = gen_x_against(base.w(), spec.l_x, spec.l_overlap, spec.norm_x, x_seed)?;
            Arm::new("main".into(), WeightedPair::new(x, base.w().to_vec())?)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tasks = Vec::with_capacity(cfg.k_list.len() * cfg.trials);
    for &k in &cfg.k_list {
        for (trial, arm) in arms.iter().enumerate() {
            tasks.push(ProjectionTask { arm, trial, k, seed });
        }
    }
    let records = run_ordered(&pool, &tasks, projection_trial)?;
    let meta = metadata(cfg, &BTreeMap::new(), json!({"ratio": 1.0}));
    Ok(report(cfg, "fig2", records, meta))
}

/// Two arms that differ only in support overlap, at the largest `k`, with
/// matrix seeds shared between the arms.
pub fn run_fig3(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pool = build_pool(cfg.threads)?;
    let arms = FIG3_OVERLAPS
        .iter()
        .map(|&overlap| {
            let spec = SparseSpec { l_overlap: overlap, seed: pair_seed(cfg.master_seed), ..cfg.spec };
            Arm::new(format!("overlap={overlap}"), gen_pair(&spec)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let tasks = projection_tasks(cfg, &arms, &[cfg.k_max()], streams::FIG3_MATRIX);
    let records = run_ordered(&pool, &tasks, projection_trial)?;
    let truths = arms.iter().map(|a| (a.name.clone(), a.truth)).collect();
    let meta = metadata(cfg, &truths, json!({"ratio": 1.0}));
    Ok(report(cfg, "fig3", records, meta))
}

/// Arms `l in {10, 30, 100}` with overlap `0.8 l`, at the largest `k`.
pub fn run_fig4(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pool = build_pool(cfg.threads)?;
    let arms = FIG4_DENSITIES
        .iter()
        .map(|&l| {
            let overlap = (l * 4).div_ceil(5);
            let spec = SparseSpec { l_x: l, l_w: l, l_overlap: overlap, seed: pair_seed(cfg.master_seed), ..cfg.spec };
            Arm::new(format!("l={l}"), gen_pair(&spec)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let tasks = projection_tasks(cfg, &arms, &[cfg.k_max()], streams::FIG4_MATRIX);
    let records = run_ordered(&pool, &tasks, projection_trial)?;
    let truths = arms.iter().map(|a| (a.name.clone(), a.truth)).collect();
    let meta = metadata(cfg, &truths, json!({"ratio": 1.0}));
    Ok(report(cfg, "fig4", records, meta))
}

/// Outcome of one `(epsilon, delta, pair, arm)` point of the sketch evaluation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SketchPoint {
    pub epsilon: f64,
    pub delta: f64,
    pub pair: usize,
    pub distortion: f64,
    pub arm: String,
    pub r: usize,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_abs_rel_error: f64,
    pub sketch_bytes: usize,
    pub true_value: f64,
}

fn sketch_points_table(points: &[SketchPoint]) -> Table {
    let mut table = Table::new(&[
        "epsilon",
        "delta",
        "pair",
        "distortion",
        "arm",
        "r",
        "m",
        "trials",
        "successes",
        "success_rate",
        "mean_abs_rel_error",
        "sketch_bytes",
        "true_value",
    ]);
    for p in points {
        table.push(vec![
            fmt_float(p.epsilon),
            fmt_float(p.delta),
            p.pair.to_string(),
            fmt_float(p.distortion),
            p.arm.clone(),
            p.r.to_string(),
            p.m.to_string(),
            p.trials.to_string(),
            p.successes.to_string(),
            fmt_float(p.success_rate),
            fmt_float(p.mean_abs_rel_error),
            p.sketch_bytes.to_string(),
            fmt_float(p.true_value),
        ]);
    }
    table
}

/// Draws pair `index` of the sketch evaluation, redrawing until its
/// distortion is at most `max_distortion`.
pub fn sketch_eval_pair(cfg: &ExperimentConfig, index: usize) -> Result<WeightedPair> {
    const MAX_ATTEMPTS: u64 = 100_000;
    let s = &cfg.sketch;
    for attempt in 0..MAX_ATTEMPTS {
        let seed = derive_seed(cfg.master_seed, streams::SKETCH_PAIR, ((index as u64) << 32) | attempt);
        let pair = gen_pair(&SparseSpec { seed, ..s.pair_spec })?;
        if pair.weighted_sq_norm() > 0.0 && pair.distortion()? <= s.max_distortion {
            return Ok(pair);
        }
    }
    Err(Error::InfeasibleSpec(format!(
        "no pair with distortion <= {} after {MAX_ATTEMPTS} draws",
        s.max_distortion
    )))
}

fn sketch_trial(
    config: SketchConfig,
    x: &[(usize, f64)],
    w: &[(usize, f64)],
) -> Result<f64> {
    let mut sx = StreamSketch::new(config);
    let mut sw = sx.empty_like();
    sx.update_sparse(x)?;
    sw.update_sparse(w)?;
    Ok(StreamSketch::estimate(&sx, &sw)?.value)
}

/// Sketch success rates on an `(epsilon, delta)` grid, at the planned `m`
/// and at `m / 4`.
pub fn run_sketch_eval(cfg: &ExperimentConfig) -> Result<(ExperimentReport, Vec<SketchPoint>)> {
    cfg.validate()?;
    let pool = build_pool(cfg.threads)?;
    let s = &cfg.sketch;
    let pairs = (0..s.pairs).map(|p| sketch_eval_pair(cfg, p)).collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let mut points = Vec::new();
    let mut truths = BTreeMap::new();
    let mut grid_index = 0u64;
    for &epsilon in &s.epsilons {
        for &delta in &s.deltas {
            for (p, pair) in pairs.iter().enumerate() {
                let truth = pair.weighted_sq_norm();
                let distortion = pair.distortion()?;
                let dims = plan_sketch(epsilon, delta, distortion)?;
                let point_seed = derive_seed(cfg.master_seed, streams::SKETCH_SEED, grid_index);
                grid_index += 1;
                let (x, w) = (pair.x_sparse(), pair.w_sparse());
                for (arm, m) in [("planned", dims.m), ("quarter", (dims.m / 4).max(1))] {
                    let label = format!("eps={epsilon};delta={delta};pair={p};{arm}");
                    truths.insert(label.clone(), truth);
                    let seeds: Vec<(usize, u64)> =
                        (0..s.sketch_trials).map(|t| (t, derive_seed(point_seed, 0, t as u64))).collect();
                    let estimates = run_ordered(&pool, &seeds, |&(_, seed)| {
                        let start = Instant::now();
                        let config = SketchConfig::new(dims.r, m, seed, StreamMode::Timestep)?;
                        Ok((sketch_trial(config, &x, &w)?, start.elapsed().as_secs_f64() * 1e3))
                    })?;
                    let errors: Vec<f64> = estimates.iter().map(|(e, _)| ((e - truth) / truth).abs()).collect();
                    let successes = errors.iter().filter(|&&e| e < epsilon).count();
                    for (&(t, seed), &(estimate, ms)) in seeds.iter().zip(&estimates) {
                        records.push(TrialRecord {
                            arm: label.clone(),
                            trial_index: t,
                            k: m,
                            matrix_seed: seed,
                            estimate,
                            true_value: truth,
                            distortion,
                            wall_time_ms: ms,
                        });
                    }
                    points.push(SketchPoint {
                        epsilon,
                        delta,
                        pair: p,
                        distortion,
                        arm: arm.to_string(),
                        r: dims.r,
                        m,
                        trials: s.sketch_trials,
                        successes,
                        success_rate: successes as f64 / s.sketch_trials as f64,
                        mean_abs_rel_error: pairwise_sum(&errors) / errors.len() as f64,
                        sketch_bytes: StreamSketch::encoded_len(dims.r, m),
                        true_value: truth,
                    });
                }
            }
        }
    }
    let meta = metadata(cfg, &truths, json!({"ratio": 1.0}));
    let mut report = report(cfg, "sketch_eval", records, meta);
    report.summary = sketch_points_table(&points);
    Ok((report, points))
}

/// Dispatches an experiment other than `verify`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment {
        Experiment::Fig1 => run_fig1(cfg),
        Experiment::Fig2 => run_fig2(cfg),
        Experiment::Fig3 => run_fig3(cfg),
        Experiment::Fig4 => run_fig4(cfg),
        Experiment::SketchEval => run_sketch_eval(cfg).map(|(r, _)| r),
        Experiment::Verify => Err(Error::invalid("verify is not a sampling experiment")),
    }
}

/// Sample standard deviation of the estimates in one `(arm, k)` group.
pub fn estimate_std(records: &[TrialRecord], arm: &str, k: usize) -> f64 {
    let values: Vec<f64> = records.iter().filter(|r| r.arm == arm && r.k == k).map(|r| r.estimate).collect();
    mean_std(&values).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Scale;

    fn tiny(experiment: Experiment) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::preset(experiment, Scale::Desk);
        cfg.spec.d = 200;
        cfg.k_list = vec![8, 64];
        cfg.trials = 12;
        cfg.master_seed = 7;
        cfg.sketch.epsilons = vec![0.5];
        cfg.sketch.deltas = vec![0.2];
        cfg.sketch.sketch_trials = 4;
        cfg.sketch.pairs = 1;
        cfg.sketch.pair_spec.d = 50;
        cfg
    }

    #[test]
    fn fig1_shape() {
        let r = run_fig1(&tiny(Experiment::Fig1)).unwrap();
        assert_eq!(r.records.len(), 24);
        let truth = r.records[0].true_value;
        assert!(r.records.iter().all(|rec| rec.true_value == truth));
        assert_eq!(r.metadata["true_value"], json!(truth));
    }

    #[test]
    fn fig2_shares_one_matrix() {
        let r = run_fig2(&tiny(Experiment::Fig2)).unwrap();
        let seed = r.records[0].matrix_seed;
        assert!(r.records.iter().all(|rec| rec.matrix_seed == seed));
        assert!(r.records.iter().all(|rec| rec.ratio().is_some()));
    }

    #[test]
    fn fig3_and_fig4_arms() {
        let r3 = run_fig3(&tiny(Experiment::Fig3)).unwrap();
        assert_eq!(r3.summaries.len(), 2);
        assert!(r3.summaries[0].mean_distortion > r3.summaries[1].mean_distortion);
        let r4 = run_fig4(&tiny(Experiment::Fig4)).unwrap();
        let arms: Vec<&str> = r4.summaries.iter().map(|s| s.arm.as_str()).collect();
        assert_eq!(arms, ["l=10", "l=30", "l=100"]);
    }

    #[test]
    fn fig4_first_arm_uses_fig1_pair() {
        let cfg = tiny(Experiment::Fig1);
        let r1 = run_fig1(&cfg).unwrap();
        let r4 = run_fig4(&cfg).unwrap();
        assert_eq!(r1.records[0].true_value, r4.summary_for("l=10", 64).unwrap().mean_true_value);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let mut cfg = tiny(Experiment::Fig1);
        cfg.threads = 1;
        let a = run_fig1(&cfg).unwrap();
        cfg.threads = 4;
        let b = run_fig1(&cfg).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.metadata, b.metadata);
    }

    #[test]
    fn sketch_eval_sizes() {
        let (report, points) = run_sketch_eval(&tiny(Experiment::SketchEval)).unwrap();
        assert_eq!(points.len(), 2);
        for p in &points {
            assert_eq!(p.sketch_bytes, 31 + p.r * p.m * 84);
        }
        assert_eq!(points[1].m, points[0].m / 4);
        assert_eq!(report.records.len(), 8);
    }

    #[test]
    fn sketch_pairs_respect_distortion_cap() {
        let cfg = tiny(Experiment::SketchEval);
        for p in 0..3 {
            assert!(sketch_eval_pair(&cfg, p).unwrap().distortion().unwrap() <= 1.5);
        }
    }
}
