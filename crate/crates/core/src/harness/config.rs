use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::SparseSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    SketchEval,
    Verify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::SketchEval => "sketch-eval",
            Experiment::Verify => "verify",
        }
    }
}

/// Size preset. `Paper` is the full grid (d = 2e5, k up to 1e5,
/// 250 trials); `Desk` shrinks it to run in minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Paper,
    Desk,
}

/// Parameters of the streaming-sketch evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchEvalConfig {
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Independent sketch seeds per grid point.
    pub sketch_trials: usize,
    /// Number of generated `(x, w)` pairs.
    pub pairs: usize,
    /// Pairs are redrawn until their distortion is at most this.
    pub max_distortion: f64,
    /// Shape of the generated pairs (the seed field is ignored).
    pub pair_spec: SparseSpec,
}

impl Default for SketchEvalConfig {
    fn default() -> Self {
        SketchEvalConfig {
            epsilons: vec![0.3, 0.5],
            deltas: vec![0.05, 0.1],
            sketch_trials: 500,
            pairs: 3,
            max_distortion: 1.5,
            pair_spec: SparseSpec::new(1000, 3, 2, 2, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub trials: usize,
    pub k_list: Vec<usize>,
    pub spec: SparseSpec,
    pub master_seed: u64,
    #[serde(default)]
    pub sketch: SketchEvalConfig,
    /// Output directory. Not echoed into CSV metadata.
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads, 0 for the rayon default. Not echoed into CSV metadata.
    #[serde(default)]
    pub threads: usize,
    /// Adds a `wall_time_ms` column. Off by default since timings break
    /// byte-for-byte reproducibility.
    #[serde(default)]
    pub record_timings: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn preset(experiment: Experiment, scale: Scale) -> Self {
        let (d, k_list, trials) = match scale {
            Scale::Paper => (200_000, vec![100, 1_000, 10_000, 100_000], 250),
            Scale::Desk => (2_000, vec![100, 1_000, 10_000], 100),
        };
        let mut sketch = SketchEvalConfig::default();
        sketch.pair_spec.d = d.min(sketch.pair_spec.d);
        ExperimentConfig {
            experiment,
            trials,
            k_list,
            spec: SparseSpec::new(d, 10, 10, 8, 0),
            master_seed: 0,
            sketch,
            out_dir: default_out_dir(),
            threads: 0,
            record_timings: false,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return Err(Error::invalid("k_list must be nonempty with positive entries"));
        }
        self.spec.validate()?;
        let s = &self.sketch;
        if s.epsilons.is_empty() || s.deltas.is_empty() || s.sketch_trials == 0 || s.pairs == 0 {
            return Err(Error::invalid("sketch evaluation grid must be nonempty"));
        }
        Ok(())
    }

    /// Largest reduced dimension in the grid; single-k experiments use it.
    pub fn k_max(&self) -> usize {
        self.k_list.iter().copied().max().unwrap_or(1)
    }

    /// The configuration as echoed into output metadata: execution-only fields
    /// (`out_dir`, `threads`) are dropped so outputs depend only on inputs.
    pub fn echo(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("out_dir");
            obj.remove("threads");
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for scale in [Scale::Paper, Scale::Desk] {
            ExperimentConfig::preset(Experiment::Fig1, scale).validate().unwrap();
        }
        let desk = ExperimentConfig::preset(Experiment::Fig1, Scale::Desk);
        assert_eq!(desk.spec.d, 2_000);
        assert_eq!(desk.k_list, vec![100, 1_000, 10_000]);
        assert_eq!(desk.trials, 100);
        let paper = ExperimentConfig::preset(Experiment::Fig1, Scale::Paper);
        assert_eq!(paper.trials, 250);
        assert_eq!(paper.k_max(), 100_000);
    }

    #[test]
    fn echo_omits_execution_fields() {
        let mut a = ExperimentConfig::preset(Experiment::Fig2, Scale::Desk);
        let mut b = a.clone();
        a.threads = 1;
        b.threads = 8;
        b.out_dir = PathBuf::from("/elsewhere");
        assert_eq!(a.echo(), b.echo());
        assert!(a.echo().get("threads").is_none());
    }

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig::preset(Experiment::SketchEval, Scale::Desk);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_grids() {
        let mut cfg = ExperimentConfig::preset(Experiment::Fig1, Scale::Desk);
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::preset(Experiment::Fig1, Scale::Desk);
        cfg.k_list.clear();
        assert!(cfg.validate().is_err());
    }
}
