//! Experiment runner behind the `wjl` command-line tool.
//!
//! Every experiment is a pure function of its [`ExperimentConfig`]: trials run
//! on a worker pool but results are collected in trial order, and the CSV and
//! SVG outputs are byte-identical for any thread count.

pub mod config;
pub mod experiments;
pub mod plot;
pub mod records;
pub mod verify;

use std::path::{Path, PathBuf};

pub use config::{Experiment, ExperimentConfig, Scale, SketchEvalConfig};
pub use experiments::{run_experiment, run_fig1, run_fig2, run_fig3, run_fig4, run_sketch_eval, SketchPoint};
pub use plot::{render_histogram, Histogram, RowFilter};
pub use records::{ArmSummary, ExperimentReport, TrialRecord};
pub use verify::{run_verify, CheckResult, VerifyReport};

use crate::error::Result;

pub const DEFAULT_BINS: usize = 30;

/// Writes the report's CSVs and one histogram per `(arm, k)` group: of the
/// ratio for `fig2`, of the estimate otherwise.
pub fn write_outputs(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = report.write(out_dir)?;
    let csv = &paths[0].clone();
    let column = if report.name == "fig2" { "ratio" } else { "estimate" };
    let single_arm = report.summaries.iter().all(|s| s.arm == report.summaries[0].arm);
    for s in &report.summaries {
        let tag = if single_arm { format!("k{}", s.k) } else { sanitize(&s.arm) };
        let svg = out_dir.join(format!("{}_{}.svg", report.name, tag));
        let filter = RowFilter { arm: Some(s.arm.clone()), k: Some(s.k) };
        render_histogram(csv, column, DEFAULT_BINS, &svg, &filter)?;
        paths.push(svg);
    }
    Ok(paths)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}
