use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::numeric::mean_std;

/// One estimate from one trial of a concentration experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub arm: String,
    pub trial_index: usize,
    pub k: usize,
    pub matrix_seed: u64,
    pub estimate: f64,
    pub true_value: f64,
    pub distortion: f64,
    pub wall_time_ms: f64,
}

impl TrialRecord {
    /// `estimate / true_value`, absent when the true value is zero.
    pub fn ratio(&self) -> Option<f64> {
        (self.true_value != 0.0).then(|| self.estimate / self.true_value)
    }
}

/// Statistics of one `(arm, k)` group of trial records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub arm: String,
    pub k: usize,
    pub n: usize,
    pub mean_estimate: f64,
    pub std_estimate: f64,
    /// `std_estimate / sqrt(n)`.
    pub std_error: f64,
    pub mean_true_value: f64,
    pub mean_ratio: f64,
    pub std_ratio: f64,
    /// `std_estimate / mean_true_value`.
    pub rel_std: f64,
    pub mean_distortion: f64,
}

impl ArmSummary {
    pub fn from_records(records: &[&TrialRecord]) -> Self {
        let first = records.first().expect("summary of an empty group");
        let estimates: Vec<f64> = records.iter().map(|r| r.estimate).collect();
        let truths: Vec<f64> = records.iter().map(|r| r.true_value).collect();
        let ratios: Vec<f64> = records.iter().filter_map(|r| r.ratio()).collect();
        let distortions: Vec<f64> = records.iter().map(|r| r.distortion).collect();
        let (mean_estimate, std_estimate) = mean_std(&estimates);
        let (mean_true_value, _) = mean_std(&truths);
        let (mean_ratio, std_ratio) = mean_std(&ratios);
        let (mean_distortion, _) = mean_std(&distortions);
        ArmSummary {
            arm: first.arm.clone(),
            k: first.k,
            n: records.len(),
            mean_estimate,
            std_estimate,
            std_error: std_estimate / (records.len() as f64).sqrt(),
            mean_true_value,
            mean_ratio,
            std_ratio,
            rel_std: std_estimate / mean_true_value,
            mean_distortion,
        }
    }

    /// Groups records by `(arm, k)` in order of first appearance.
    pub fn group(records: &[TrialRecord]) -> Vec<ArmSummary> {
        let mut keys: Vec<(&str, usize)> = Vec::new();
        for r in records {
            if !keys.contains(&(r.arm.as_str(), r.k)) {
                keys.push((r.arm.as_str(), r.k));
            }
        }
        keys.into_iter()
            .map(|(arm, k)| {
                let group: Vec<&TrialRecord> = records.iter().filter(|r| r.arm == arm && r.k == k).collect();
                ArmSummary::from_records(&group)
            })
            .collect()
    }
}

/// Shortest representation that parses back to the same `f64`; empty for NaN.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// A CSV table preceded by a `# {json}` metadata line.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, mut out: W, metadata: &serde_json::Value) -> Result<()> {
        writeln!(out, "# {}", serde_json::to_string(metadata)?)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path, metadata: &serde_json::Value) -> Result<()> {
        let file = File::create(path)?;
        let mut out = BufWriter::new(file);
        self.write(&mut out, metadata)?;
        out.flush()?;
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn records_table(records: &[TrialRecord], with_timings: bool) -> Table {
    let mut header =
        vec!["arm", "trial_index", "k", "matrix_seed", "estimate", "true_value", "ratio", "distortion"];
    if with_timings {
        header.push("wall_time_ms");
    }
    let mut table = Table::new(&header);
    for r in records {
        let mut row = vec![
            r.arm.clone(),
            r.trial_index.to_string(),
            r.k.to_string(),
            r.matrix_seed.to_string(),
            fmt_float(r.estimate),
            fmt_float(r.true_value),
            r.ratio().map(fmt_float).unwrap_or_default(),
            fmt_float(r.distortion),
        ];
        if with_timings {
            row.push(fmt_float(r.wall_time_ms));
        }
        table.push(row);
    }
    table
}

pub fn summary_table(summaries: &[ArmSummary]) -> Table {
    let mut table = Table::new(&[
        "arm",
        "k",
        "n",
        "mean_estimate",
        "std_estimate",
        "std_error",
        "mean_true_value",
        "mean_ratio",
        "std_ratio",
        "rel_std",
        "mean_distortion",
    ]);
    for s in summaries {
        table.push(vec![
            s.arm.clone(),
            s.k.to_string(),
            s.n.to_string(),
            fmt_float(s.mean_estimate),
            fmt_float(s.std_estimate),
            fmt_float(s.std_error),
            fmt_float(s.mean_true_value),
            fmt_float(s.mean_ratio),
            fmt_float(s.std_ratio),
            fmt_float(s.rel_std),
            fmt_float(s.mean_distortion),
        ]);
    }
    table
}

/// Everything an experiment produces.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub metadata: serde_json::Value,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<ArmSummary>,
    /// Main table (`<name>.csv`).
    pub table: Table,
    /// Per-arm statistics (`<name>_summary.csv`).
    pub summary: Table,
}

impl ExperimentReport {
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(out_dir)?;
        let main = out_dir.join(format!("{}.csv", self.name));
        let summary = out_dir.join(format!("{}_summary.csv", self.name));
        self.table.write_file(&main, &self.metadata)?;
        self.summary.write_file(&summary, &self.metadata)?;
        Ok(vec![main, summary])
    }

    pub fn summary_for(&self, arm: &str, k: usize) -> Option<&ArmSummary> {
        self.summaries.iter().find(|s| s.arm == arm && s.k == k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(arm: &str, k: usize, estimate: f64, truth: f64) -> TrialRecord {
        TrialRecord {
            arm: arm.into(),
            trial_index: 0,
            k,
            matrix_seed: 1,
            estimate,
            true_value: truth,
            distortion: 2.0,
            wall_time_ms: 0.5,
        }
    }

    #[test]
    fn ratio_absent_for_zero_truth() {
        assert_eq!(rec("a", 1, 2.0, 4.0).ratio(), Some(0.5));
        assert_eq!(rec("a", 1, 2.0, 0.0).ratio(), None);
    }

    #[test]
    fn grouping_preserves_order() {
        let records = vec![rec("a", 10, 1.0, 1.0), rec("a", 20, 2.0, 1.0), rec("a", 10, 3.0, 1.0)];
        let groups = ArmSummary::group(&records);
        assert_eq!(groups.len(), 2);
        assert_eq!((groups[0].k, groups[0].n, groups[0].mean_estimate), (10, 2, 2.0));
        assert_eq!(groups[1].k, 20);
    }

    #[test]
    fn table_format() {
        let table = records_table(&[rec("main", 100, 0.1, 0.0)], false);
        let mut out = Vec::new();
        table.write(&mut out, &serde_json::json!({"v": 1})).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "# {\"v\":1}\narm,trial_index,k,matrix_seed,estimate,true_value,ratio,distortion\nmain,0,100,1,0.1,0,,2\n"
        );
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -2.5e-7] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_float(f64::NAN), "");
    }
}
