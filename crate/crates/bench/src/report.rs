use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rankz_core::solvers::fmt_f64;
use rankz_core::SolveOutcome;

use crate::error::{BenchError, Result};
use crate::experiment::{Axis, ExperimentResult, ExperimentSpec};

impl ExperimentResult {
    /// `algo,k,rmse`, plus a `bound` column when bounds were requested.
    /// Algorithms without a bound leave it empty.
    pub fn to_csv(&self) -> String {
        let with_bounds = self.spec.bounds;
        let mut out = String::from(if with_bounds { "algo,k,rmse,bound\n" } else { "algo,k,rmse\n" });
        for curve in &self.curves {
            let bound = self.bounds.iter().find(|b| b.label == curve.label);
            for (i, (k, rmse)) in curve.iterations.iter().zip(&curve.rmse).enumerate() {
                let _ = write!(out, "{},{},{}", curve.label, k, fmt_f64(*rmse));
                if with_bounds {
                    out.push(',');
                    if let Some(b) = bound {
                        out.push_str(&fmt_f64(b.values[i]));
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    /// Tidy `series,k,value` rows; bounds appear as series `bound:<algo>`.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("series,k,value\n");
        for curve in &self.curves {
            for (k, v) in curve.iterations.iter().zip(&curve.rmse) {
                let _ = writeln!(out, "{},{},{}", curve.label, k, fmt_f64(*v));
            }
        }
        for b in &self.bounds {
            for (k, v) in self.grid.iter().zip(&b.values) {
                let _ = writeln!(out, "bound:{},{},{}", b.label, k, fmt_f64(*v));
            }
        }
        out
    }

    pub fn flop_report(&self) -> Vec<FlopRow> {
        flop_report(self.trials.iter().flat_map(|t| t.runs.iter().map(|r| (r.algorithm.label(), &r.outcome))))
    }

    pub fn manifest(&self, files: &[&str]) -> Manifest {
        Manifest {
            spec: self.spec.clone(),
            axis: self.axis,
            trial_seeds: self.trials.iter().map(|t| t.problem_seed).collect(),
            versions: BTreeMap::from([
                ("rankz-bench".to_string(), env!("CARGO_PKG_VERSION").to_string()),
                ("rankz-core".to_string(), rankz_core::VERSION.to_string()),
            ]),
            files: files.iter().map(|f| f.to_string()).collect(),
        }
    }

    /// Writes `<stem>.csv` (or the long format) and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str, long: bool) -> Result<()> {
        fs::create_dir_all(dir).map_err(|source| BenchError::Io { path: dir.to_path_buf(), source })?;
        let csv_name = format!("{stem}.csv");
        let flops_name = format!("{stem}_flops.csv");
        let csv = if long { self.to_long_csv() } else { self.to_csv() };
        write_file(&dir.join(&csv_name), &csv)?;
        write_file(&dir.join(&flops_name), &flop_csv(&self.flop_report()))?;
        let manifest = self.manifest(&[&csv_name, &flops_name]);
        write_file(&dir.join(format!("{stem}.json")), &manifest.to_json())?;
        Ok(())
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| BenchError::Io { path: path.to_path_buf(), source })
}

/// Everything needed to rerun an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: ExperimentSpec,
    pub axis: Axis,
    pub trial_seeds: Vec<u64>,
    pub versions: BTreeMap<String, String>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlopRow {
    pub label: String,
    pub runs: usize,
    pub iterations: u64,
    pub flops: u64,
    /// Iteration flops per iteration, pooled over runs.
    pub per_iteration: f64,
}

/// Mean iteration flops per iteration, grouped by label in first-seen order.
/// Criterion evaluations are excluded.
pub fn flop_report<'a>(runs: impl IntoIterator<Item = (&'a str, &'a SolveOutcome)>) -> Vec<FlopRow> {
    let mut rows: Vec<FlopRow> = Vec::new();
    for (label, outcome) in runs {
        let row = match rows.iter_mut().position(|r| r.label == label) {
            Some(i) => &mut rows[i],
            None => {
                rows.push(FlopRow { label: label.to_string(), runs: 0, iterations: 0, flops: 0, per_iteration: 0.0 });
                rows.last_mut().expect("just pushed")
            }
        };
        row.runs += 1;
        row.iterations += outcome.iterations;
        row.flops += outcome.flops;
    }
    for r in &mut rows {
        r.per_iteration = r.flops as f64 / r.iterations.max(1) as f64;
    }
    rows
}

pub fn flop_csv(rows: &[FlopRow]) -> String {
    let mut out = String::from("algo,runs,iterations,flops,flops_per_iter\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.label, r.runs, r.iterations, r.flops, fmt_f64(r.per_iteration));
    }
    out
}
