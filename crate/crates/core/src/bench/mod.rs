//! Benchmark harness: amputate complete datasets, run imputation algorithms
//! against a shared mask, score against the truth and aggregate.

mod plan;
mod simulate;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::imputation::{impute, strawman, ImputeSpec};
use crate::metrics::{relative_error, score};
use crate::missingness::{induce, Mechanism, MissingnessSpec};
use crate::seed;
use crate::table::{dataset_stats, MixedTable};
use crate::{Error, Result};

pub use plan::{default_cells, AlgorithmEntry, Cell, DatasetEntry, DatasetSource, ExperimentPlan};
pub use simulate::{equicorrelated, simulate_section5, simulate_with, SimulationConfig};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n_rows: usize,
    pub n_cols: usize,
    pub rho: Option<f64>,
    pub info: f64,
    pub complexity: f64,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub mechanism: Mechanism,
    pub gamma: f64,
    pub algorithm: String,
    pub n_runs: usize,
    pub n_failed: usize,
    pub mean_er: Option<f64>,
    /// Sample standard deviation of E_R; present with at least 2 runs.
    pub sd_er: Option<f64>,
    pub se_er: Option<f64>,
    pub mean_error: Option<f64>,
    pub mean_seconds: Option<f64>,
    pub mean_seconds_per_iteration: Option<f64>,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub dataset: String,
    pub mechanism: Mechanism,
    pub gamma: f64,
    pub replicate: usize,
    pub algorithm: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub format_version: u32,
    pub seed: u64,
    pub replicates: usize,
    pub timing: bool,
    pub cutpoints: (f64, f64),
    pub datasets: Vec<DatasetSummary>,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<RunFailure>,
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "dataset",
            "mechanism",
            "gamma",
            "algorithm",
            "n_runs",
            "n_failed",
            "mean_er",
            "sd_er",
            "se_er",
            "mean_error",
            "mean_seconds",
            "rho",
            "info",
            "complexity",
            "group",
        ])?;
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        for row in &self.rows {
            let ds = self.datasets.iter().find(|d| d.name == row.dataset);
            w.write_record([
                row.dataset.clone(),
                row.mechanism.to_string(),
                row.gamma.to_string(),
                row.algorithm.clone(),
                row.n_runs.to_string(),
                row.n_failed.to_string(),
                opt(row.mean_er),
                opt(row.sd_er),
                opt(row.se_er),
                opt(row.mean_error),
                opt(row.mean_seconds),
                opt(ds.and_then(|d| d.rho)),
                opt(ds.map(|d| d.info)),
                opt(ds.map(|d| d.complexity)),
                row.group.clone(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<report>", e))?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }

    pub fn row(
        &self,
        dataset: &str,
        mechanism: Mechanism,
        gamma: f64,
        algorithm: &str,
    ) -> Option<&ReportRow> {
        self.rows.iter().find(|r| {
            r.dataset == dataset
                && r.mechanism == mechanism
                && r.gamma == gamma
                && r.algorithm == algorithm
        })
    }
}

/// Group labels by percentile rank of rho (`#{rho_k <= rho} / N * 100`):
/// `low` up to the first cutpoint, `medium` up to the second, `high` above;
/// `unlabeled` when rho is undefined.
pub fn group_labels(rhos: &[Option<f64>], cutpoints: (f64, f64)) -> Vec<String> {
    let defined: Vec<f64> = rhos.iter().flatten().copied().collect();
    rhos.iter()
        .map(|rho| match rho {
            None => "unlabeled".to_string(),
            Some(r) => {
                let rank = defined.iter().filter(|&&x| x <= *r).count() as f64
                    / defined.len() as f64
                    * 100.0;
                if rank <= cutpoints.0 {
                    "low"
                } else if rank <= cutpoints.1 {
                    "medium"
                } else {
                    "high"
                }
                .to_string()
            }
        })
        .collect()
}

/// Relabel the datasets (and rows) of `report` at new cutpoints.
pub fn correlation_groups(report: &BenchReport, cutpoints: (f64, f64)) -> BenchReport {
    let mut out = report.clone();
    let rhos: Vec<Option<f64>> = out.datasets.iter().map(|d| d.rho).collect();
    let labels = group_labels(&rhos, cutpoints);
    let by_name: BTreeMap<String, String> = out
        .datasets
        .iter()
        .map(|d| d.name.clone())
        .zip(labels.clone())
        .collect();
    for (d, l) in out.datasets.iter_mut().zip(labels) {
        d.group = l;
    }
    for row in &mut out.rows {
        row.group = by_name[&row.dataset].clone();
    }
    out.cutpoints = cutpoints;
    out
}

struct Outcome {
    relative: f64,
    error: f64,
    seconds: f64,
    per_iteration: Option<f64>,
}

type RunResult = Vec<std::result::Result<Outcome, String>>;

fn run_once(truth: &MixedTable, cell: &Cell, specs: &[ImputeSpec], rep_seed: u64) -> RunResult {
    let fail_all = |e: Error| specs.iter().map(|_| Err(e.to_string())).collect();
    let amp = MissingnessSpec {
        mechanism: cell.mechanism,
        gamma: cell.gamma,
        seed: seed::derive(rep_seed, 0),
    };
    let (amputed, mask) = match induce(truth, &amp) {
        Ok(v) => v,
        Err(e) => return fail_all(e),
    };
    let alg_seed = seed::derive(rep_seed, 1);
    let baseline = match strawman(&amputed, alg_seed).and_then(|s| score(truth, &s, &mask)) {
        Ok(b) => b,
        Err(e) => return fail_all(e),
    };
    specs
        .iter()
        .map(|spec| {
            let mut spec = spec.clone();
            spec.forest.seed = alg_seed;
            let started = Instant::now();
            let (out, trace) = impute(&amputed, &spec).map_err(|e| e.to_string())?;
            let seconds = started.elapsed().as_secs_f64();
            let s = score(truth, &out, &mask).map_err(|e| e.to_string())?;
            let relative = relative_error(&s, &baseline).map_err(|e| e.to_string())?;
            let per_iteration = (!trace.iterations.is_empty()).then(|| {
                trace.iterations.iter().map(|r| r.seconds).sum::<f64>()
                    / trace.iterations.len() as f64
            });
            Ok(Outcome {
                relative,
                error: s.e_total,
                seconds,
                per_iteration,
            })
        })
        .collect()
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Execute every (dataset, cell, replicate) run and aggregate per
/// (dataset, cell, algorithm). Replicates run in parallel; all algorithms
/// of a replicate share its amputed table. The report does not depend on
/// scheduling; with `timing` off it is fully determined by the plan.
pub fn run_plan(plan: &ExperimentPlan) -> Result<BenchReport> {
    plan.validate()?;
    let specs = plan.specs()?;
    let labels: Vec<String> = plan.algorithm_labels()?;
    let cells = plan.cells();

    let mut tables = Vec::with_capacity(plan.datasets.len());
    let mut summaries = Vec::with_capacity(plan.datasets.len());
    for d in &plan.datasets {
        let t = d.source.load(plan.seed)?;
        if !t.is_complete() {
            return Err(Error::Config(format!(
                "dataset `{}` has missing cells",
                d.name
            )));
        }
        let st = dataset_stats(&t)?;
        summaries.push(DatasetSummary {
            name: d.name.clone(),
            n_rows: t.n_rows(),
            n_cols: t.n_cols(),
            rho: st.rho,
            info: st.info,
            complexity: st.complexity,
            group: String::new(),
        });
        tables.push(t);
    }
    let groups = group_labels(
        &summaries.iter().map(|s| s.rho).collect::<Vec<_>>(),
        plan.cutpoints,
    );
    for (s, g) in summaries.iter_mut().zip(groups) {
        s.group = g;
    }

    let tasks: Vec<(usize, usize, usize)> = (0..plan.datasets.len())
        .flat_map(|d| {
            (0..cells.len()).flat_map(move |c| (0..plan.replicates).map(move |r| (d, c, r)))
        })
        .collect();
    let results: Vec<Result<RunResult>> = tasks
        .par_iter()
        .map(|&(d, c, r)| {
            let rep_seed = seed::derive_all(plan.seed, &[d as u64, c as u64, r as u64]);
            let entry = &plan.datasets[d];
            let truth = if entry.fresh_per_replicate {
                entry.source.load_with(seed::derive(rep_seed, 2))?
            } else {
                tables[d].clone()
            };
            Ok(run_once(&truth, &cells[c], &specs, rep_seed))
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut results = results.into_iter();
    let mut per_key: Vec<Vec<RunResult>> = Vec::new();
    for _ in 0..plan.datasets.len() * cells.len() {
        let mut reps = Vec::with_capacity(plan.replicates);
        for _ in 0..plan.replicates {
            reps.push(results.next().expect("one result per task")?);
        }
        per_key.push(reps);
    }
    for (d, entry) in plan.datasets.iter().enumerate() {
        for (c, cell) in cells.iter().enumerate() {
            let reps = &per_key[d * cells.len() + c];
            for (a, label) in labels.iter().enumerate() {
                let mut ok = Vec::new();
                for (r, rep) in reps.iter().enumerate() {
                    match &rep[a] {
                        Ok(o) => ok.push(o),
                        Err(message) => {
                            log::warn!(
                                "{} {} {} rep {r} {label}: {message}",
                                entry.name,
                                cell.mechanism,
                                cell.gamma
                            );
                            failures.push(RunFailure {
                                dataset: entry.name.clone(),
                                mechanism: cell.mechanism,
                                gamma: cell.gamma,
                                replicate: r,
                                algorithm: label.clone(),
                                message: message.clone(),
                            });
                        }
                    }
                }
                let er: Vec<f64> = ok.iter().map(|o| o.relative).collect();
                let mean_er = mean(&er);
                let sd_er = (er.len() >= 2).then(|| {
                    let m = mean_er.unwrap();
                    (er.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (er.len() - 1) as f64).sqrt()
                });
                let per_iter: Vec<f64> = ok.iter().filter_map(|o| o.per_iteration).collect();
                rows.push(ReportRow {
                    dataset: entry.name.clone(),
                    mechanism: cell.mechanism,
                    gamma: cell.gamma,
                    algorithm: label.clone(),
                    n_runs: ok.len(),
                    n_failed: reps.len() - ok.len(),
                    mean_er,
                    sd_er,
                    se_er: sd_er.map(|s| s / (er.len() as f64).sqrt()),
                    mean_error: mean(&ok.iter().map(|o| o.error).collect::<Vec<_>>()),
                    mean_seconds: plan
                        .timing
                        .then(|| mean(&ok.iter().map(|o| o.seconds).collect::<Vec<_>>()))
                        .flatten(),
                    mean_seconds_per_iteration: plan.timing.then(|| mean(&per_iter)).flatten(),
                    group: summaries[d].group.clone(),
                });
            }
        }
    }
    Ok(BenchReport {
        format_version: REPORT_FORMAT_VERSION,
        seed: plan.seed,
        replicates: plan.replicates,
        timing: plan.timing,
        cutpoints: plan.cutpoints,
        datasets: summaries,
        rows,
        failures,
    })
}
