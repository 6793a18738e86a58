//! Missing-data imputation: strawman, proximity, on-the-fly, unsupervised,
//! mForest and a KNN baseline.
//!
//! Every algorithm returns a completed copy of its input. Cells that were
//! observed in the input are never changed.

mod knn;
mod mforest;
mod otf;
mod prox;

use std::str::FromStr;
use std::time::Instant;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::forest::{ForestConfig, TrainingView};
use crate::seed;
use crate::table::{CellMask, MixedTable};
use crate::{Error, Result};

pub use knn::impute_knn;
pub use mforest::{impute_mforest, mforest_groups};
pub use otf::{impute_otf, impute_unsupervised};
pub use prox::{impute_from_proximity, impute_proximity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    Strawman,
    Proximity {
        pure_random: bool,
        iterations: usize,
    },
    Otf {
        pure_random: bool,
        iterations: usize,
    },
    Unsupervised {
        iterations: usize,
    },
    MForest {
        alpha: f64,
        epsilon: f64,
        max_iterations: usize,
    },
    Knn {
        k: usize,
        rowmax: f64,
        colmax: f64,
    },
}

impl Algorithm {
    /// `alpha = 0` stands for `1/p` (one column per group).
    pub fn mforest(alpha: f64) -> Self {
        Algorithm::MForest {
            alpha,
            epsilon: 1e-5,
            max_iterations: 10,
        }
    }

    pub fn knn() -> Self {
        Algorithm::Knn {
            k: 10,
            rowmax: 0.5,
            colmax: 0.8,
        }
    }

    /// Short label, e.g. `otf.5`, `prxR`, `mRF0.25`.
    pub fn label(&self) -> String {
        let it = |base: &str, k: usize| {
            if k == 1 {
                base.to_string()
            } else {
                format!("{base}.{k}")
            }
        };
        match self {
            Algorithm::Strawman => "strawman".into(),
            Algorithm::Proximity {
                pure_random,
                iterations,
            } => it(if *pure_random { "prxR" } else { "prx" }, *iterations),
            Algorithm::Otf {
                pure_random,
                iterations,
            } => it(if *pure_random { "otfR" } else { "otf" }, *iterations),
            Algorithm::Unsupervised { iterations } => it("unsv", *iterations),
            Algorithm::MForest { alpha, .. } if *alpha == 0.0 => "mRF".into(),
            Algorithm::MForest { alpha, .. } => format!("mRF{alpha}"),
            Algorithm::Knn { .. } => "knn".into(),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// Parses `strawman`, `prx`, `prxR`, `otf`, `otfR`, `unsv` (each optionally
    /// followed by `.k` iterations), `mforest`/`mRF` (alpha 1/p encoded as 0),
    /// `mRF<alpha>` and `knn`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown algorithm `{s}`"));
        if let Some(alpha) = s.strip_prefix("mRF").or_else(|| s.strip_prefix("mforest")) {
            let alpha = if alpha.is_empty() {
                0.0
            } else {
                alpha.parse().map_err(|_| bad())?
            };
            return Ok(Algorithm::mforest(alpha));
        }
        let (base, iterations) = match s.split_once('.') {
            Some((b, k)) => (b, k.parse::<usize>().map_err(|_| bad())?),
            None => (s, 1),
        };
        Ok(match base {
            "strawman" if iterations == 1 => Algorithm::Strawman,
            "knn" if iterations == 1 => Algorithm::knn(),
            "prx" | "prxR" => Algorithm::Proximity {
                pure_random: base == "prxR",
                iterations,
            },
            "otf" | "otfR" => Algorithm::Otf {
                pure_random: base == "otfR",
                iterations,
            },
            "unsv" => Algorithm::Unsupervised { iterations },
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub forest: ForestConfig,
}

impl ImputeSpec {
    pub fn new(algorithm: Algorithm, forest: ForestConfig) -> Self {
        ImputeSpec { algorithm, forest }
    }

    pub fn validate(&self, n_cols: usize) -> Result<()> {
        let iterations_ok = |k: usize| {
            if k == 0 {
                Err(Error::Config("iterations must be at least 1".into()))
            } else {
                Ok(())
            }
        };
        match &self.algorithm {
            Algorithm::Strawman => Ok(()),
            Algorithm::Proximity { iterations, .. }
            | Algorithm::Otf { iterations, .. }
            | Algorithm::Unsupervised { iterations } => iterations_ok(*iterations),
            Algorithm::MForest {
                alpha,
                epsilon,
                max_iterations,
            } => {
                if !(*alpha >= 0.0 && *alpha <= 1.0) {
                    return Err(Error::Config(format!("alpha = {alpha} must lie in (0, 1]")));
                }
                if !(*epsilon > 0.0) {
                    return Err(Error::Config("epsilon must be positive".into()));
                }
                if n_cols < 2 {
                    return Err(Error::Config("mforest needs at least 2 columns".into()));
                }
                iterations_ok(*max_iterations)
            }
            Algorithm::Knn { k, rowmax, colmax } => {
                if *k == 0 {
                    return Err(Error::Config("knn needs k >= 1".into()));
                }
                if rowmax.is_nan() || colmax.is_nan() {
                    return Err(Error::Config("rowmax and colmax must be numbers".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    NothingToImpute,
    /// The requested number of iterations ran.
    IterationsDone,
    /// The change statistic fell below epsilon.
    Converged,
    /// The change statistic increased; the previous table was returned.
    ChangeIncreased,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub seconds: f64,
    /// Per-variable change from the previous imputation (the strawman fill
    /// before the first iteration); `None` for variables with nothing imputed.
    pub per_variable: Vec<Option<f64>>,
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationTrace {
    pub algorithm: String,
    pub iterations: Vec<IterationRecord>,
    pub stop_reason: StopReason,
}

impl ImputationTrace {
    fn new(algorithm: &Algorithm) -> Self {
        ImputationTrace {
            algorithm: algorithm.label(),
            iterations: Vec::new(),
            stop_reason: StopReason::NothingToImpute,
        }
    }

    fn record(
        &mut self,
        started: Instant,
        prev: &MixedTable,
        next: &MixedTable,
        cells: &CellMask,
    ) -> f64 {
        let (per_variable, change) = change_statistic(prev, next, cells);
        self.iterations.push(IterationRecord {
            iteration: self.iterations.len() + 1,
            seconds: started.elapsed().as_secs_f64(),
            per_variable,
            change,
        });
        change
    }
}

/// Distance between two imputations over `cells`: per numeric variable the
/// root mean squared difference scaled by the previous column's standard
/// deviation, per factor variable the fraction of changed cells; numeric and
/// factor means are summed.
pub fn change_statistic(
    prev: &MixedTable,
    next: &MixedTable,
    cells: &CellMask,
) -> (Vec<Option<f64>>, f64) {
    let mut per = Vec::with_capacity(prev.n_cols());
    let (mut num, mut n_num, mut fac, mut n_fac) = (0.0, 0usize, 0.0, 0usize);
    for j in 0..prev.n_cols() {
        let rows: Vec<usize> = cells.rows_in(j).collect();
        if rows.is_empty() {
            per.push(None);
            continue;
        }
        let old = prev.column(j).values();
        let new = next.column(j).values();
        let d = if prev.column(j).is_numeric() {
            let msd =
                rows.iter().map(|&i| (new[i] - old[i]).powi(2)).sum::<f64>() / rows.len() as f64;
            let mean = old.iter().sum::<f64>() / old.len() as f64;
            let var = old.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / old.len() as f64;
            let d = if var > 0.0 {
                (msd / var).sqrt()
            } else {
                msd.sqrt()
            };
            num += d;
            n_num += 1;
            d
        } else {
            let d = rows.iter().filter(|&&i| new[i] != old[i]).count() as f64 / rows.len() as f64;
            fac += d;
            n_fac += 1;
            d
        };
        per.push(Some(d));
    }
    let mean = |s: f64, k: usize| if k > 0 { s / k as f64 } else { 0.0 };
    (per, mean(num, n_num) + mean(fac, n_fac))
}

fn check_columns(table: &MixedTable) -> Result<()> {
    table.check_no_empty_columns()
}

/// Per-column strawman values from the cells `view` can use: the median of
/// a numeric column, the most frequent level of a factor (ties drawn with a
/// per-column seeded generator).
pub fn strawman_values(view: &TrainingView, seed: u64) -> Result<Vec<f64>> {
    let table = view.table;
    (0..table.n_cols())
        .map(|j| {
            let col = table.column(j);
            let obs: Vec<f64> = (0..table.n_rows())
                .filter_map(|i| view.criterion_value(j, i))
                .collect();
            if obs.is_empty() {
                return Err(Error::AllMissing {
                    column: col.name().to_string(),
                });
            }
            Ok(if col.is_numeric() {
                median(obs)
            } else {
                let mut counts = vec![0usize; col.n_levels()];
                for v in obs {
                    counts[v as usize] += 1;
                }
                let top = *counts.iter().max().unwrap();
                let tied: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] == top).collect();
                let mut rng = seed::rng(seed::derive(seed, j as u64));
                *tied.choose(&mut rng).unwrap() as f64
            })
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn fill(table: &MixedTable, cells: &CellMask, values: &[f64]) -> MixedTable {
    let mut out = table.clone();
    for j in 0..table.n_cols() {
        for i in cells.rows_in(j) {
            out.column_mut(j).set(i, values[j]);
        }
    }
    out
}

/// Fill numeric cells with the column median and factor cells with the mode.
pub fn strawman(table: &MixedTable, seed: u64) -> Result<MixedTable> {
    check_columns(table)?;
    let values = strawman_values(&TrainingView::new(table), seed)?;
    Ok(fill(table, &table.missing_mask(), &values))
}

/// Run the algorithm named by `spec`.
pub fn impute(table: &MixedTable, spec: &ImputeSpec) -> Result<(MixedTable, ImputationTrace)> {
    spec.validate(table.n_cols())?;
    check_columns(table)?;
    match &spec.algorithm {
        Algorithm::Strawman => {
            let mut trace = ImputationTrace::new(&spec.algorithm);
            let started = Instant::now();
            let out = strawman(table, spec.forest.seed)?;
            let mask = table.missing_mask();
            if mask.count() > 0 {
                trace.record(started, &out, &out, &mask);
                trace.stop_reason = StopReason::IterationsDone;
            }
            Ok((out, trace))
        }
        Algorithm::Proximity { .. } => impute_proximity(table, spec),
        Algorithm::Otf { .. } => impute_otf(table, spec),
        Algorithm::Unsupervised { .. } => impute_unsupervised(table, spec),
        Algorithm::MForest { .. } => impute_mforest(table, spec),
        Algorithm::Knn { .. } => Ok((impute_knn(table, spec)?, {
            let mut t = ImputationTrace::new(&spec.algorithm);
            if !table.is_complete() {
                t.stop_reason = StopReason::IterationsDone;
            }
            t
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    #[test]
    fn strawman_examples() {
        let t = MixedTable::new(vec![
            Column::numeric("x", vec![Some(1.0), None, Some(3.0), Some(8.0)]),
            Column::factor(
                "f",
                vec!["a".into(), "b".into()],
                vec![Some(0), Some(0), Some(1), None],
            ),
        ])
        .unwrap();
        let out = strawman(&t, 0).unwrap();
        assert_eq!(out.get(1, 0), Some(3.0));
        assert_eq!(out.get(3, 1), Some(0.0));
    }

    #[test]
    fn strawman_factor_tie_is_seeded() {
        let f = Column::factor(
            "f",
            vec!["a".into(), "b".into()],
            vec![Some(0), Some(1), None],
        );
        let t = MixedTable::new(vec![f]).unwrap();
        let mut seen = [false; 2];
        for s in 0..40 {
            let a = strawman(&t, s).unwrap().get(2, 0).unwrap();
            assert_eq!(strawman(&t, s).unwrap().get(2, 0).unwrap(), a);
            seen[a as usize] = true;
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn all_missing_column_is_named() {
        let t = MixedTable::new(vec![
            Column::numeric("ok", vec![Some(1.0), Some(2.0)]),
            Column::numeric("gone", vec![None, None]),
        ])
        .unwrap();
        match strawman(&t, 0) {
            Err(Error::AllMissing { column }) => assert_eq!(column, "gone"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn labels_round_trip() {
        for s in [
            "strawman", "prx", "prxR.5", "otf", "otfR.3", "unsv.5", "mRF0.1", "mRF", "knn",
        ] {
            assert_eq!(s.parse::<Algorithm>().unwrap().label(), s);
        }
        assert!("bogus".parse::<Algorithm>().is_err());
    }
}
