use std::time::Instant;

use rand::seq::SliceRandom;

use super::{fill, strawman_values, Algorithm, ImputationTrace, ImputeSpec, StopReason};
use crate::forest::{grow_forest_view, terminal_impute, ForestConfig, SplitRule, TrainingView};
use crate::seed;
use crate::table::{CellMask, MixedTable};
use crate::{Error, Result};

/// Random partition of `0..p` into groups of `max(1, round(alpha * p))`
/// columns (the last group may be smaller). `alpha = 0` means `1/p`. Group
/// size is capped at `p - 1` so every group keeps at least one predictor.
pub fn mforest_groups(p: usize, alpha: f64, seed: u64) -> Vec<Vec<usize>> {
    let m = if alpha == 0.0 {
        1
    } else {
        ((alpha * p as f64).round() as usize).max(1)
    };
    let m = m.min(p.saturating_sub(1)).max(1);
    let mut cols: Vec<usize> = (0..p).collect();
    cols.shuffle(&mut seed::rng(seed));
    cols.chunks(m).map(<[usize]>::to_vec).collect()
}

/// mForest imputation (`mRF_alpha`).
///
/// Each cycle partitions the columns into random groups. For each group the
/// originally missing cells of its columns are hidden, a multivariate forest
/// regresses the group on the remaining columns, and the hidden cells are
/// refilled from inbag terminal comembers. Cycles stop when the change
/// statistic increases (returning the previous table), falls below epsilon,
/// or after `max_iterations` cycles.
pub fn impute_mforest(
    table: &MixedTable,
    spec: &ImputeSpec,
) -> Result<(MixedTable, ImputationTrace)> {
    let Algorithm::MForest {
        alpha,
        epsilon,
        max_iterations,
    } = spec.algorithm
    else {
        return Err(Error::Config("impute_mforest needs an mforest spec".into()));
    };
    spec.validate(table.n_cols())?;
    table.check_no_empty_columns()?;
    let mut trace = ImputationTrace::new(&spec.algorithm);
    let missing = table.missing_mask();
    if missing.count() == 0 {
        return Ok((table.clone(), trace));
    }
    let p = table.n_cols();
    let base = spec.forest.seed;
    let fallback = strawman_values(&TrainingView::new(table), seed::derive(base, u64::MAX))?;
    let mut current = fill(table, &missing, &fallback);
    let mut last_change = f64::INFINITY;

    for cycle in 0..max_iterations {
        let started = Instant::now();
        let cycle_seed = seed::derive(base, cycle as u64);
        let mut next = current.clone();
        for (g, group) in mforest_groups(p, alpha, seed::derive(cycle_seed, 0))
            .iter()
            .enumerate()
        {
            if group.iter().all(|&j| missing.column_count(j) == 0) {
                continue;
            }
            let mut hidden = CellMask::empty(table.n_rows(), p);
            for &j in group {
                for i in missing.rows_in(j) {
                    hidden.set(i, j, true);
                }
            }
            let mut responses = group.clone();
            responses.sort_unstable();
            let config = ForestConfig {
                split_rule: SplitRule::MultivariateComposite(responses.clone()),
                seed: seed::derive(cycle_seed, g as u64 + 1),
                ..spec.forest.clone()
            };
            let view = TrainingView::with_hidden(&next, &hidden);
            let model = grow_forest_view(&view, &config, Some(&responses))?;
            next = terminal_impute(&model, &view, &hidden, false, &fallback);
        }
        let change = trace.record(started, &current, &next, &missing);
        if change > last_change {
            trace.stop_reason = StopReason::ChangeIncreased;
            return Ok((current, trace));
        }
        current = next;
        if change < epsilon {
            trace.stop_reason = StopReason::Converged;
            return Ok((current, trace));
        }
        last_change = change;
    }
    trace.stop_reason = StopReason::MaxIterations;
    Ok((current, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    #[test]
    fn group_sizes() {
        let sizes = |p, a| {
            let g = mforest_groups(p, a, 3);
            let mut all: Vec<usize> = g.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..p).collect::<Vec<_>>());
            g.iter().map(Vec::len).collect::<Vec<_>>()
        };
        assert_eq!(sizes(10, 0.1), vec![1; 10]);
        assert_eq!(sizes(10, 0.25), vec![3, 3, 3, 1]);
        assert_eq!(sizes(20, 0.05).len(), 20);
        assert_eq!(sizes(10, 0.0), vec![1; 10]);
        assert_eq!(sizes(4, 1.0), vec![3, 1]);
    }

    #[test]
    fn completes_without_touching_observed() {
        let n = 50;
        let a: Vec<Option<f64>> = (0..n).map(|i| (i % 4 != 0).then_some(i as f64)).collect();
        let b: Vec<Option<f64>> = (0..n)
            .map(|i| (i % 5 != 2).then_some(3.0 * i as f64))
            .collect();
        let f = Column::factor(
            "f",
            vec!["x".into(), "y".into()],
            (0..n).map(|i| (i % 7 != 1).then_some(u32::from(i > 25))),
        );
        let t = MixedTable::new(vec![Column::numeric("a", a), Column::numeric("b", b), f]).unwrap();
        for alpha in [0.0, 0.5, 1.0] {
            let spec = ImputeSpec::new(
                Algorithm::mforest(alpha),
                ForestConfig {
                    ntree: 10,
                    seed: 2,
                    ..Default::default()
                },
            );
            let (out, trace) = impute_mforest(&t, &spec).unwrap();
            assert!(out.is_complete());
            assert!(!trace.iterations.is_empty() && trace.iterations.len() <= 10);
            for j in 0..3 {
                for i in 0..n {
                    if let Some(v) = t.get(i, j) {
                        assert_eq!(out.get(i, j), Some(v));
                    }
                }
            }
        }
    }
}
