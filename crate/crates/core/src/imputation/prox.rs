use std::time::Instant;

use super::{fill, strawman_values, Algorithm, ImputationTrace, ImputeSpec, StopReason};
use crate::forest::{
    grow_forest, proximity, ForestConfig, ProximityMatrix, SplitRule, TrainingView,
};
use crate::seed;
use crate::table::{CellMask, MixedTable};
use crate::{Error, Result};

/// Proximity imputation (`prx`, `prxR`): strawman fill, then `k` rounds of
/// growing a forest on the completed table and replacing each originally
/// missing cell by a proximity-weighted summary of the observed cells.
pub fn impute_proximity(
    table: &MixedTable,
    spec: &ImputeSpec,
) -> Result<(MixedTable, ImputationTrace)> {
    let Algorithm::Proximity {
        pure_random,
        iterations,
    } = spec.algorithm
    else {
        return Err(Error::Config("impute_proximity needs a prx spec".into()));
    };
    table.check_no_empty_columns()?;
    let mut trace = ImputationTrace::new(&spec.algorithm);
    let missing = table.missing_mask();
    if missing.count() == 0 {
        return Ok((table.clone(), trace));
    }
    let base = spec.forest.seed;
    let fallback = strawman_values(&TrainingView::new(table), seed::derive(base, u64::MAX))?;
    let mut current = fill(table, &missing, &fallback);
    let (rule, ytry) = if pure_random {
        (SplitRule::PureRandom, None)
    } else {
        (SplitRule::Unsupervised, Some(1))
    };
    for it in 0..iterations {
        let started = Instant::now();
        let config = ForestConfig {
            split_rule: rule.clone(),
            ytry,
            seed: seed::derive(base, it as u64),
            ..spec.forest.clone()
        };
        let model = grow_forest(&current, &config, None)?;
        let prox = proximity(&model);
        let next = impute_from_proximity(table, &current, &missing, &prox, &fallback);
        trace.record(started, &current, &next, &missing);
        current = next;
    }
    trace.stop_reason = StopReason::IterationsDone;
    Ok((current, trace))
}

/// One proximity update of the `missing` cells of `current`, using the
/// observed cells of `original` as donors.
///
/// Numeric cells get `sum_l prox(i,l) x_lj / sum_l prox(i,l)`; factor cells
/// the level with the largest average proximity to its observed rows (lowest
/// code on ties). Cells with no positive proximity get `fallback[j]`.
pub fn impute_from_proximity(
    original: &MixedTable,
    current: &MixedTable,
    missing: &CellMask,
    prox: &ProximityMatrix,
    fallback: &[f64],
) -> MixedTable {
    let mut out = current.clone();
    for j in 0..original.n_cols() {
        let col = original.column(j);
        let observed: Vec<(usize, f64)> = (0..original.n_rows())
            .filter_map(|l| col.get(l).map(|v| (l, v)))
            .collect();
        let k = col.n_levels();
        let mut class_size = vec![0usize; k];
        for &(_, v) in &observed {
            if k > 0 {
                class_size[v as usize] += 1;
            }
        }
        for i in missing.rows_in(j) {
            let value = if k == 0 {
                let (mut num, mut den) = (0.0, 0.0);
                for &(l, v) in &observed {
                    let w = prox.normalized(i, l);
                    num += w * v;
                    den += w;
                }
                if den > 0.0 {
                    num / den
                } else {
                    fallback[j]
                }
            } else {
                let mut sums = vec![0.0; k];
                for &(l, v) in &observed {
                    sums[v as usize] += prox.normalized(i, l);
                }
                let mut best: Option<(usize, f64)> = None;
                for c in 0..k {
                    if class_size[c] == 0 {
                        continue;
                    }
                    let avg = sums[c] / class_size[c] as f64;
                    if avg > 0.0 && best.is_none_or(|(_, b)| avg > b) {
                        best = Some((c, avg));
                    }
                }
                best.map_or(fallback[j], |(c, _)| c as f64)
            };
            out.column_mut(j).set(i, value);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    fn uniform(n: usize) -> ProximityMatrix {
        ProximityMatrix {
            n,
            co_terminal: vec![1; n * n],
            co_inbag: vec![1; n * n],
        }
    }

    #[test]
    fn uniform_proximity_gives_column_mean() {
        let t = MixedTable::new(vec![Column::numeric(
            "x",
            vec![Some(1.0), None, Some(2.0), Some(6.0)],
        )])
        .unwrap();
        let mask = t.missing_mask();
        let out =
            impute_from_proximity(&t, &t.with_cells_missing(&mask), &mask, &uniform(4), &[0.0]);
        assert_eq!(out.get(1, 0), Some(3.0));
    }

    #[test]
    fn single_neighbour_is_copied() {
        let t =
            MixedTable::new(vec![Column::numeric("x", vec![Some(1.0), None, Some(2.0)])]).unwrap();
        let mask = t.missing_mask();
        let mut p = ProximityMatrix {
            n: 3,
            co_terminal: vec![0; 9],
            co_inbag: vec![1; 9],
        };
        p.co_terminal[3 + 2] = 1;
        p.co_terminal[2 * 3 + 1] = 1;
        let out = impute_from_proximity(&t, &t, &mask, &p, &[9.0]);
        assert_eq!(out.get(1, 0), Some(2.0));
        let zero = ProximityMatrix {
            n: 3,
            co_terminal: vec![0; 9],
            co_inbag: vec![1; 9],
        };
        assert_eq!(
            impute_from_proximity(&t, &t, &mask, &zero, &[9.0]).get(1, 0),
            Some(9.0)
        );
    }

    #[test]
    fn factor_uses_largest_average_proximity() {
        let f = Column::factor(
            "f",
            vec!["a".into(), "b".into()],
            vec![Some(0), Some(0), Some(1), None],
        );
        let t = MixedTable::new(vec![f]).unwrap();
        let mask = t.missing_mask();
        let mut p = ProximityMatrix {
            n: 4,
            co_terminal: vec![0; 16],
            co_inbag: vec![10; 16],
        };
        // a: (6 + 0) / 2 = 0.3 ; b: 4 / 1 = 0.4
        p.co_terminal[3 * 4] = 6;
        p.co_terminal[3 * 4 + 2] = 4;
        let out = impute_from_proximity(&t, &t, &mask, &p, &[0.0]);
        assert_eq!(out.get(3, 0), Some(1.0));
    }
}
