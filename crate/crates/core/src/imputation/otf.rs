use std::time::Instant;

use super::{fill, strawman_values, Algorithm, ImputationTrace, ImputeSpec, StopReason};
use crate::forest::{grow_forest_view, terminal_impute_otf, ForestConfig, SplitRule, TrainingView};
use crate::seed;
use crate::table::MixedTable;
use crate::{Error, Result};

/// On-the-fly imputation (`otf`, `otfR`).
///
/// The first forest is grown on the incomplete table, routing missing split
/// values by transient draws, and missing cells are filled from out-of-bag
/// terminal comembers. Later iterations regrow on the completed table with
/// the originally missing cells hidden from every split statistic and fill
/// them from inbag comembers.
pub fn impute_otf(table: &MixedTable, spec: &ImputeSpec) -> Result<(MixedTable, ImputationTrace)> {
    let Algorithm::Otf {
        pure_random,
        iterations,
    } = spec.algorithm
    else {
        return Err(Error::Config("impute_otf needs an otf spec".into()));
    };
    let rule = if pure_random {
        SplitRule::PureRandom
    } else {
        SplitRule::Unsupervised
    };
    let ytry = (!pure_random).then_some(1);
    run(table, spec, rule, ytry, iterations)
}

/// Unsupervised multivariate imputation (`unsv`): each candidate split is
/// scored by the composite rule over `ytry` random pseudo-responses.
pub fn impute_unsupervised(
    table: &MixedTable,
    spec: &ImputeSpec,
) -> Result<(MixedTable, ImputationTrace)> {
    let Algorithm::Unsupervised { iterations } = spec.algorithm else {
        return Err(Error::Config(
            "impute_unsupervised needs an unsv spec".into(),
        ));
    };
    if table.n_cols() < 2 {
        return Err(Error::Config(
            "unsupervised imputation needs at least 2 columns".into(),
        ));
    }
    run(
        table,
        spec,
        SplitRule::Unsupervised,
        spec.forest.ytry,
        iterations,
    )
}

fn run(
    table: &MixedTable,
    spec: &ImputeSpec,
    rule: SplitRule,
    ytry: Option<usize>,
    iterations: usize,
) -> Result<(MixedTable, ImputationTrace)> {
    table.check_no_empty_columns()?;
    let mut trace = ImputationTrace::new(&spec.algorithm);
    let missing = table.missing_mask();
    if missing.count() == 0 {
        return Ok((table.clone(), trace));
    }
    let base = spec.forest.seed;
    let strawman_seed = seed::derive(base, u64::MAX);
    let mut current = fill(
        table,
        &missing,
        &strawman_values(&TrainingView::new(table), strawman_seed)?,
    );
    for it in 0..iterations {
        let started = Instant::now();
        let config = ForestConfig {
            split_rule: rule.clone(),
            ytry,
            seed: seed::derive(base, it as u64),
            ..spec.forest.clone()
        };
        let next = if it == 0 {
            let view = TrainingView::new(table);
            let model = grow_forest_view(&view, &config, None)?;
            terminal_impute_otf(&model, &view, true, strawman_seed)?
        } else {
            let view = TrainingView::with_hidden(&current, &missing);
            let model = grow_forest_view(&view, &config, None)?;
            terminal_impute_otf(&model, &view, false, strawman_seed)?
        };
        trace.record(started, &current, &next, &missing);
        current = next;
    }
    trace.stop_reason = StopReason::IterationsDone;
    Ok((current, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    fn data(n: usize) -> MixedTable {
        let a: Vec<Option<f64>> = (0..n).map(|i| (i % 7 != 3).then_some(i as f64)).collect();
        let b: Vec<Option<f64>> = (0..n)
            .map(|i| (i % 5 != 1).then_some(2.0 * i as f64 + 1.0))
            .collect();
        let f = Column::factor(
            "f",
            vec!["lo".into(), "hi".into()],
            (0..n).map(|i| (i % 6 != 2).then_some(u32::from(i >= n / 2))),
        );
        MixedTable::new(vec![Column::numeric("a", a), Column::numeric("b", b), f]).unwrap()
    }

    fn spec(algorithm: Algorithm) -> ImputeSpec {
        ImputeSpec::new(
            algorithm,
            ForestConfig {
                ntree: 20,
                seed: 5,
                ..Default::default()
            },
        )
    }

    #[test]
    fn complete_and_non_intervening() {
        let t = data(60);
        for alg in ["otf", "otfR.2", "unsv.3"] {
            let s = spec(alg.parse().unwrap());
            let (out, trace) = crate::imputation::impute(&t, &s).unwrap();
            assert!(out.is_complete(), "{alg}");
            for j in 0..t.n_cols() {
                for i in 0..t.n_rows() {
                    if let Some(v) = t.get(i, j) {
                        assert_eq!(out.get(i, j).unwrap().to_bits(), v.to_bits());
                    }
                }
            }
            assert!(trace.iterations.iter().all(|r| r.change.is_finite()));
        }
    }

    #[test]
    fn trace_has_one_entry_per_iteration() {
        let (_, trace) = impute_otf(&data(40), &spec("otf.5".parse().unwrap())).unwrap();
        assert_eq!(trace.iterations.len(), 5);
        assert_eq!(trace.stop_reason, StopReason::IterationsDone);
    }

    #[test]
    fn complete_input_is_returned_unchanged() {
        let t = MixedTable::new(vec![
            Column::from_f64("a", vec![1.0, 2.0, 3.0]),
            Column::from_f64("b", vec![3.0, 1.0, 2.0]),
        ])
        .unwrap();
        let (out, _) = impute_otf(&t, &spec("otf.3".parse().unwrap())).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn single_node_uses_oob_comembers() {
        let t = MixedTable::new(vec![
            Column::numeric("a", vec![Some(4.0), Some(1.0), None, Some(6.0), Some(2.0)]),
            Column::from_f64("b", vec![0.0, 1.0, 2.0, 3.0, 4.0]),
        ])
        .unwrap();
        let cfg = ForestConfig {
            ntree: 1,
            nodesize: 5,
            seed: 17,
            ..Default::default()
        };
        let s = ImputeSpec::new("otf".parse().unwrap(), cfg.clone());
        let (out, _) = impute_otf(&t, &s).unwrap();
        let grown = crate::forest::grow_forest(
            &t,
            &ForestConfig {
                split_rule: SplitRule::Unsupervised,
                ytry: Some(1),
                seed: seed::derive(17, 0),
                ..cfg
            },
            None,
        )
        .unwrap();
        let donors: Vec<f64> = (0..5)
            .filter(|&i| grown.trees[0].inbag[i] == 0)
            .filter_map(|i| t.get(i, 0))
            .collect();
        let expect = if donors.is_empty() {
            3.0
        } else {
            donors.iter().sum::<f64>() / donors.len() as f64
        };
        assert_eq!(out.get(2, 0), Some(expect));
    }
}
