use rayon::prelude::*;

use super::{ForestModel, NodeKind, TrainingView};
use crate::table::{CellMask, MixedTable};

/// Impute every cell that `view` treats as missing (missing or hidden) from
/// terminal-node comembers pooled over all trees.
///
/// With `use_oob` the donors are the out-of-bag rows that fall in the same
/// terminal node; otherwise they are the node's distinct inbag rows. Only
/// donor cells usable by `view` count. Numeric cells get the pooled mean,
/// factor cells the most frequent level (lowest code on ties). Cells with an
/// empty pool fall back to the column's strawman value.
pub fn terminal_impute_otf(
    model: &ForestModel,
    view: &TrainingView,
    use_oob: bool,
    seed: u64,
) -> crate::Result<MixedTable> {
    let table = view.table;
    let mut targets = CellMask::empty(table.n_rows(), table.n_cols());
    for j in 0..table.n_cols() {
        for i in 0..table.n_rows() {
            if view.needs_value(i, j) {
                targets.set(i, j, true);
            }
        }
    }
    let fallback = crate::imputation::strawman_values(view, seed)?;
    Ok(terminal_impute(model, view, &targets, use_oob, &fallback))
}

/// As [`terminal_impute_otf`] for an explicit set of target cells, with
/// `fallback[j]` used for cells of column `j` that get no donors.
pub fn terminal_impute(
    model: &ForestModel,
    view: &TrainingView,
    targets: &CellMask,
    use_oob: bool,
    fallback: &[f64],
) -> MixedTable {
    let table = view.table;
    assert_eq!(
        model.n_rows,
        table.n_rows(),
        "model was grown on a different table"
    );
    let filled: Vec<Vec<(usize, f64)>> = (0..table.n_cols())
        .into_par_iter()
        .map(|j| impute_column(model, view, j, targets.column(j), use_oob, fallback[j]))
        .collect();
    let mut out = table.clone();
    for (j, cells) in filled.into_iter().enumerate() {
        for (i, v) in cells {
            out.column_mut(j).set(i, v);
        }
    }
    out
}

fn impute_column(
    model: &ForestModel,
    view: &TrainingView,
    j: usize,
    target: &[bool],
    use_oob: bool,
    fallback: f64,
) -> Vec<(usize, f64)> {
    let rows: Vec<usize> = (0..target.len()).filter(|&i| target[i]).collect();
    if rows.is_empty() {
        return Vec::new();
    }
    let k = view.table.column(j).n_levels();
    // Numeric: (sum, count) per target. Factor: class counts per target.
    let width = if k == 0 { 2 } else { k };
    let mut acc = vec![0.0f64; rows.len() * width];
    let value = |row: usize| view.criterion_value(j, row);

    for tree in &model.trees {
        let mut node_acc = vec![0.0f64; tree.nodes.len() * width];
        let mut add = |node: usize, v: f64| {
            if k == 0 {
                node_acc[node * 2] += v;
                node_acc[node * 2 + 1] += 1.0;
            } else {
                node_acc[node * k + v as usize] += 1.0;
            }
        };
        if use_oob {
            for (row, &node) in tree.terminal_of.iter().enumerate() {
                if tree.inbag[row] == 0 {
                    if let Some(v) = value(row) {
                        add(node as usize, v);
                    }
                }
            }
        } else {
            for (id, node) in tree.nodes.iter().enumerate() {
                if let NodeKind::Terminal { members } = &node.kind {
                    for &row in members {
                        if let Some(v) = value(row as usize) {
                            add(id, v);
                        }
                    }
                }
            }
        }
        for (t, &row) in rows.iter().enumerate() {
            let node = tree.terminal_of[row] as usize;
            for c in 0..width {
                acc[t * width + c] += node_acc[node * width + c];
            }
        }
    }

    rows.iter()
        .enumerate()
        .map(|(t, &row)| {
            let a = &acc[t * width..(t + 1) * width];
            let v = if k == 0 {
                if a[1] > 0.0 {
                    a[0] / a[1]
                } else {
                    fallback
                }
            } else {
                let mut best = 0;
                for c in 1..k {
                    if a[c] > a[best] {
                        best = c;
                    }
                }
                if a[best] > 0.0 {
                    best as f64
                } else {
                    fallback
                }
            };
            (row, v)
        })
        .collect()
}
