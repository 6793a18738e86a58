use super::{Algorithm, ImputeSpec};
use crate::table::MixedTable;
use crate::{Error, Result};

/// Nearest-neighbour imputation.
///
/// Numeric columns are standardized by their observed mean and standard
/// deviation; a factor mismatch contributes 1 to the squared distance. The
/// distance between a query row and a candidate uses the columns observed in
/// both, scaled up by `observed in query / observed in both`. A missing cell
/// gets the mean (numeric) or most frequent level (factor, lowest code on
/// ties) of the `k` nearest rows observed in that column, ties in distance
/// going to the lower row index. Rows whose missing fraction exceeds
/// `rowmax`, and columns whose missing fraction exceeds `colmax`, are filled
/// with the column mean (mode for factors) instead.
pub fn impute_knn(table: &MixedTable, spec: &ImputeSpec) -> Result<MixedTable> {
    let Algorithm::Knn { k, rowmax, colmax } = spec.algorithm else {
        return Err(Error::Config("impute_knn needs a knn spec".into()));
    };
    spec.validate(table.n_cols())?;
    table.check_no_empty_columns()?;
    let (n, p) = (table.n_rows(), table.n_cols());

    let mut scaled: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut overall: Vec<f64> = Vec::with_capacity(p);
    for col in table.columns() {
        let obs: Vec<f64> = col.observed().collect();
        if col.is_numeric() {
            let mean = obs.iter().sum::<f64>() / obs.len() as f64;
            let var = obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / obs.len() as f64;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            scaled.push(col.values().iter().map(|v| (v - mean) / sd).collect());
            overall.push(mean);
        } else {
            scaled.push(col.values().to_vec());
            overall.push(mode(obs.into_iter(), col.n_levels()));
        }
    }
    let is_factor: Vec<bool> = table.columns().iter().map(|c| !c.is_numeric()).collect();
    let col_too_sparse: Vec<bool> = table
        .columns()
        .iter()
        .map(|c| c.n_missing() as f64 / n as f64 > colmax)
        .collect();

    let mut out = table.clone();
    for i in 0..n {
        let miss: Vec<usize> = (0..p).filter(|&j| table.is_missing(i, j)).collect();
        if miss.is_empty() {
            continue;
        }
        if miss.len() as f64 / p as f64 > rowmax {
            for &j in &miss {
                out.column_mut(j).set(i, overall[j]);
            }
            continue;
        }
        let query: Vec<usize> = (0..p).filter(|&j| !table.is_missing(i, j)).collect();
        let mut neighbours: Vec<(f64, usize)> = (0..n)
            .filter(|&l| l != i)
            .filter_map(|l| distance(&scaled, &is_factor, &query, i, l).map(|d| (d, l)))
            .collect();
        neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &j in &miss {
            if col_too_sparse[j] {
                out.column_mut(j).set(i, overall[j]);
                continue;
            }
            let values = table.column(j).values();
            let nearest: Vec<f64> = neighbours
                .iter()
                .map(|&(_, l)| values[l])
                .filter(|v| !v.is_nan())
                .take(k)
                .collect();
            let v = if nearest.is_empty() {
                overall[j]
            } else if is_factor[j] {
                mode(nearest.into_iter(), table.column(j).n_levels())
            } else {
                nearest.iter().sum::<f64>() / nearest.len() as f64
            };
            out.column_mut(j).set(i, v);
        }
    }
    Ok(out)
}

fn distance(
    scaled: &[Vec<f64>],
    is_factor: &[bool],
    query: &[usize],
    i: usize,
    l: usize,
) -> Option<f64> {
    let (mut sum, mut used) = (0.0, 0usize);
    for &j in query {
        let b = scaled[j][l];
        if b.is_nan() {
            continue;
        }
        let a = scaled[j][i];
        sum += if is_factor[j] {
            f64::from(u8::from(a != b))
        } else {
            (a - b) * (a - b)
        };
        used += 1;
    }
    (used > 0).then(|| (sum * query.len() as f64 / used as f64).sqrt())
}

fn mode(values: impl Iterator<Item = f64>, n_levels: usize) -> f64 {
    let mut counts = vec![0usize; n_levels];
    for v in values {
        counts[v as usize] += 1;
    }
    let mut best = 0;
    for c in 1..n_levels {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best as f64
}
