#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rfimpute::forest::ForestConfig;
use rfimpute::imputation::{Algorithm, ImputeSpec};
use rfimpute::seed;
use rfimpute::table::{Column, MixedTable};

/// Mixed table with correlated numeric columns, a couple of factors and no
/// missing cells.
pub fn mixed_table(n: usize, seed_value: u64) -> MixedTable {
    let mut rng = seed::rng(seed_value);
    let z: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let mut noisy = |scale: f64, shift: f64| -> Vec<f64> {
        z.iter()
            .map(|&v| shift + scale * (v + 0.5 * normal(&mut rng)))
            .collect()
    };
    let a = noisy(1.0, 0.0);
    let b = noisy(3.0, 10.0);
    let c = noisy(0.5, -2.0);
    let f: Vec<Option<&str>> = z
        .iter()
        .map(|&v| {
            Some(if v < -0.4 {
                "lo"
            } else if v < 0.4 {
                "mid"
            } else {
                "hi"
            })
        })
        .collect();
    let g: Vec<Option<&str>> = (0..n)
        .map(|_| Some(if rng.random_bool(0.5) { "x" } else { "y" }))
        .collect();
    MixedTable::new(vec![
        Column::from_f64("a", a),
        Column::from_f64("b", b),
        Column::factor_from_strings("f", f),
        Column::from_f64("c", c),
        Column::factor_from_strings("g", g),
    ])
    .unwrap()
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Blank out cells independently with probability `rate`, keeping at least
/// one observed value per column.
pub fn punch_holes(table: &MixedTable, rate: f64, seed_value: u64) -> MixedTable {
    let mut rng = seed::rng(seed_value);
    let mut out = table.clone();
    for j in 0..out.n_cols() {
        for i in 0..out.n_rows() {
            if rng.random_bool(rate) {
                out.column_mut(j).set_missing(i);
            }
        }
        if out.column(j).n_missing() == out.n_rows() {
            let v = table.column(j).values()[0];
            out.column_mut(j).set(0, v);
        }
    }
    out
}

pub fn small_forest(ntree: usize, seed_value: u64) -> ForestConfig {
    ForestConfig {
        ntree,
        nsplit: 5,
        seed: seed_value,
        ..ForestConfig::default()
    }
}

/// One spec of every algorithm family.
pub fn all_algorithms(ntree: usize, seed_value: u64) -> Vec<ImputeSpec> {
    let forest = small_forest(ntree, seed_value);
    [
        Algorithm::Strawman,
        Algorithm::Proximity {
            pure_random: false,
            iterations: 2,
        },
        Algorithm::Proximity {
            pure_random: true,
            iterations: 2,
        },
        Algorithm::Otf {
            pure_random: false,
            iterations: 2,
        },
        Algorithm::Otf {
            pure_random: true,
            iterations: 1,
        },
        Algorithm::Unsupervised { iterations: 2 },
        Algorithm::mforest(0.4),
        Algorithm::knn(),
    ]
    .into_iter()
    .map(|a| ImputeSpec::new(a, forest.clone()))
    .collect()
}

/// Pearson correlation over rows where both are observed.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .map(|(&a, &b)| (a, b))
        .collect();
    let m = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / m;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in &pairs {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation.
pub fn sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

/// Every cut between consecutive distinct values, at the midpoint, with the
/// criterion evaluated by direct summation over the rows on each side.
fn cuts(x: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = x.to_vec();
    d.sort_by(f64::total_cmp);
    d.dedup();
    d.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Squared-error split by enumeration: `(threshold, D)` pairs in cut order.
pub fn squared_error_table(y: &[f64], x: &[f64]) -> Vec<(f64, f64)> {
    let n = y.len() as f64;
    let ss = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|a| (a - m).powi(2)).sum::<f64>()
    };
    cuts(x)
        .into_iter()
        .map(|s| {
            let left: Vec<f64> = (0..y.len()).filter(|&i| x[i] <= s).map(|i| y[i]).collect();
            let right: Vec<f64> = (0..y.len()).filter(|&i| x[i] > s).map(|i| y[i]).collect();
            (s, (ss(&left) + ss(&right)) / n)
        })
        .collect()
}

/// Gini split by enumeration: `(threshold, G)` pairs in cut order.
pub fn gini_table(y: &[u32], k: usize, x: &[f64]) -> Vec<(f64, f64)> {
    cuts(x)
        .into_iter()
        .map(|s| {
            let mut g = 0.0;
            for side in [true, false] {
                let rows: Vec<usize> = (0..y.len()).filter(|&i| (x[i] <= s) == side).collect();
                let m = rows.len() as f64;
                for class in 0..k as u32 {
                    let c = rows.iter().filter(|&&i| y[i] == class).count() as f64;
                    g += c * c / m;
                }
            }
            (s, g)
        })
        .collect()
}

/// Error of an imputation written out term by term: for each numeric
/// variable `sqrt(sum 1_ij (x*_ij - x_ij)^2 / sum 1_ij (x_ij - xbar_j)^2)`
/// with `xbar_j` the mean of the masked truth cells, for each factor the
/// misclassification rate over its masked cells; numeric and factor averages
/// are summed. Variables with fewer than two masked cells or constant masked
/// truth are left out.
pub fn error_oracle(truth: &MixedTable, imputed: &MixedTable, mask: &[Vec<bool>]) -> f64 {
    let (mut nom, mut cat) = (Vec::new(), Vec::new());
    for j in 0..truth.n_cols() {
        let rows: Vec<usize> = (0..truth.n_rows()).filter(|&i| mask[j][i]).collect();
        if rows.len() < 2 {
            continue;
        }
        let x = |i: usize| truth.get(i, j).unwrap();
        let xs = |i: usize| imputed.get(i, j).unwrap();
        if truth.column(j).is_numeric() {
            let xbar = rows.iter().map(|&i| x(i)).sum::<f64>() / rows.len() as f64;
            let mut top = 0.0;
            let mut bottom = 0.0;
            for &i in &rows {
                top += (xs(i) - x(i)) * (xs(i) - x(i));
                bottom += (x(i) - xbar) * (x(i) - xbar);
            }
            if bottom > 0.0 {
                nom.push((top / bottom).sqrt());
            }
        } else {
            let wrong = rows.iter().filter(|&&i| xs(i) != x(i)).count();
            cat.push(wrong as f64 / rows.len() as f64);
        }
    }
    let avg = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    avg(&nom) + avg(&cat)
}

/// Random truth, imputation and mask for the metric oracle.
pub fn metric_instance(
    n: usize,
    p: usize,
    seed_value: u64,
) -> (MixedTable, MixedTable, Vec<Vec<bool>>) {
    let mut rng = seed::rng(seed_value);
    let mut truth = Vec::new();
    let mut imputed = Vec::new();
    let mut mask = Vec::new();
    for j in 0..p {
        let m: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        if j % 3 == 2 {
            let t: Vec<Option<u32>> = (0..n).map(|_| Some(rng.random_range(0..3))).collect();
            let i: Vec<Option<u32>> = t
                .iter()
                .map(|c| {
                    if rng.random_bool(0.6) {
                        *c
                    } else {
                        Some(rng.random_range(0..3))
                    }
                })
                .collect();
            let levels: Vec<String> = ["p", "q", "r"].iter().map(|s| s.to_string()).collect();
            truth.push(Column::factor(format!("f{j}"), levels.clone(), t));
            imputed.push(Column::factor(format!("f{j}"), levels, i));
        } else {
            let scale = rng.random_range(0.1..100.0);
            let t: Vec<f64> = (0..n).map(|_| scale * normal(&mut rng)).collect();
            let i: Vec<f64> = t
                .iter()
                .map(|v| v + scale * 0.5 * normal(&mut rng))
                .collect();
            truth.push(Column::from_f64(format!("x{j}"), t));
            imputed.push(Column::from_f64(format!("x{j}"), i));
        }
        mask.push(m);
    }
    (
        MixedTable::new(truth).unwrap(),
        MixedTable::new(imputed).unwrap(),
        mask,
    )
}
