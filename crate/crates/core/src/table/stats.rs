use serde::{Deserialize, Serialize};

use super::MixedTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    /// Off-diagonal correlation norm; `None` when fewer than two numeric
    /// columns have nonzero variance.
    pub rho: Option<f64>,
    /// log10(n / p)
    pub info: f64,
    /// log10(n * p)
    pub complexity: f64,
}

pub fn dataset_stats(table: &MixedTable) -> Result<DatasetStats> {
    let (n, p) = (table.n_rows(), table.n_cols());
    if p == 0 {
        return Err(Error::EmptyData);
    }
    if n == 0 {
        return Err(Error::Config("table has no rows".into()));
    }
    let rho = match correlation_rho(table) {
        Ok(r) => Some(r),
        Err(Error::InsufficientColumns { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(DatasetStats {
        rho,
        info: (n as f64 / p as f64).log10(),
        complexity: (n as f64 * p as f64).log10(),
    })
}

/// Normalized off-diagonal L2 norm of the correlation matrix:
///
/// `C(p', 2)^-1 * sum_j sqrt(sum_{k<j} r_kj^2)`
///
/// over the `p'` numeric columns with nonzero variance. Each `r_kj` is the
/// Pearson correlation over rows where both columns are observed. Factor
/// columns do not participate.
pub fn correlation_rho(table: &MixedTable) -> Result<f64> {
    let eligible: Vec<usize> = (0..table.n_cols())
        .filter(|&j| {
            let col = table.column(j);
            if !col.is_numeric() {
                return false;
            }
            let mut obs = col.observed();
            let varying = match obs.next() {
                Some(first) => obs.any(|v| v != first),
                None => false,
            };
            if !varying {
                log::warn!(
                    "column `{}` has zero variance; excluded from rho",
                    col.name()
                );
            }
            varying
        })
        .collect();
    let p = eligible.len();
    if p < 2 {
        return Err(Error::InsufficientColumns { found: p });
    }
    let mut total = 0.0;
    for (jj, &j) in eligible.iter().enumerate() {
        let sq: f64 = eligible[..jj]
            .iter()
            .map(|&k| {
                let r = pairwise_pearson(table.column(k).values(), table.column(j).values());
                r * r
            })
            .sum();
        total += sq.sqrt();
    }
    let pairs = (p * (p - 1) / 2) as f64;
    Ok(total / pairs)
}

/// Pearson correlation over complete pairs; 0 when undefined on that subset.
pub(crate) fn pairwise_pearson(a: &[f64], b: &[f64]) -> f64 {
    let (mut n, mut sa, mut sb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if !x.is_nan() && !y.is_nan() {
            n += 1.0;
            sa += x;
            sb += y;
        }
    }
    if n < 2.0 {
        return 0.0;
    }
    let (ma, mb) = (sa / n, sb / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        if !x.is_nan() && !y.is_nan() {
            let (dx, dy) = (x - ma, y - mb);
            sab += dx * dy;
            saa += dx * dx;
            sbb += dy * dy;
        }
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}
