//! Imputation accuracy against ground truth.

use serde::{Deserialize, Serialize};

use crate::missingness::InducedMask;
use crate::table::MixedTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Nominal,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableScore {
    pub column: usize,
    pub name: String,
    pub kind: VariableKind,
    pub n_masked: usize,
    /// Standardized RMSE (nominal) or misclassification rate (categorical).
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub column: usize,
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationScore {
    pub e_nominal: f64,
    pub e_categorical: f64,
    pub e_total: f64,
    /// `100 * e_total / e_total(strawman)` once a baseline is attached.
    pub e_relative: Option<f64>,
    pub per_variable: Vec<VariableScore>,
    pub excluded: Vec<Excluded>,
}

impl ImputationScore {
    pub fn with_baseline(mut self, baseline: &ImputationScore) -> Result<Self> {
        self.e_relative = Some(relative_error(&self, baseline)?);
        Ok(self)
    }
}

/// Score `imputed` against `truth` over the cells of `mask`.
///
/// Numeric variable `j` contributes
/// `sqrt(sum (x* - x)^2 / sum (x - mean)^2)` over its masked cells, with the
/// mean taken over the masked truth values; factor variables contribute the
/// fraction of masked cells imputed wrongly. Each kind is averaged over its
/// variables and the two averages are summed. Variables with at most one
/// masked cell, or constant masked truth, are excluded.
pub fn score(
    truth: &MixedTable,
    imputed: &MixedTable,
    mask: &InducedMask,
) -> Result<ImputationScore> {
    let (n, p) = (truth.n_rows(), truth.n_cols());
    if imputed.n_rows() != n
        || imputed.n_cols() != p
        || mask.mask.n_rows() != n
        || mask.mask.n_cols() != p
    {
        return Err(Error::Incongruent("shapes differ".into()));
    }
    let mut per_variable = Vec::new();
    let mut excluded = Vec::new();
    for j in 0..p {
        let (tc, ic) = (truth.column(j), imputed.column(j));
        if tc.kind() != ic.kind() {
            return Err(Error::Incongruent(format!("column {j} kinds differ")));
        }
        let rows: Vec<usize> = mask.mask.rows_in(j).collect();
        let mut pairs = Vec::with_capacity(rows.len());
        for &i in &rows {
            match (tc.get(i), ic.get(i)) {
                (Some(t), Some(v)) => pairs.push((t, v)),
                (None, _) => {
                    return Err(Error::Incongruent(format!("truth missing at ({i}, {j})")))
                }
                (_, None) => {
                    return Err(Error::Incongruent(format!("imputed missing at ({i}, {j})")))
                }
            }
        }
        let exclude = |reason: &str| {
            log::warn!("excluding `{}` from the score: {reason}", tc.name());
            Excluded {
                column: j,
                name: tc.name().to_string(),
                reason: reason.to_string(),
            }
        };
        if pairs.len() <= 1 {
            if !pairs.is_empty() {
                excluded.push(exclude("only one masked cell"));
            }
            continue;
        }
        let m = pairs.len() as f64;
        let (kind, error) = if tc.is_numeric() {
            let mean = pairs.iter().map(|(t, _)| t).sum::<f64>() / m;
            let num = pairs.iter().map(|(t, v)| (v - t).powi(2)).sum::<f64>() / m;
            let den = pairs.iter().map(|(t, _)| (t - mean).powi(2)).sum::<f64>() / m;
            if den == 0.0 {
                excluded.push(exclude("constant truth over masked cells"));
                continue;
            }
            (VariableKind::Nominal, (num / den).sqrt())
        } else {
            let wrong = pairs.iter().filter(|(t, v)| t != v).count();
            (VariableKind::Categorical, wrong as f64 / m)
        };
        per_variable.push(VariableScore {
            column: j,
            name: tc.name().to_string(),
            kind,
            n_masked: pairs.len(),
            error,
        });
    }
    let mean_of = |k: VariableKind| {
        let v: Vec<f64> = per_variable
            .iter()
            .filter(|s| s.kind == k)
            .map(|s| s.error)
            .collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let e_nominal = mean_of(VariableKind::Nominal);
    let e_categorical = mean_of(VariableKind::Categorical);
    Ok(ImputationScore {
        e_nominal,
        e_categorical,
        e_total: e_nominal + e_categorical,
        e_relative: None,
        per_variable,
        excluded,
    })
}

/// `100 * E(I) / E(S)`.
pub fn relative_error(score_i: &ImputationScore, score_s: &ImputationScore) -> Result<f64> {
    if !(score_s.e_total > 0.0) {
        return Err(Error::DegenerateBaseline);
    }
    Ok(100.0 * (score_i.e_total / score_s.e_total))
}
