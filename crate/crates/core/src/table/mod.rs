//! Mixed-type tabular data with an explicit missingness mask.
//!
//! Cells are stored column-major as `f64`. Numeric columns hold the value,
//! factor columns hold the level index. A missing cell is stored as `NaN`;
//! the mask is derived from that sentinel, so `is_missing(i)` and the stored
//! value can never disagree. Observed numeric cells are always finite.

mod csv;
pub(crate) mod stats;

use serde::{Deserialize, Serialize};

pub use self::csv::{
    parse_schema, read_csv, read_csv_from, write_csv, write_csv_to, KindOverride, Schema,
};
pub use self::stats::{correlation_rho, dataset_stats, DatasetStats};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Factor { levels: Vec<String> },
}

impl ColumnKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, ColumnKind::Numeric)
    }

    pub fn n_levels(&self) -> usize {
        match self {
            ColumnKind::Numeric => 0,
            ColumnKind::Factor { levels } => levels.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Column {
    name: String,
    kind: ColumnKind,
    #[serde(with = "missing_as_null")]
    values: Vec<f64>,
}

/// Missing cells compare equal to each other.
impl PartialEq for Column {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.kind == other.kind
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

mod missing_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let cells: Vec<Option<f64>> = values.iter().map(|v| (!v.is_nan()).then_some(*v)).collect();
        cells.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let cells = Vec::<Option<f64>>::deserialize(d)?;
        Ok(cells.into_iter().map(|c| c.unwrap_or(f64::NAN)).collect())
    }
}

impl Column {
    /// Numeric column; `None` and `NaN` both become missing.
    ///
    /// Panics on an infinite value.
    pub fn numeric(name: impl Into<String>, values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let values = values
            .into_iter()
            .map(|v| match v {
                Some(x) if x.is_nan() => f64::NAN,
                Some(x) => {
                    assert!(x.is_finite(), "numeric cells must be finite");
                    x
                }
                None => f64::NAN,
            })
            .collect();
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
            values,
        }
    }

    /// Numeric column from plain values, `NaN` meaning missing.
    pub fn from_f64(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column::numeric(name, values.into_iter().map(Some))
    }

    /// Factor column from level codes. Panics if a code is out of range.
    pub fn factor(
        name: impl Into<String>,
        levels: Vec<String>,
        codes: impl IntoIterator<Item = Option<u32>>,
    ) -> Self {
        let k = levels.len() as u32;
        let values = codes
            .into_iter()
            .map(|c| match c {
                Some(c) => {
                    assert!(c < k, "level code {c} out of range for {k} levels");
                    c as f64
                }
                None => f64::NAN,
            })
            .collect();
        Column {
            name: name.into(),
            kind: ColumnKind::Factor { levels },
            values,
        }
    }

    /// Factor column from strings; levels are the sorted distinct observed values.
    pub fn factor_from_strings<S: AsRef<str>>(
        name: impl Into<String>,
        cells: impl IntoIterator<Item = Option<S>>,
    ) -> Self {
        let cells: Vec<Option<String>> = cells
            .into_iter()
            .map(|c| c.map(|s| s.as_ref().to_owned()))
            .collect();
        let levels: Vec<String> = cells
            .iter()
            .flatten()
            .cloned()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let codes = cells
            .iter()
            .map(|c| {
                c.as_ref()
                    .map(|s| levels.binary_search(s).expect("level present") as u32)
            })
            .collect::<Vec<_>>();
        Column::factor(name, levels, codes)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ColumnKind {
        &self.kind
    }

    pub fn is_numeric(&self) -> bool {
        self.kind.is_numeric()
    }

    pub fn n_levels(&self) -> usize {
        self.kind.n_levels()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Raw storage; missing cells read as `NaN`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize) -> Option<f64> {
        let v = self.values[row];
        (!v.is_nan()).then_some(v)
    }

    pub fn is_missing(&self, row: usize) -> bool {
        self.values[row].is_nan()
    }

    pub fn missing_mask(&self) -> Vec<bool> {
        self.values.iter().map(|v| v.is_nan()).collect()
    }

    pub fn n_missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied().filter(|v| !v.is_nan())
    }

    /// Level string of a factor cell, `None` when missing or numeric.
    pub fn level(&self, row: usize) -> Option<&str> {
        match (&self.kind, self.get(row)) {
            (ColumnKind::Factor { levels }, Some(code)) => Some(levels[code as usize].as_str()),
            _ => None,
        }
    }

    /// Set an observed value (a level code for factors).
    ///
    /// Panics on a non-finite value or an out-of-range level code.
    pub fn set(&mut self, row: usize, value: f64) {
        assert!(value.is_finite(), "cannot store non-finite value");
        if let ColumnKind::Factor { levels } = &self.kind {
            assert!(
                value >= 0.0 && value.fract() == 0.0 && (value as usize) < levels.len(),
                "invalid level code {value}"
            );
        }
        self.values[row] = value;
    }

    pub fn set_missing(&mut self, row: usize) {
        self.values[row] = f64::NAN;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedTable {
    n_rows: usize,
    columns: Vec<Column>,
    provenance: Option<String>,
}

impl MixedTable {
    pub fn new(columns: Vec<Column>) -> crate::Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != n_rows) {
            return Err(crate::Error::Config(format!(
                "column `{}` has {} rows, expected {n_rows}",
                bad.name,
                bad.len()
            )));
        }
        Ok(MixedTable {
            n_rows,
            columns,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, label: impl Into<String>) -> Self {
        self.provenance = Some(label.into());
        self
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut Column {
        &mut self.columns[j]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.columns[col].get(row)
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.columns[col].is_missing(row)
    }

    pub fn n_missing(&self) -> usize {
        self.columns.iter().map(Column::n_missing).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.n_missing() == 0
    }

    pub fn missing_mask(&self) -> CellMask {
        CellMask {
            n_rows: self.n_rows,
            cols: self.columns.iter().map(Column::missing_mask).collect(),
        }
    }

    /// Copy with every masked cell set to missing.
    pub fn with_cells_missing(&self, mask: &CellMask) -> Self {
        let mut out = self.clone();
        for (j, col) in out.columns.iter_mut().enumerate() {
            for i in mask.rows_in(j) {
                col.set_missing(i);
            }
        }
        out
    }

    /// Fails with `AllMissing` naming the first column that has no observed cell.
    pub fn check_no_empty_columns(&self) -> crate::Result<()> {
        match self
            .columns
            .iter()
            .find(|c| c.n_missing() == c.len() && c.len() > 0)
        {
            Some(c) => Err(crate::Error::AllMissing {
                column: c.name.clone(),
            }),
            None => Ok(()),
        }
    }
}

/// Column-major boolean cell mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellMask {
    n_rows: usize,
    cols: Vec<Vec<bool>>,
}

impl CellMask {
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        CellMask {
            n_rows,
            cols: vec![vec![false; n_rows]; n_cols],
        }
    }

    pub fn from_columns(cols: Vec<Vec<bool>>) -> Self {
        let n_rows = cols.first().map_or(0, Vec::len);
        assert!(cols.iter().all(|c| c.len() == n_rows), "ragged mask");
        CellMask { n_rows, cols }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cols[col][row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.cols[col][row] = value;
    }

    pub fn column(&self, col: usize) -> &[bool] {
        &self.cols[col]
    }

    pub fn columns(&self) -> &[Vec<bool>] {
        &self.cols
    }

    pub fn count(&self) -> usize {
        self.cols
            .iter()
            .map(|c| c.iter().filter(|&&b| b).count())
            .sum()
    }

    pub fn column_count(&self, col: usize) -> usize {
        self.cols[col].iter().filter(|&&b| b).count()
    }

    pub fn rows_in(&self, col: usize) -> impl Iterator<Item = usize> + '_ {
        self.cols[col]
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Keep only the listed columns set; all others are cleared.
    pub fn restricted_to(&self, keep: &[usize]) -> Self {
        let mut out = CellMask::empty(self.n_rows, self.cols.len());
        for &j in keep {
            out.cols[j] = self.cols[j].clone();
        }
        out
    }
}
