//! Artificial missingness (amputation) of complete tables.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::table::{CellMask, MixedTable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "MCAR")]
    Mcar,
    #[serde(rename = "MAR")]
    Mar,
    #[serde(rename = "NMAR")]
    Nmar,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Mcar => "MCAR",
            Mechanism::Mar => "MAR",
            Mechanism::Nmar => "NMAR",
        })
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MCAR" => Ok(Mechanism::Mcar),
            "MAR" => Ok(Mechanism::Mar),
            "NMAR" | "MNAR" => Ok(Mechanism::Nmar),
            _ => Err(Error::Config(format!("unknown mechanism `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissingnessSpec {
    pub mechanism: Mechanism,
    pub gamma: f64,
    pub seed: u64,
}

/// Cells made missing by an inducer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InducedMask {
    pub mask: CellMask,
    /// Induced cells per column.
    pub counts: Vec<usize>,
}

impl InducedMask {
    pub fn new(mask: CellMask) -> Self {
        let counts = (0..mask.n_cols()).map(|j| mask.column_count(j)).collect();
        InducedMask { mask, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.mask.get(row, col)
    }

    /// 0/1 indicator CSV with the table's column names as header.
    pub fn write_csv_to<W: Write>(&self, names: &[&str], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(names)?;
        for i in 0..self.mask.n_rows() {
            w.write_record(
                (0..self.mask.n_cols()).map(|j| if self.get(i, j) { "1" } else { "0" }),
            )?;
        }
        w.flush().map_err(|e| Error::io("<mask>", e))?;
        Ok(())
    }

    pub fn write_csv(&self, table: &MixedTable, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let names: Vec<&str> = table.columns().iter().map(|c| c.name()).collect();
        self.write_csv_to(&names, std::io::BufWriter::new(file))
    }

    /// Read a 0/1 indicator CSV written by [`InducedMask::write_csv`].
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let p = r.headers()?.len();
        let mut cols = vec![Vec::new(); p];
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != p {
                return Err(Error::Parse {
                    row: row + 1,
                    message: "ragged mask row".into(),
                });
            }
            for (j, cell) in rec.iter().enumerate() {
                cols[j].push(match cell {
                    "1" => true,
                    "0" => false,
                    other => {
                        return Err(Error::Parse {
                            row: row + 1,
                            message: format!("mask cell `{other}` is not 0 or 1"),
                        })
                    }
                });
            }
        }
        Ok(InducedMask::new(CellMask::from_columns(cols)))
    }
}

/// Logistic tail weight `1 / (1 + exp(-3x))`.
pub fn tail_weight(x: f64) -> f64 {
    1.0 / (1.0 + (-3.0 * x).exp())
}

fn check(table: &MixedTable, spec: &MissingnessSpec) -> Result<()> {
    if !(spec.gamma > 0.0 && spec.gamma < 1.0) {
        return Err(Error::Config(format!(
            "gamma = {} must lie in (0, 1)",
            spec.gamma
        )));
    }
    if table.n_cols() == 0 {
        return Err(Error::EmptyData);
    }
    if !table.is_complete() {
        return Err(Error::Mechanism("source table must be complete".into()));
    }
    Ok(())
}

fn apply(table: &MixedTable, mask: CellMask) -> (MixedTable, InducedMask) {
    (table.with_cells_missing(&mask), InducedMask::new(mask))
}

/// Exactly `round(gamma * n * p)` cells, uniformly without replacement.
pub fn induce_mcar(
    table: &MixedTable,
    spec: &MissingnessSpec,
) -> Result<(MixedTable, InducedMask)> {
    check(table, spec)?;
    let (n, p) = (table.n_rows(), table.n_cols());
    let count = (spec.gamma * (n * p) as f64).round() as usize;
    if count == 0 {
        return Err(Error::NoCells {
            gamma: spec.gamma,
            n_rows: n,
            n_cols: p,
        });
    }
    let mut mask = CellMask::empty(n, p);
    let mut rng = seed::rng(spec.seed);
    for cell in sample(&mut rng, n * p, count) {
        mask.set(cell % n, cell / n, true);
    }
    Ok(apply(table, mask))
}

/// Column `j` loses `round(n * gamma)` cells chosen with probability
/// proportional to the tail weight (or its complement, by a fair coin) of a
/// randomly chosen standardized donor column.
pub fn induce_mar(table: &MixedTable, spec: &MissingnessSpec) -> Result<(MixedTable, InducedMask)> {
    check(table, spec)?;
    let p = table.n_cols();
    if p < 2 {
        return Err(Error::Mechanism("MAR needs at least 2 columns".into()));
    }
    let cols = (0..p)
        .map(|j| {
            let mut rng = seed::rng(seed::derive(spec.seed, j as u64));
            let numeric: Vec<usize> = (0..p)
                .filter(|&k| k != j && table.column(k).is_numeric())
                .collect();
            let pool: Vec<usize> = if numeric.is_empty() {
                (0..p).filter(|&k| k != j).collect()
            } else {
                numeric
            };
            let donor = pool[rng.random_range(0..pool.len())];
            tail_select(table, donor, spec.gamma, &mut rng)
        })
        .collect();
    Ok(apply(table, CellMask::from_columns(cols)))
}

/// As [`induce_mar`] with every column its own donor.
pub fn induce_nmar(
    table: &MixedTable,
    spec: &MissingnessSpec,
) -> Result<(MixedTable, InducedMask)> {
    check(table, spec)?;
    let cols = (0..table.n_cols())
        .map(|j| {
            let mut rng = seed::rng(seed::derive(spec.seed, j as u64));
            tail_select(table, j, spec.gamma, &mut rng)
        })
        .collect();
    Ok(apply(table, CellMask::from_columns(cols)))
}

pub fn induce(table: &MixedTable, spec: &MissingnessSpec) -> Result<(MixedTable, InducedMask)> {
    match spec.mechanism {
        Mechanism::Mcar => induce_mcar(table, spec),
        Mechanism::Mar => induce_mar(table, spec),
        Mechanism::Nmar => induce_nmar(table, spec),
    }
}

fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd > 0.0 {
        v.iter().map(|x| (x - mean) / sd).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// Weighted sampling of `round(n * gamma)` rows without replacement using
/// exponential keys (equivalent to successive renormalized draws).
fn tail_select<R: Rng + ?Sized>(
    table: &MixedTable,
    donor: usize,
    gamma: f64,
    rng: &mut R,
) -> Vec<bool> {
    let n = table.n_rows();
    let count = (n as f64 * gamma).round() as usize;
    let upper = rng.random_bool(0.5);
    let z = standardize(table.column(donor).values());
    let mut keys: Vec<(f64, usize)> = z
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = tail_weight(x);
            let w = if upper { f } else { 1.0 - f };
            let u: f64 = rng.random::<f64>();
            let key = if w > 0.0 {
                (1.0 - u).ln() / w
            } else {
                f64::NEG_INFINITY
            };
            (key, i)
        })
        .collect();
    keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut selected = vec![false; n];
    for &(_, i) in keys.iter().take(count) {
        selected[i] = true;
    }
    selected
}
