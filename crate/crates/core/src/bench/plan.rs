use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::simulate::{equicorrelated, simulate_with, SimulationConfig};
use crate::forest::ForestConfig;
use crate::imputation::ImputeSpec;
use crate::missingness::Mechanism;
use crate::table::{parse_schema, read_csv, MixedTable};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: Option<PathBuf>,
    },
    Simulate {
        n: usize,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        config: SimulationConfig,
    },
    Equicorrelated {
        n: usize,
        p: usize,
        r: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl DatasetSource {
    /// Load with the source's own seed, or `plan_seed` when it has none.
    pub fn load(&self, plan_seed: u64) -> Result<MixedTable> {
        match self {
            DatasetSource::Csv { path, schema } => {
                let schema = match schema {
                    Some(p) => Some(parse_schema(
                        &std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
                    )?),
                    None => None,
                };
                read_csv(path, schema.as_ref())
            }
            DatasetSource::Simulate { seed, .. } | DatasetSource::Equicorrelated { seed, .. } => {
                self.load_with(seed.unwrap_or(plan_seed))
            }
        }
    }

    /// Load a generator source with an explicit seed; files ignore it.
    pub fn load_with(&self, seed: u64) -> Result<MixedTable> {
        match self {
            DatasetSource::Csv { .. } => self.load(seed),
            DatasetSource::Simulate { n, config, .. } => simulate_with(*n, seed, config),
            DatasetSource::Equicorrelated { n, p, r, .. } => equicorrelated(*n, *p, *r, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub source: DatasetSource,
    /// Draw a new table from a generator source for every replicate.
    #[serde(default)]
    pub fresh_per_replicate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mechanism: Mechanism,
    pub gamma: f64,
}

/// The 3 x 3 mechanism by missing-fraction grid.
pub fn default_cells() -> Vec<Cell> {
    [Mechanism::Mcar, Mechanism::Mar, Mechanism::Nmar]
        .into_iter()
        .flat_map(|mechanism| [0.25, 0.5, 0.75].map(|gamma| Cell { mechanism, gamma }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgorithmEntry {
    /// A label such as `otf.5` or `mRF0.25`, run with the plan's forest config.
    Label(String),
    Spec(ImputeSpec),
}

fn default_replicates() -> usize {
    1
}

fn default_cutpoints() -> (f64, f64) {
    (50.0, 75.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub datasets: Vec<DatasetEntry>,
    /// Defaults to the 3 x 3 grid when absent.
    #[serde(default)]
    pub cells: Option<Vec<Cell>>,
    pub algorithms: Vec<AlgorithmEntry>,
    #[serde(default)]
    pub forest: ForestConfig,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub timing: bool,
    #[serde(default = "default_cutpoints")]
    pub cutpoints: (f64, f64),
}

impl ExperimentPlan {
    pub fn cells(&self) -> Vec<Cell> {
        self.cells.clone().unwrap_or_else(default_cells)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.datasets.is_empty() {
            return Err(Error::Config("plan has no datasets".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("plan has no algorithms".into()));
        }
        let cells = self.cells();
        if cells.is_empty() {
            return Err(Error::Config("plan has no cells".into()));
        }
        if let Some(c) = cells.iter().find(|c| !(c.gamma > 0.0 && c.gamma < 1.0)) {
            return Err(Error::Config(format!(
                "gamma = {} must lie in (0, 1)",
                c.gamma
            )));
        }
        let mut names: Vec<&str> = self.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("dataset names must be unique".into()));
        }
        Ok(())
    }

    pub fn specs(&self) -> Result<Vec<ImputeSpec>> {
        self.algorithms
            .iter()
            .map(|a| match a {
                AlgorithmEntry::Label(l) => Ok(ImputeSpec::new(l.parse()?, self.forest.clone())),
                AlgorithmEntry::Spec(s) => Ok(s.clone()),
            })
            .collect()
    }

    pub fn algorithm_labels(&self) -> Result<Vec<String>> {
        self.algorithms
            .iter()
            .map(|a| match a {
                AlgorithmEntry::Label(l) => Ok(l.clone()),
                AlgorithmEntry::Spec(s) => Ok(s.algorithm.label()),
            })
            .collect()
    }

    /// Parse a JSON plan, or the line-based text form:
    ///
    /// ```text
    /// # comment
    /// dataset sim100 simulate n=100 seed=1 [fresh]
    /// dataset corr equicorrelated n=500 p=10 r=0.9 [seed=2] [fresh]
    /// dataset mine csv data.csv [schema=types.txt]
    /// cell MCAR 0.25
    /// algorithms strawman otf otf.5 prxR.5 mRF0.1 knn
    /// replicates 50
    /// seed 7
    /// timing true
    /// ntree 100          # also mtry, nodesize, nsplit, ytry
    /// cutpoints 50 75
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        let mut plan = ExperimentPlan {
            datasets: Vec::new(),
            cells: None,
            algorithms: Vec::new(),
            forest: ForestConfig::default(),
            replicates: 1,
            seed: 0,
            timing: false,
            cutpoints: default_cutpoints(),
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::Parse {
                row: lineno + 1,
                message: format!("{m}: `{line}`"),
            };
            let words: Vec<&str> = line.split_whitespace().collect();
            let num = |w: Option<&&str>| -> Result<f64> {
                w.and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("expected a number"))
            };
            let count = |w: Option<&&str>| -> Result<usize> {
                w.and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("expected a count"))
            };
            match words[0] {
                "dataset" => {
                    let (name, kind) = match (words.get(1), words.get(2)) {
                        (Some(n), Some(k)) => (n.to_string(), *k),
                        _ => return Err(err("dataset needs a name and a kind")),
                    };
                    let mut fresh = false;
                    let mut kv = std::collections::HashMap::new();
                    let mut positional = Vec::new();
                    for w in &words[3..] {
                        match w.split_once('=') {
                            Some((k, v)) => {
                                kv.insert(k, v);
                            }
                            None if *w == "fresh" => fresh = true,
                            None => positional.push(*w),
                        }
                    }
                    let get = |k: &str| kv.get(k).copied();
                    let parse_u64 = |k: &str| -> Result<Option<u64>> {
                        get(k)
                            .map(|v| v.parse().map_err(|_| err("bad seed")))
                            .transpose()
                    };
                    let source = match kind {
                        "csv" => DatasetSource::Csv {
                            path: positional
                                .first()
                                .ok_or_else(|| err("csv needs a path"))?
                                .into(),
                            schema: get("schema").map(PathBuf::from),
                        },
                        "simulate" => DatasetSource::Simulate {
                            n: count(get("n").as_ref())?,
                            seed: parse_u64("seed")?,
                            config: SimulationConfig {
                                noise_sd: get("noise_sd").map_or(Ok(0.5), |v| num(Some(&v)))?,
                                ..SimulationConfig::default()
                            },
                        },
                        "equicorrelated" => DatasetSource::Equicorrelated {
                            n: count(get("n").as_ref())?,
                            p: count(get("p").as_ref())?,
                            r: num(get("r").as_ref())?,
                            seed: parse_u64("seed")?,
                        },
                        _ => return Err(err("unknown dataset kind")),
                    };
                    plan.datasets.push(DatasetEntry {
                        name,
                        source,
                        fresh_per_replicate: fresh,
                    });
                }
                "cell" => {
                    let mechanism: Mechanism = words
                        .get(1)
                        .ok_or_else(|| err("cell needs a mechanism"))?
                        .parse()?;
                    let gamma = num(words.get(2))?;
                    plan.cells
                        .get_or_insert_with(Vec::new)
                        .push(Cell { mechanism, gamma });
                }
                "algorithms" | "algorithm" => {
                    plan.algorithms.extend(
                        words[1..]
                            .iter()
                            .map(|w| AlgorithmEntry::Label(w.to_string())),
                    );
                }
                "replicates" => plan.replicates = count(words.get(1))?,
                "seed" => {
                    plan.seed = words
                        .get(1)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err("bad seed"))?;
                }
                "timing" => {
                    plan.timing = words
                        .get(1)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err("expected true/false"))?;
                }
                "ntree" => plan.forest.ntree = count(words.get(1))?,
                "mtry" => plan.forest.mtry = Some(count(words.get(1))?),
                "nodesize" => plan.forest.nodesize = count(words.get(1))?,
                "nsplit" => plan.forest.nsplit = count(words.get(1))?,
                "ytry" => plan.forest.ytry = Some(count(words.get(1))?),
                "cutpoints" => plan.cutpoints = (num(words.get(1))?, num(words.get(2))?),
                _ => return Err(err("unknown plan directive")),
            }
        }
        for a in &plan.algorithms {
            if let AlgorithmEntry::Label(l) = a {
                l.parse::<crate::imputation::Algorithm>()?;
            }
        }
        Ok(plan)
    }
}
