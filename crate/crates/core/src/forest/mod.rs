//! Randomized tree ensembles over mixed tables with missing data.
//!
//! Trees are grown on bootstrap samples with `mtry` random candidate
//! variables per node. Split statistics only ever see observed cells. When a
//! case is missing the chosen split variable it is routed by a value drawn
//! from the node's observed inbag values (on-the-fly imputation); the draw is
//! transient and the table is never modified.
//!
//! Each tree (and each node within it) has its own random stream derived
//! from the forest seed, so a forest is bit-identical regardless of how many
//! worker threads grow it.

mod proximity;
pub mod split;
mod terminal;
mod tree;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::table::{CellMask, MixedTable};
use crate::{Error, Result};

pub use proximity::{proximity, ProximityMatrix};
pub use split::{
    best_split_univariate_gini, best_split_univariate_numeric, composite_split, mia_split,
    node_standardize, node_standardize_block, Candidates, MissingSide, Response, SplitEval,
    SplitPoint, Standardized,
};
pub use terminal::{terminal_impute, terminal_impute_otf};
pub use tree::{assign_with_otf, NodeKind, Side, Tree, TreeNode, ValuePool};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// Squared error on a single numeric response.
    UnivariateSquaredError,
    /// Gini index on a single factor response.
    UnivariateGini,
    /// Composite standardized rule over a fixed set of response columns.
    MultivariateComposite(Vec<usize>),
    /// Composite rule over `ytry` pseudo-responses drawn per candidate variable.
    Unsupervised,
    /// Variable and split point drawn at random; no criterion is evaluated.
    PureRandom,
    /// Missing values routed as their own category (splits A, B and C).
    Mia,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub ntree: usize,
    /// Candidate variables per node; `None` means `ceil(sqrt(#predictors))`.
    pub mtry: Option<usize>,
    /// A node with fewer than `2 * nodesize` distinct inbag rows is not split.
    pub nodesize: usize,
    /// Random split points per candidate variable; 0 evaluates every cut.
    pub nsplit: usize,
    /// Pseudo-responses per candidate variable; `None` means `ceil(sqrt(p))`.
    pub ytry: Option<usize>,
    pub split_rule: SplitRule,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            ntree: 500,
            mtry: None,
            nodesize: 1,
            nsplit: 10,
            ytry: None,
            split_rule: SplitRule::Unsupervised,
            seed: 0,
        }
    }
}

fn ceil_sqrt(p: usize) -> usize {
    ((p as f64).sqrt().ceil() as usize).max(1)
}

/// Which rows and cells the grower may use.
///
/// `hidden` cells keep their current value for routing cases down a tree
/// but are treated as missing by every split statistic and by terminal-node
/// pooling. This is how already-imputed cells are re-imputed.
#[derive(Debug, Clone, Copy)]
pub struct TrainingView<'a> {
    pub table: &'a MixedTable,
    pub hidden: Option<&'a CellMask>,
}

impl<'a> TrainingView<'a> {
    pub fn new(table: &'a MixedTable) -> Self {
        TrainingView {
            table,
            hidden: None,
        }
    }

    pub fn with_hidden(table: &'a MixedTable, hidden: &'a CellMask) -> Self {
        TrainingView {
            table,
            hidden: Some(hidden),
        }
    }

    /// Value usable by split statistics and pooling.
    pub fn criterion_value(&self, col: usize, row: usize) -> Option<f64> {
        if self.hidden.is_some_and(|h| h.get(row, col)) {
            return None;
        }
        self.table.get(row, col)
    }

    /// Value used to route a case at a split.
    pub fn routing_value(&self, col: usize, row: usize) -> Option<f64> {
        self.table.get(row, col)
    }

    /// Cells to be imputed: missing or hidden.
    pub fn needs_value(&self, row: usize, col: usize) -> bool {
        self.criterion_value(col, row).is_none()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthStats {
    /// Candidate splits scored by a criterion.
    pub criterion_evals: u64,
    /// Missing cells that reached a criterion accumulator (always 0).
    pub missing_reads: u64,
    pub nodes: u64,
}

impl std::ops::AddAssign for GrowthStats {
    fn add_assign(&mut self, o: Self) {
        self.criterion_evals += o.criterion_evals;
        self.missing_reads += o.missing_reads;
        self.nodes += o.nodes;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RuleKind {
    SquaredError,
    Gini { n_classes: usize },
    Composite,
    Unsupervised { ytry: usize },
    PureRandom,
    Mia { pseudo: Option<usize> },
}

/// A config resolved against a table.
#[derive(Debug, Clone)]
pub(crate) struct Plan {
    pub mtry: usize,
    pub nodesize: usize,
    pub nsplit: usize,
    pub rule: RuleKind,
    pub predictors: Vec<usize>,
    pub responses: Vec<usize>,
}

fn resolve(table: &MixedTable, config: &ForestConfig, responses: Option<&[usize]>) -> Result<Plan> {
    let p = table.n_cols();
    if p == 0 {
        return Err(Error::EmptyData);
    }
    if table.n_rows() == 0 {
        return Err(Error::Config("table has no rows".into()));
    }
    if config.ntree == 0 {
        return Err(Error::Config("ntree must be at least 1".into()));
    }
    if config.nodesize == 0 {
        return Err(Error::Config("nodesize must be at least 1".into()));
    }
    let mut responses: Vec<usize> = match (&config.split_rule, responses) {
        (SplitRule::MultivariateComposite(declared), Some(given))
            if declared.as_slice() != given =>
        {
            return Err(Error::Config(
                "response set differs from the one declared by the split rule".into(),
            ))
        }
        (SplitRule::MultivariateComposite(declared), _) => declared.clone(),
        (_, Some(given)) => given.to_vec(),
        (_, None) => Vec::new(),
    };
    responses.sort_unstable();
    if responses.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("duplicate response column".into()));
    }
    if let Some(&j) = responses.iter().find(|&&j| j >= p) {
        return Err(Error::Config(format!("response column {j} out of range")));
    }
    let predictors: Vec<usize> = (0..p)
        .filter(|j| responses.binary_search(j).is_err())
        .collect();
    if predictors.is_empty() {
        return Err(Error::Config("no predictor columns left".into()));
    }
    let ytry = config.ytry.unwrap_or_else(|| ceil_sqrt(p));
    let single_response = |want_factor: bool| -> Result<usize> {
        match responses.as_slice() {
            [j] if table.column(*j).is_numeric() != want_factor => Ok(*j),
            _ => Err(Error::Config(format!(
                "rule needs exactly one {} response column",
                if want_factor { "factor" } else { "numeric" }
            ))),
        }
    };
    let rule = match &config.split_rule {
        SplitRule::UnivariateSquaredError => {
            single_response(false)?;
            RuleKind::SquaredError
        }
        SplitRule::UnivariateGini => {
            let j = single_response(true)?;
            RuleKind::Gini {
                n_classes: table.column(j).n_levels(),
            }
        }
        SplitRule::MultivariateComposite(_) => {
            if responses.is_empty() {
                return Err(Error::Config(
                    "composite rule needs at least one response".into(),
                ));
            }
            RuleKind::Composite
        }
        SplitRule::Unsupervised => {
            if !responses.is_empty() {
                return Err(Error::Config("unsupervised rule takes no responses".into()));
            }
            if p < 2 {
                return Err(Error::Config(
                    "unsupervised splitting needs at least 2 columns".into(),
                ));
            }
            if ytry == 0 {
                return Err(Error::Config("ytry must be at least 1".into()));
            }
            RuleKind::Unsupervised { ytry }
        }
        SplitRule::PureRandom => RuleKind::PureRandom,
        SplitRule::Mia => {
            if responses.is_empty() && p < 2 {
                return Err(Error::Config(
                    "MIA without responses needs at least 2 columns".into(),
                ));
            }
            RuleKind::Mia {
                pseudo: responses.is_empty().then_some(ytry.max(1)),
            }
        }
    };
    let mtry = config.mtry.unwrap_or_else(|| ceil_sqrt(predictors.len()));
    if mtry == 0 || mtry > predictors.len() {
        return Err(Error::Config(format!(
            "mtry = {mtry} must be in 1..={}",
            predictors.len()
        )));
    }
    Ok(Plan {
        mtry,
        nodesize: config.nodesize,
        nsplit: config.nsplit,
        rule,
        predictors,
        responses,
    })
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub config: ForestConfig,
    pub n_rows: usize,
    pub n_cols: usize,
    pub responses: Vec<usize>,
    pub trees: Vec<Tree>,
    pub stats: GrowthStats,
}

impl ForestModel {
    pub fn ntree(&self) -> usize {
        self.trees.len()
    }

    /// Bootstrap counts of tree `t`; they sum to `n_rows`.
    pub fn inbag_counts(&self, t: usize) -> &[u32] {
        &self.trees[t].inbag
    }

    pub fn oob_mask(&self, t: usize) -> Vec<bool> {
        self.trees[t].inbag.iter().map(|&c| c == 0).collect()
    }

    pub fn max_depth(&self) -> u32 {
        self.trees.iter().map(Tree::max_depth).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: ForestModel = serde_json::from_str(s)?;
        model.check_version()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let model: ForestModel = serde_json::from_reader(BufReader::new(file))?;
        model.check_version()?;
        Ok(model)
    }

    fn check_version(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        Ok(())
    }
}

/// Grow a forest on `table`. `responses` names the response columns for
/// supervised rules; every other column is a candidate predictor.
pub fn grow_forest(
    table: &MixedTable,
    config: &ForestConfig,
    responses: Option<&[usize]>,
) -> Result<ForestModel> {
    grow_forest_view(&TrainingView::new(table), config, responses)
}

pub fn grow_forest_view(
    view: &TrainingView,
    config: &ForestConfig,
    responses: Option<&[usize]>,
) -> Result<ForestModel> {
    let plan = resolve(view.table, config, responses)?;
    let grown: Vec<(Tree, GrowthStats)> = (0..config.ntree)
        .into_par_iter()
        .map(|t| tree::grow_tree(view, &plan, seed::derive(config.seed, t as u64)))
        .collect();
    let mut stats = GrowthStats::default();
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, s) in grown {
        stats += s;
        trees.push(tree);
    }
    Ok(ForestModel {
        format_version: MODEL_FORMAT_VERSION,
        config: config.clone(),
        n_rows: view.table.n_rows(),
        n_cols: view.table.n_cols(),
        responses: plan.responses,
        trees,
        stats,
    })
}
