use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::split::{self, Candidates, ReadAudit, Response, SplitEval, SplitPoint};
use super::{GrowthStats, Plan, RuleKind, TrainingView};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Inbag data seen by an internal node for its split variable.
///
/// Drawing a value uniformly from the observed inbag values and routing by
/// it is the same as going left with probability `left / total`, so only the
/// counts are kept.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuePool {
    /// Observed inbag values (with bootstrap multiplicity) that route left.
    pub left: u32,
    /// All observed inbag values.
    pub total: u32,
    /// Inbag sizes of the daughters, counting only deterministically routed rows.
    pub inbag_left: u32,
    pub inbag_right: u32,
}

impl ValuePool {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Side {
        let side = |left: u32, total: u32, rng: &mut R| {
            if rng.random_range(0..total) < left {
                Side::Left
            } else {
                Side::Right
            }
        };
        if self.total > 0 {
            side(self.left, self.total, rng)
        } else if self.inbag_left + self.inbag_right > 0 {
            side(self.inbag_left, self.inbag_left + self.inbag_right, rng)
        } else if rng.random_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        }
    }
}

/// Route one case at a split.
///
/// An observed value is compared against the split point. A missing value is
/// replaced by a value drawn uniformly from `inbag_values` (the node's observed
/// inbag values of the split variable) and routed by that draw; the draw is
/// discarded afterwards. With no inbag values the case goes left with
/// probability proportional to the daughters' inbag sizes.
pub fn assign_with_otf<R: Rng + ?Sized>(
    value: Option<f64>,
    point: &SplitPoint,
    inbag_values: &[f64],
    daughter_sizes: (usize, usize),
    rng: &mut R,
) -> Side {
    let to_side = |b: bool| if b { Side::Left } else { Side::Right };
    if let Some(left) = point.goes_left(value) {
        return to_side(left);
    }
    if !inbag_values.is_empty() {
        let drawn = inbag_values[rng.random_range(0..inbag_values.len())];
        return to_side(point.goes_left(Some(drawn)).unwrap_or(false));
    }
    let (l, r) = daughter_sizes;
    if l + r == 0 {
        return to_side(rng.random_bool(0.5));
    }
    to_side(rng.random_range(0..l + r) < l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Internal {
        column: usize,
        point: SplitPoint,
        left: u32,
        right: u32,
        pool: ValuePool,
    },
    Terminal {
        /// Distinct inbag rows that reached this node.
        members: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: u32,
    pub depth: u32,
    pub kind: NodeKind,
}

impl TreeNode {
    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Terminal { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
    /// Bootstrap multiplicity of every row; zero means out-of-bag.
    pub inbag: Vec<u32>,
    /// Terminal node reached by every training row (inbag rows from growth,
    /// out-of-bag rows by dropping them down the grown tree).
    pub terminal_of: Vec<u32>,
}

impl Tree {
    pub fn max_depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn n_terminal(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_terminal()).count()
    }

    pub fn is_oob(&self, row: usize) -> bool {
        self.inbag[row] == 0
    }

    /// Drop a row of `view` from the root, drawing a side from the node's
    /// value pool whenever the split variable is missing.
    pub fn route<R: Rng + ?Sized>(&self, view: &TrainingView, row: usize, rng: &mut R) -> u32 {
        let mut id = 0usize;
        loop {
            match &self.nodes[id].kind {
                NodeKind::Terminal { .. } => return id as u32,
                NodeKind::Internal {
                    column,
                    point,
                    left,
                    right,
                    pool,
                } => {
                    let side = match point.goes_left(view.routing_value(*column, row)) {
                        Some(true) => Side::Left,
                        Some(false) => Side::Right,
                        None => pool.draw(rng),
                    };
                    id = match side {
                        Side::Left => *left as usize,
                        Side::Right => *right as usize,
                    };
                }
            }
        }
    }
}

struct Work {
    id: u32,
    depth: u32,
    seed: u64,
    members: Vec<(u32, u32)>,
}

pub(super) fn grow_tree(view: &TrainingView, plan: &Plan, tree_seed: u64) -> (Tree, GrowthStats) {
    let n = view.table.n_rows();
    let mut rng = seed::rng(seed::derive(tree_seed, 0));
    let mut inbag = vec![0u32; n];
    for _ in 0..n {
        inbag[rng.random_range(0..n)] += 1;
    }
    let members: Vec<(u32, u32)> = inbag
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i as u32, c))
        .collect();

    let mut stats = GrowthStats::default();
    let mut nodes: Vec<TreeNode> = vec![TreeNode {
        id: 0,
        depth: 0,
        kind: NodeKind::Terminal {
            members: Vec::new(),
        },
    }];
    let mut terminal_of = vec![u32::MAX; n];
    let mut stack = vec![Work {
        id: 0,
        depth: 0,
        seed: seed::derive(tree_seed, 1),
        members,
    }];

    while let Some(work) = stack.pop() {
        let mut nrng = seed::rng(work.seed);
        let split = if work.members.len() >= 2 * plan.nodesize {
            choose_split(view, plan, &work.members, &mut nrng, &mut stats)
        } else {
            None
        };
        let partitioned = split.and_then(|(column, point)| {
            let (l, r, pool) = partition(view, column, &point, &work.members, &mut nrng);
            (!l.is_empty() && !r.is_empty()).then_some((column, point, l, r, pool))
        });
        match partitioned {
            None => {
                for &(row, _) in &work.members {
                    terminal_of[row as usize] = work.id;
                }
                nodes[work.id as usize].kind = NodeKind::Terminal {
                    members: work.members.iter().map(|&(r, _)| r).collect(),
                };
            }
            Some((column, point, l, r, pool)) => {
                let left = nodes.len() as u32;
                let right = left + 1;
                for id in [left, right] {
                    nodes.push(TreeNode {
                        id,
                        depth: work.depth + 1,
                        kind: NodeKind::Terminal {
                            members: Vec::new(),
                        },
                    });
                }
                nodes[work.id as usize].kind = NodeKind::Internal {
                    column,
                    point,
                    left,
                    right,
                    pool,
                };
                stack.push(Work {
                    id: right,
                    depth: work.depth + 1,
                    seed: seed::derive(work.seed, 2),
                    members: r,
                });
                stack.push(Work {
                    id: left,
                    depth: work.depth + 1,
                    seed: seed::derive(work.seed, 1),
                    members: l,
                });
            }
        }
    }
    stats.nodes = nodes.len() as u64;

    let mut tree = Tree {
        nodes,
        inbag,
        terminal_of,
    };
    let mut drop_rng = seed::rng(seed::derive(tree_seed, 2));
    for row in 0..n {
        if tree.inbag[row] == 0 {
            tree.terminal_of[row] = tree.route(view, row, &mut drop_rng);
        }
    }
    (tree, stats)
}

/// Split the members; missing split values are routed by a draw from the
/// node's observed inbag values and never written back.
fn partition<R: Rng + ?Sized>(
    view: &TrainingView,
    column: usize,
    point: &SplitPoint,
    members: &[(u32, u32)],
    rng: &mut R,
) -> (Vec<(u32, u32)>, Vec<(u32, u32)>, ValuePool) {
    let mut pool = ValuePool::default();
    let mut sides: Vec<Option<bool>> = Vec::with_capacity(members.len());
    for &(row, w) in members {
        let row = row as usize;
        let side = point.goes_left(view.routing_value(column, row));
        if view.criterion_value(column, row).is_some() {
            pool.total += w;
            if side == Some(true) {
                pool.left += w;
            }
        }
        match side {
            Some(true) => pool.inbag_left += w,
            Some(false) => pool.inbag_right += w,
            None => {}
        }
        sides.push(side);
    }
    let (mut l, mut r) = (Vec::new(), Vec::new());
    for (&m, side) in members.iter().zip(sides) {
        let left = match side {
            Some(b) => b,
            None => pool.draw(rng) == Side::Left,
        };
        if left {
            l.push(m);
        } else {
            r.push(m);
        }
    }
    (l, r, pool)
}

fn choose_split<R: Rng + ?Sized>(
    view: &TrainingView,
    plan: &Plan,
    members: &[(u32, u32)],
    rng: &mut R,
    stats: &mut GrowthStats,
) -> Option<(usize, SplitPoint)> {
    let table = view.table;
    let weights: Vec<f64> = members.iter().map(|&(_, w)| w as f64).collect();
    let local = |col: usize| -> Vec<f64> {
        members
            .iter()
            .map(|&(row, _)| view.criterion_value(col, row as usize).unwrap_or(f64::NAN))
            .collect()
    };

    if let RuleKind::PureRandom = plan.rule {
        let p = plan.predictors.len();
        for k in sample(rng, p, p) {
            let col = plan.predictors[k];
            let x = local(col);
            if let Some(point) = Candidates::pure_random(&x, !table.column(col).is_numeric(), rng) {
                return Some((col, point));
            }
        }
        return None;
    }

    let fixed: Vec<Vec<f64>> = match plan.rule {
        RuleKind::Unsupervised { .. } | RuleKind::Mia { pseudo: Some(_) } => Vec::new(),
        _ => plan.responses.iter().map(|&j| local(j)).collect(),
    };
    let mut best: Option<(usize, SplitEval)> = None;
    let n_pred = plan.predictors.len();
    for k in sample(rng, n_pred, plan.mtry.min(n_pred)) {
        let col = plan.predictors[k];
        let is_factor = !table.column(col).is_numeric();
        let x = local(col);
        let candidates = Candidates::for_variable(&x, is_factor, plan.nsplit, rng);
        if candidates.is_empty() && !matches!(plan.rule, RuleKind::Mia { .. }) {
            continue;
        }
        let (response_cols, pseudo): (Vec<usize>, Vec<Vec<f64>>) = match &plan.rule {
            RuleKind::Unsupervised { ytry } | RuleKind::Mia { pseudo: Some(ytry) } => {
                let others: Vec<usize> = (0..table.n_cols()).filter(|&j| j != col).collect();
                let cols: Vec<usize> = sample(rng, others.len(), (*ytry).min(others.len()))
                    .into_iter()
                    .map(|i| others[i])
                    .collect();
                let values = cols.iter().map(|&j| local(j)).collect();
                (cols, values)
            }
            _ => (plan.responses.clone(), Vec::new()),
        };
        let buffers = if pseudo.is_empty() { &fixed } else { &pseudo };
        let responses: Vec<Response> = response_cols
            .iter()
            .zip(buffers.iter())
            .map(|(&j, values)| match table.column(j).n_levels() {
                0 => Response::Numeric(values),
                n_levels => Response::Factor {
                    codes: values,
                    n_levels,
                },
            })
            .collect();

        let mut audit = ReadAudit::default();
        let eval = match &plan.rule {
            RuleKind::SquaredError => {
                split::univariate_numeric(&buffers[0], &x, &weights, &candidates, &mut audit)
            }
            RuleKind::Gini { n_classes } => split::univariate_gini(
                &buffers[0],
                *n_classes,
                &x,
                &weights,
                &candidates,
                &mut audit,
            ),
            RuleKind::Mia { .. } if !is_factor => {
                split::composite(&responses, &x, &weights, &candidates, true, &mut audit)
            }
            _ => split::composite(&responses, &x, &weights, &candidates, false, &mut audit),
        };
        stats.missing_reads += audit.missing_reads;
        match eval {
            Some(e) => {
                stats.criterion_evals += e.evaluations as u64;
                if best.as_ref().is_none_or(|(_, b)| e.gain > b.gain) {
                    best = Some((col, e));
                }
            }
            None => stats.criterion_evals += candidates.len() as u64,
        }
    }
    best.map(|(col, e)| (col, e.point))
}
