//! Building blocks of the level-by-level search shared by the serial
//! reference runner and the multi-agent simulation.
//!
//! At depth `h` every player pulls each node of the confidence set `S_h`
//! exactly `T_h` times, the per-player means are averaged across players,
//! and every node within `3ν₁ρ^h` of the best aggregated mean is expanded.
//! The children of the expanded nodes form `S_{h+1}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{GroundTruth, Objective};
use crate::partition::{cell_of, children, NodeId, SmoothnessParams, MAX_DEPTH};

pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoParams {
    /// Number of players `m`.
    pub players: usize,
    /// Evaluations available to each player.
    pub budget: u64,
    /// Confidence parameter `δ`.
    pub delta: f64,
    pub smoothness: SmoothnessParams,
}

impl AlgoParams {
    pub fn new(players: usize, budget: u64) -> Self {
        AlgoParams {
            players,
            budget,
            delta: DEFAULT_DELTA,
            smoothness: SmoothnessParams::default(),
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_smoothness(mut self, smoothness: SmoothnessParams) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.players == 0 {
            return Err(Error::InvalidParams(
                "at least one player is required".into(),
            ));
        }
        if self.budget == 0 {
            return Err(Error::InvalidParams("budget must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        self.smoothness.validate()
    }
}

fn log_term(depth: u32, set_size: usize, delta: f64) -> f64 {
    let h1 = (depth + 1) as f64;
    (PI * PI * h1 * h1 * set_size as f64 / (3.0 * delta)).ln()
}

/// Per-player pull count for every node of a depth-`depth` set of
/// `set_size` nodes:
/// `T_h = ⌈log(π²(h+1)²|S_h|/3δ) / (2(ν₁ρ^h)²m)⌉`.
///
/// The same formula is used at the root.
pub fn compute_t(depth: u32, set_size: usize, params: &AlgoParams) -> u64 {
    let scale = params.smoothness.scale(depth);
    let raw =
        log_term(depth, set_size, params.delta) / (2.0 * scale * scale * params.players as f64);
    // `as` saturates for values beyond u64::MAX.
    (raw.ceil() as u64).max(1)
}

/// Accuracy of an aggregated mean after `m·T` pulls:
/// `ε = sqrt(log(π²(h+1)²|S_h|/3δ) / (2mT))`.
pub fn confidence_radius(depth: u32, set_size: usize, t: u64, players: usize, delta: f64) -> f64 {
    (log_term(depth, set_size, delta) / (2.0 * players as f64 * t as f64)).sqrt()
}

/// Mean rewards reported by one player for the nodes of one depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerMeans {
    pub player: usize,
    pub means: Vec<(NodeId, f64)>,
}

impl PlayerMeans {
    fn get(&self, position: usize, node: NodeId) -> Option<f64> {
        match self.means.get(position) {
            Some(&(n, v)) if n == node => Some(v),
            _ => self.means.iter().find(|(n, _)| *n == node).map(|&(_, v)| v),
        }
    }
}

/// Averages the per-player means of each member across players `1..=m`.
///
/// Summation always runs in player-id order, so the result does not depend
/// on the order of `per_player`.
pub fn aggregate_means(
    members: &[NodeId],
    per_player: &[PlayerMeans],
    players: usize,
) -> Result<Vec<f64>> {
    let mut ordered: Vec<&PlayerMeans> = Vec::with_capacity(players);
    for player in 1..=players {
        let report = per_player
            .iter()
            .find(|p| p.player == player)
            .ok_or_else(|| Error::MissingEntry {
                player,
                node: members.first().copied().unwrap_or(NodeId::ROOT),
            })?;
        ordered.push(report);
    }
    members
        .iter()
        .enumerate()
        .map(|(position, &node)| {
            let mut sum = 0.0;
            for report in &ordered {
                sum += report.get(position, node).ok_or(Error::MissingEntry {
                    player: report.player,
                    node,
                })?;
            }
            Ok(sum / players as f64)
        })
        .collect()
}

/// The confidence set `S_h` with its sample count and, once the level has
/// been played, the aggregated means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub depth: u32,
    /// Sorted by node index.
    pub members: Vec<NodeId>,
    pub t_h: u64,
    pub agg_means: Vec<f64>,
}

impl ConfidenceSet {
    pub fn root(params: &AlgoParams) -> Self {
        Self::at_depth(0, vec![NodeId::ROOT], params)
    }

    pub fn at_depth(depth: u32, members: Vec<NodeId>, params: &AlgoParams) -> Self {
        let t_h = compute_t(depth, members.len(), params);
        ConfidenceSet {
            depth,
            members,
            t_h,
            agg_means: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Per-player pulls needed to play this level.
    pub fn cost(&self) -> u64 {
        (self.members.len() as u64).saturating_mul(self.t_h)
    }

    /// Position and value of the best aggregated mean; lowest index wins ties.
    pub fn best(&self) -> Option<(usize, f64)> {
        best_of(&self.agg_means)
    }
}

fn best_of(means: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in means.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((k, v)),
        }
    }
    best
}

/// Expands every member whose aggregated mean is at least
/// `μ̂*_h - 3ν₁ρ^h` and builds the next confidence set from their children.
pub fn select_expansions(
    set: &ConfidenceSet,
    params: &AlgoParams,
) -> Result<(Vec<NodeId>, ConfidenceSet)> {
    if set.agg_means.len() != set.members.len() || set.members.is_empty() {
        return Err(Error::InvalidParams(format!(
            "confidence set at depth {} has {} members but {} aggregated means",
            set.depth,
            set.members.len(),
            set.agg_means.len()
        )));
    }
    let (_, best) = set.best().expect("non-empty");
    let threshold = best - 3.0 * params.smoothness.scale(set.depth);
    let expanded: Vec<NodeId> = set
        .members
        .iter()
        .zip(&set.agg_means)
        .filter(|(_, &mean)| mean >= threshold)
        .map(|(&node, _)| node)
        .collect();
    let next_members = expanded
        .iter()
        .flat_map(|&node| {
            let (l, r) = children(node);
            [l, r]
        })
        .collect();
    let next = ConfidenceSet::at_depth(set.depth + 1, next_members, params);
    Ok((expanded, next))
}

/// One fully played depth of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub depth: u32,
    pub set_size: usize,
    pub t_h: u64,
    /// `μ̂*_h`.
    pub best_mean: f64,
    pub expanded: usize,
    pub members: Vec<NodeId>,
    pub agg_means: Vec<f64>,
}

impl LevelRecord {
    pub fn from_set(set: &ConfidenceSet, expanded: usize) -> Self {
        LevelRecord {
            depth: set.depth,
            set_size: set.len(),
            t_h: set.t_h,
            best_mean: set.best().map_or(f64::NAN, |(_, v)| v),
            expanded,
            members: set.members.clone(),
            agg_means: set.agg_means.clone(),
        }
    }

    pub fn cost(&self) -> u64 {
        (self.set_size as u64).saturating_mul(self.t_h)
    }

    pub fn best_node(&self) -> NodeId {
        let (k, _) = best_of(&self.agg_means).expect("played levels are non-empty");
        self.members[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    /// Not even the root level fit in the budget.
    BudgetTooSmall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: RunStatus,
    /// Output point `x(n)`.
    pub x_n: f64,
    /// `R_n = f* - f(x(n))`.
    pub loss: f64,
    /// Depth of the deepest expanded node, `-1` if no level completed.
    pub h_max: i64,
    /// Communication rounds, one per completed level.
    pub rounds: u64,
    /// Values broadcast by each player, `Σ |S_h|` over completed levels.
    pub messages: u64,
    pub evals_per_player: u64,
    pub total_pulls: u64,
    pub trajectory: Vec<LevelRecord>,
}

impl RunResult {
    /// Assembles the result of a run whose completed levels are `trajectory`.
    pub fn from_trajectory(
        trajectory: Vec<LevelRecord>,
        players: usize,
        total_pulls: u64,
        objective: &Objective,
        ground_truth: &GroundTruth,
    ) -> Result<Self> {
        let (status, x_n) = match trajectory.last() {
            Some(level) => (RunStatus::Completed, cell_of(level.best_node()).rep_point),
            None => (RunStatus::BudgetTooSmall, cell_of(NodeId::ROOT).rep_point),
        };
        let evals_per_player = trajectory.iter().map(LevelRecord::cost).sum::<u64>();
        debug_assert!(total_pulls == evals_per_player * players as u64);
        Ok(RunResult {
            status,
            x_n,
            loss: ground_truth.loss(objective, x_n)?,
            h_max: trajectory.len() as i64 - 1,
            rounds: trajectory.len() as u64,
            messages: trajectory.iter().map(|l| l.set_size as u64).sum(),
            evals_per_player,
            total_pulls,
            trajectory,
        })
    }

    /// The result the same run would have produced with the smaller
    /// per-player `budget`. Valid because a run never looks at its budget
    /// except to decide whether the next level fits.
    pub fn checkpoint(
        &self,
        budget: u64,
        players: usize,
        objective: &Objective,
        ground_truth: &GroundTruth,
    ) -> Result<RunResult> {
        let mut used = 0u64;
        let mut prefix = Vec::new();
        for level in &self.trajectory {
            let next = used.saturating_add(level.cost());
            if next > budget {
                break;
            }
            used = next;
            prefix.push(level.clone());
        }
        RunResult::from_trajectory(
            prefix,
            players,
            used * players as u64,
            objective,
            ground_truth,
        )
    }
}

/// Whether a level at `depth` costing `cost` pulls per player may start.
pub(crate) fn level_fits(depth: u32, cost: u64, used: u64, budget: u64) -> bool {
    depth <= MAX_DEPTH && used.checked_add(cost).is_some_and(|total| total <= budget)
}
