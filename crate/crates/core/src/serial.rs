//! Single-process reference runner: one loop emulating all `m` players in
//! lock-step, level by level.

use crate::algo::{
    aggregate_means, level_fits, select_expansions, AlgoParams, ConfidenceSet, LevelRecord,
    PlayerMeans, RunResult,
};
use crate::error::Result;
use crate::objective::{GroundTruth, RewardOracle};
use crate::partition::cell_of;

/// Runs the search with `oracle_for(j)` supplying player `j`'s oracle, for
/// `j` in `1..=m`.
///
/// A level starts only if all of its `|S_h|·T_h` pulls fit in what is left
/// of each player's budget; otherwise the run stops and reports the best
/// node of the last completed level.
pub fn run_serial<F>(
    params: &AlgoParams,
    oracle_for: F,
    ground_truth: &GroundTruth,
) -> Result<RunResult>
where
    F: Fn(usize) -> RewardOracle,
{
    params.validate()?;
    let m = params.players;
    let mut oracles: Vec<RewardOracle> = (1..=m).map(&oracle_for).collect();
    let objective = oracles[0].objective().clone();

    let mut set = ConfidenceSet::root(params);
    let mut used = 0u64;
    let mut trajectory = Vec::new();

    while level_fits(set.depth, set.cost(), used, params.budget) {
        let mut reports = Vec::with_capacity(m);
        for (k, oracle) in oracles.iter_mut().enumerate() {
            let mut means = Vec::with_capacity(set.len());
            for &node in &set.members {
                let x = cell_of(node).rep_point;
                let mut sum = 0.0;
                for _ in 0..set.t_h {
                    sum += oracle.pull(x)?;
                }
                means.push((node, sum / set.t_h as f64));
            }
            reports.push(PlayerMeans {
                player: k + 1,
                means,
            });
        }
        used += set.cost();

        set.agg_means = aggregate_means(&set.members, &reports, m)?;
        let (expanded, next) = select_expansions(&set, params)?;
        trajectory.push(LevelRecord::from_set(&set, expanded.len()));
        set = next;
    }

    let total_pulls = oracles.iter().map(RewardOracle::pulls).sum();
    RunResult::from_trajectory(trajectory, m, total_pulls, &objective, ground_truth)
}
