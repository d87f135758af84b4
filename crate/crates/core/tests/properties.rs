use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xbandit::algo::{aggregate_means, compute_t, confidence_radius, PlayerMeans};
use xbandit::objective::{
    find_ground_truth, GroundTruth, NoiseModel, Objective, ObjectiveId, RewardOracle, Truncation,
};
use xbandit::partition::{cell_of, children, semi_metric, NodeId};
use xbandit::serial::run_serial;
use xbandit::AlgoParams;

fn noise_models() -> impl Strategy<Value = NoiseModel> {
    prop_oneof![
        Just(NoiseModel::None),
        (0.0..2.0f64).prop_map(NoiseModel::gaussian),
        (0.0..2.0f64).prop_map(|sigma| NoiseModel::TruncatedGaussian {
            sigma,
            truncation: Truncation::Reject
        }),
        (0.0..1.0f64).prop_map(|halfwidth| NoiseModel::Uniform { halfwidth }),
    ]
}

fn objectives() -> impl Strategy<Value = ObjectiveId> {
    prop_oneof![Just(ObjectiveId::DoubleSine), Just(ObjectiveId::Garland)]
}

#[test]
fn semi_metric_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100_000 {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        assert_eq!(semi_metric(x, y), semi_metric(y, x));
        assert_eq!(semi_metric(x, y) == 0.0, x == y);
        assert_eq!(semi_metric(x, x), 0.0);
    }
}

#[test]
fn diameter_condition_holds_to_depth_thirty() {
    let nu1_rho = |h: u32| 0.5f64.powi(h as i32);
    for depth in 0..=30u32 {
        for index in [1, (1u64 << depth).div_ceil(3), 1u64 << depth] {
            let cell = cell_of(NodeId::new(depth, index).unwrap());
            let sup = (cell.rep_point - cell.lower).max(cell.upper - cell.rep_point);
            assert!(sup <= nu1_rho(depth));
        }
    }
}

proptest! {
    #[test]
    fn children_partition_parent(depth in 0u32..40, frac in 0.0..1.0f64) {
        let index = ((frac * (1u64 << depth) as f64) as u64 + 1).min(1u64 << depth);
        let parent = NodeId::new(depth, index).unwrap();
        let (l, r) = children(parent);
        prop_assert!(l.is_valid() && r.is_valid());
        let (pc, lc, rc) = (cell_of(parent), cell_of(l), cell_of(r));
        prop_assert_eq!(lc.lower, pc.lower);
        prop_assert_eq!(lc.upper, rc.lower);
        prop_assert_eq!(rc.upper, pc.upper);
        prop_assert!(pc.contains(pc.rep_point));
        prop_assert_eq!(NodeId::containing(pc.rep_point, depth).unwrap(), parent);
    }

    #[test]
    fn identical_seeds_identical_rewards(seed: u64, player in 1usize..32, noise in noise_models(), xs in prop::collection::vec(0.0..=1.0f64, 1..64)) {
        let mut a = RewardOracle::for_player(Objective::Garland, noise, seed, player);
        let mut b = RewardOracle::for_player(Objective::Garland, noise, seed, player);
        for &x in &xs {
            let (ra, rb) = (a.pull(x).unwrap(), b.pull(x).unwrap());
            prop_assert_eq!(ra.to_bits(), rb.to_bits());
            prop_assert!((0.0..=1.0).contains(&ra));
        }
        prop_assert_eq!(a.pulls(), xs.len() as u64);
    }

    #[test]
    fn aggregation_ignores_report_order(vals in prop::collection::vec(0.0..=1.0f64, 1..20), rot in 0usize..20) {
        let node = NodeId::ROOT;
        let reports: Vec<PlayerMeans> = vals
            .iter()
            .enumerate()
            .map(|(j, &v)| PlayerMeans { player: j + 1, means: vec![(node, v)] })
            .collect();
        let mut rotated = reports.clone();
        rotated.rotate_left(rot % vals.len());
        let a = aggregate_means(&[node], &reports, vals.len()).unwrap();
        let b = aggregate_means(&[node], &rotated, vals.len()).unwrap();
        prop_assert_eq!(a[0].to_bits(), b[0].to_bits());
        if vals.len() == 1 {
            prop_assert_eq!(a[0], vals[0]);
        }
    }

    #[test]
    fn radius_dominated_by_scale(depth in 0u32..31, log_size in 0u32..31, players in 1usize..64, delta in 0.001..0.999f64) {
        let params = AlgoParams::new(players, 1).with_delta(delta);
        let size = 1usize << log_size;
        let t = compute_t(depth, size, &params);
        prop_assert!(t >= 1);
        prop_assert!(confidence_radius(depth, size, t, players, delta) <= params.smoothness.scale(depth));
        prop_assert!(confidence_radius(depth, size, 2 * t, players, delta) < confidence_radius(depth, size, t, players, delta));
    }

    #[test]
    fn runs_respect_budget_and_output_rules(
        obj in objectives(),
        noise in noise_models(),
        players in 1usize..=16,
        budget in 1u64..6000,
        seed: u64,
    ) {
        let gt = GroundTruth::builtin(obj);
        let params = AlgoParams::new(players, budget);
        let r = run_serial(&params, |j| RewardOracle::for_player(obj.into(), noise, seed, j), &gt).unwrap();
        prop_assert!(r.evals_per_player <= budget);
        prop_assert_eq!(r.total_pulls, r.evals_per_player * players as u64);
        prop_assert!((0.0..=1.0).contains(&r.x_n));
        prop_assert!(r.loss >= -1e-9);
        for (h, level) in r.trajectory.iter().enumerate() {
            prop_assert_eq!(level.depth as usize, h);
            prop_assert!(level.members.iter().all(|n| n.is_valid() && n.depth == level.depth));
            prop_assert!(level.expanded >= 1 && level.expanded <= level.set_size);
            prop_assert!(confidence_radius(level.depth, level.set_size, level.t_h, players, params.delta)
                <= params.smoothness.scale(level.depth));
        }
        for pair in r.trajectory.windows(2) {
            prop_assert_eq!(pair[1].set_size, 2 * pair[0].expanded);
        }
    }
}

/// Noise-free runs on the built-ins never drop the cell that holds the
/// maximizer.
#[test]
fn noise_free_optimism_on_builtins() {
    for obj in ObjectiveId::ALL {
        let gt = GroundTruth::builtin(obj);
        for players in [1, 2, 4, 8, 16] {
            for budget in [400, 1600, 10_000, 40_000] {
                let params = AlgoParams::new(players, budget);
                let r = run_serial(
                    &params,
                    |j| RewardOracle::for_player(obj.into(), NoiseModel::None, 0, j),
                    &gt,
                )
                .unwrap();
                for level in &r.trajectory {
                    let star = NodeId::containing(gt.x_star, level.depth).unwrap();
                    assert!(
                        level.members.contains(&star),
                        "{obj} m={players} n={budget} h={}",
                        level.depth
                    );
                }
            }
        }
    }
}

fn lipschitz_objectives(peak: f64) -> Vec<Objective> {
    vec![
        Objective::custom("tent", move |x| 1.0 - (x - peak).abs()),
        Objective::custom("bump", move |x| 0.9 - 0.5 * (x - peak).powi(2)),
        Objective::custom("damped-sine", |x| {
            0.5 + 0.1 * (0.5 * ((13.0 * x).sin() * (27.0 * x).sin() / 2.0 + 1.0) - 0.5)
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// For 1-Lipschitz objectives, noise-free runs keep the optimal cell in
    /// every confidence set and only expand nodes whose representative is
    /// within `6ν₁ρ^h` of the optimum.
    #[test]
    fn noise_free_lipschitz_runs(peak in 0.0..=1.0f64, players in 1usize..=16, budget in 100u64..20_000) {
        for f in lipschitz_objectives(peak) {
            let gt = find_ground_truth(&f, 100_000).unwrap();
            let params = AlgoParams::new(players, budget);
            let r = run_serial(&params, |j| RewardOracle::for_player(f.clone(), NoiseModel::None, 0, j), &gt).unwrap();
            for level in &r.trajectory {
                let scale = params.smoothness.scale(level.depth);
                let star = NodeId::containing(gt.x_star, level.depth).unwrap();
                // x* on a cell boundary belongs to either neighbour.
                let neighbour = NodeId::containing((gt.x_star - 1e-12).max(0.0), level.depth).unwrap();
                prop_assert!(level.members.contains(&star) || level.members.contains(&neighbour),
                    "{} peak={peak} h={}", f.name(), level.depth);
                let threshold = level.best_mean - 3.0 * scale;
                for (node, &mean) in level.members.iter().zip(&level.agg_means) {
                    if mean >= threshold {
                        let fx = f.evaluate(cell_of(*node).rep_point).unwrap();
                        prop_assert!(fx + 6.0 * scale >= gt.f_star - 1e-9);
                    }
                }
            }
            if r.h_max >= 0 {
                prop_assert!(r.loss <= 6.0 * params.smoothness.scale(r.h_max as u32) + 1e-9);
            }
        }
    }
}
