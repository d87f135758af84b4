use xbandit::distsim::{account, run_distributed, run_distributed_with, Scheduler, SimOptions};
use xbandit::objective::{
    find_ground_truth, GroundTruth, NoiseModel, Objective, ObjectiveId, RewardOracle,
};
use xbandit::serial::run_serial;
use xbandit::{AlgoParams, RunStatus};

fn oracle(obj: ObjectiveId, noise: NoiseModel, seed: u64) -> impl Fn(usize) -> RewardOracle {
    move |j| RewardOracle::for_player(obj.into(), noise, seed, j)
}

#[test]
fn distributed_matches_serial() {
    for obj in ObjectiveId::ALL {
        let gt = GroundTruth::builtin(obj);
        for noise in [
            NoiseModel::None,
            NoiseModel::gaussian(0.1),
            NoiseModel::Uniform { halfwidth: 0.3 },
        ] {
            for players in [1, 2, 4, 16] {
                for seed in [0, 9] {
                    let params = AlgoParams::new(players, 1600);
                    let serial = run_serial(&params, oracle(obj, noise, seed), &gt).unwrap();
                    let dist = run_distributed(&params, oracle(obj, noise, seed), &gt).unwrap();
                    assert_eq!(
                        serial, dist.result,
                        "{obj} {noise:?} m={players} seed={seed}"
                    );
                }
            }
        }
    }
}

#[test]
fn schedule_does_not_change_outcome() {
    let gt = GroundTruth::builtin(ObjectiveId::Garland);
    let params = AlgoParams::new(5, 2500);
    let noise = NoiseModel::gaussian(0.2);
    let reference = run_distributed(&params, oracle(ObjectiveId::Garland, noise, 4), &gt).unwrap();
    for scheduler in [
        Scheduler::Threaded,
        Scheduler::Permuted(vec![4, 2, 0, 3, 1]),
        Scheduler::Permuted(vec![1, 0, 4, 3, 2]),
    ] {
        let options = SimOptions {
            scheduler,
            ..SimOptions::default()
        };
        let run = run_distributed_with(
            &params,
            oracle(ObjectiveId::Garland, noise, 4),
            &gt,
            &options,
        )
        .unwrap();
        assert_eq!(run, reference);
    }
}

#[test]
fn accounting_matches_trajectory() {
    let gt = GroundTruth::builtin(ObjectiveId::DoubleSine);
    for players in [1, 4, 16] {
        let params = AlgoParams::new(players, 10_000);
        let run = run_distributed(
            &params,
            oracle(ObjectiveId::DoubleSine, NoiseModel::gaussian(0.1), 1),
            &gt,
        )
        .unwrap();
        let summary = account(&run.comm);
        let r = &run.result;
        assert_eq!(summary.rounds, r.trajectory.len() as u64);
        assert_eq!(summary.rounds, r.rounds);
        assert_eq!(
            summary.values_per_player,
            r.trajectory.iter().map(|l| l.set_size as u64).sum::<u64>()
        );
        assert_eq!(summary.values_per_player, r.messages);
        assert_eq!(summary.values_observed, players as u64 * r.messages);
        assert_eq!(run.trace.len(), r.trajectory.len());
        let last = run.trace.last().unwrap();
        assert!(last
            .pulls_per_agent
            .iter()
            .all(|&p| p == r.evals_per_player));
        assert!(r.evals_per_player <= params.budget);
    }
}

#[test]
fn single_player_bus_is_loopback() {
    let gt = GroundTruth::builtin(ObjectiveId::DoubleSine);
    let params = AlgoParams::new(1, 1600);
    let run = run_distributed(
        &params,
        oracle(ObjectiveId::DoubleSine, NoiseModel::None, 0),
        &gt,
    )
    .unwrap();
    assert_eq!(run.comm.rounds, run.result.rounds);
    assert_eq!(run.comm.values_per_player, run.comm.values_observed);
}

#[test]
fn constant_objective_broadcasts_every_node() {
    let constant = Objective::constant(0.5);
    let gt = find_ground_truth(&constant, 1000).unwrap();
    let params = AlgoParams::new(4, 1600);
    let run = run_distributed(
        &params,
        |j| RewardOracle::for_player(constant.clone(), NoiseModel::None, 0, j),
        &gt,
    )
    .unwrap();
    let levels = run.result.trajectory.len() as u32;
    assert_eq!(run.comm.values_per_player, (1u64 << levels) - 1);
}

#[test]
fn smaller_budget_is_a_prefix() {
    let gt = GroundTruth::builtin(ObjectiveId::Garland);
    let obj = Objective::Garland;
    for players in [1, 4, 16] {
        for seed in 0..3 {
            let noise = NoiseModel::gaussian(0.1);
            let long = run_serial(
                &AlgoParams::new(players, 10_000),
                oracle(ObjectiveId::Garland, noise, seed),
                &gt,
            )
            .unwrap();
            for budget in [1, 50, 400, 1600, 5000] {
                let short = run_serial(
                    &AlgoParams::new(players, budget),
                    oracle(ObjectiveId::Garland, noise, seed),
                    &gt,
                )
                .unwrap();
                assert!(long.trajectory.starts_with(&short.trajectory));
                assert_eq!(long.checkpoint(budget, players, &obj, &gt).unwrap(), short);
            }
        }
    }
}

#[test]
fn budget_too_small_everywhere() {
    let gt = GroundTruth::builtin(ObjectiveId::DoubleSine);
    let params = AlgoParams::new(1, 2);
    let serial = run_serial(
        &params,
        oracle(ObjectiveId::DoubleSine, NoiseModel::None, 0),
        &gt,
    )
    .unwrap();
    let dist = run_distributed(
        &params,
        oracle(ObjectiveId::DoubleSine, NoiseModel::None, 0),
        &gt,
    )
    .unwrap();
    assert_eq!(serial, dist.result);
    assert_eq!(serial.status, RunStatus::BudgetTooSmall);
    assert_eq!(dist.comm.rounds, 0);
}

#[test]
fn noise_free_double_sine_regression() {
    let gt = GroundTruth::builtin(ObjectiveId::DoubleSine);
    let params = AlgoParams::new(1, 1600);
    let r = run_serial(
        &params,
        oracle(ObjectiveId::DoubleSine, NoiseModel::None, 0),
        &gt,
    )
    .unwrap();
    let scale = params.smoothness.scale(r.h_max as u32);
    assert!(r.loss <= 6.0 * scale);
    // Levels 0..=2 cost 3 + 2·13 + 4·63 = 281 pulls; level 3 would need 8·290 more.
    assert_eq!(r.h_max, 2);
    assert_eq!(r.evals_per_player, 281);
    assert_eq!(r.x_n, 0.875);
    assert!((r.loss - 0.006_041_690_385_838_9).abs() < 1e-12);
}
