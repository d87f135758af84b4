//! Experiment sweeps over players × budgets × seeds, bound verification and
//! CSV output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::algo::{AlgoParams, RunResult, DEFAULT_DELTA};
use crate::bounds::{self, BoundParams};
use crate::distsim::{run_distributed_with, Scheduler, SimOptions};
use crate::error::{Error, Result};
use crate::objective::{GroundTruth, NoiseModel, Objective, ObjectiveId, RewardOracle, Truncation};
use crate::partition::SmoothnessParams;
use crate::serial::run_serial;

pub const CSV_HEADER: [&str; 10] = [
    "objective",
    "m",
    "n",
    "seed",
    "loss",
    "h_max",
    "q",
    "M",
    "pulls",
    "wall_ms",
];

pub const DEFAULT_SEED_COUNT: u64 = 20;
/// Noise level of the default sweeps; `UNIT_SIGMA` is the unit-variance
/// alternative.
pub const DEFAULT_SIGMA: f64 = 0.1;
pub const UNIT_SIGMA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub objective: ObjectiveId,
    pub noise: NoiseModel,
    pub players: Vec<usize>,
    /// Per-player budget checkpoints, ascending.
    pub budgets: Vec<u64>,
    pub delta: f64,
    pub smoothness: SmoothnessParams,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    /// Near-optimality dimension used for bound checks.
    pub d: f64,
    /// Packing constant for bound checks; calibrated when absent.
    pub c: Option<f64>,
    pub threaded_agents: bool,
}

impl ExperimentConfig {
    /// Defaults for one objective: final budget 1600 for the double sine or
    /// 10000 for the garland, a quarter-budget checkpoint, and m ∈ {1, 4, 16}.
    pub fn for_objective(objective: ObjectiveId) -> Self {
        let budget = match objective {
            ObjectiveId::DoubleSine => 1600,
            ObjectiveId::Garland => 10_000,
        };
        ExperimentConfig {
            objective,
            noise: NoiseModel::gaussian(DEFAULT_SIGMA),
            players: vec![1, 4, 16],
            budgets: vec![budget / 4, budget],
            delta: DEFAULT_DELTA,
            smoothness: SmoothnessParams::default(),
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            out: None,
            d: 0.0,
            c: None,
            threaded_agents: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.players.is_empty() || self.players.contains(&0) {
            return Err(Error::Config("player counts must be positive".into()));
        }
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return Err(Error::Config("budgets must be positive".into()));
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "budgets must be strictly ascending, got {:?}",
                self.budgets
            )));
        }
        self.noise.validate()?;
        self.params(1, 1).validate()
    }

    pub fn params(&self, players: usize, budget: u64) -> AlgoParams {
        AlgoParams {
            players,
            budget,
            delta: self.delta,
            smoothness: self.smoothness,
        }
    }

    pub fn max_budget(&self) -> u64 {
        self.budgets.last().copied().unwrap_or(0)
    }

    fn sim_options(&self) -> SimOptions {
        SimOptions {
            scheduler: if self.threaded_agents {
                Scheduler::Threaded
            } else {
                Scheduler::Sequential
            },
            ..SimOptions::default()
        }
    }
}

/// Flat key/value experiment file. Every key is optional; missing keys keep
/// the defaults of [`ExperimentConfig::for_objective`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub objective: Option<String>,
    pub players: Option<Vec<usize>>,
    pub budgets: Option<Vec<u64>>,
    pub delta: Option<f64>,
    /// `none`, `gaussian`, `gaussian-reject` or `uniform`.
    pub noise: Option<String>,
    pub sigma: Option<f64>,
    pub halfwidth: Option<f64>,
    pub seeds: Option<SeedSpec>,
    pub out: Option<PathBuf>,
    pub nu1: Option<f64>,
    pub rho: Option<f64>,
    pub nu2: Option<f64>,
    pub d: Option<f64>,
    pub c: Option<f64>,
    pub threaded_agents: Option<bool>,
}

/// Either a number of seeds (`0..count`) or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Count(u64),
    List(Vec<u64>),
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::Count(n) => (0..*n).collect(),
            SeedSpec::List(v) => v.clone(),
        }
    }
}

impl std::str::FromStr for SeedSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |_| Error::Config(format!("cannot parse seeds `{s}`"));
        if s.contains(',') {
            s.split(',')
                .map(|t| t.trim().parse::<u64>().map_err(bad))
                .collect::<Result<Vec<_>>>()
                .map(SeedSpec::List)
        } else {
            s.trim().parse::<u64>().map(SeedSpec::Count).map_err(bad)
        }
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Values set in `overrides` win over values set in `self`.
    pub fn merge(self, overrides: ConfigFile) -> ConfigFile {
        ConfigFile {
            objective: overrides.objective.or(self.objective),
            players: overrides.players.or(self.players),
            budgets: overrides.budgets.or(self.budgets),
            delta: overrides.delta.or(self.delta),
            noise: overrides.noise.or(self.noise),
            sigma: overrides.sigma.or(self.sigma),
            halfwidth: overrides.halfwidth.or(self.halfwidth),
            seeds: overrides.seeds.or(self.seeds),
            out: overrides.out.or(self.out),
            nu1: overrides.nu1.or(self.nu1),
            rho: overrides.rho.or(self.rho),
            nu2: overrides.nu2.or(self.nu2),
            d: overrides.d.or(self.d),
            c: overrides.c.or(self.c),
            threaded_agents: overrides.threaded_agents.or(self.threaded_agents),
        }
    }

    pub fn into_config(self) -> Result<ExperimentConfig> {
        let objective: ObjectiveId = self.objective.as_deref().unwrap_or("double-sine").parse()?;
        let mut cfg = ExperimentConfig::for_objective(objective);
        if let Some(players) = self.players {
            cfg.players = players;
        }
        if let Some(budgets) = self.budgets {
            cfg.budgets = budgets;
        }
        if let Some(delta) = self.delta {
            cfg.delta = delta;
        }
        let sigma = self.sigma.unwrap_or(DEFAULT_SIGMA);
        cfg.noise = match self.noise.as_deref().unwrap_or("gaussian") {
            "none" => NoiseModel::None,
            "gaussian" => NoiseModel::gaussian(sigma),
            "gaussian-reject" => NoiseModel::TruncatedGaussian {
                sigma,
                truncation: Truncation::Reject,
            },
            "uniform" => NoiseModel::Uniform {
                halfwidth: self.halfwidth.unwrap_or(0.1),
            },
            other => return Err(Error::Config(format!("unknown noise model `{other}`"))),
        };
        if let Some(seeds) = self.seeds {
            cfg.seeds = seeds.seeds();
        }
        cfg.out = self.out;
        cfg.smoothness = SmoothnessParams {
            nu1: self.nu1.unwrap_or(cfg.smoothness.nu1),
            rho: self.rho.unwrap_or(cfg.smoothness.rho),
            nu2: self.nu2.unwrap_or(cfg.smoothness.nu2),
        };
        cfg.d = self.d.unwrap_or(cfg.d);
        cfg.c = self.c;
        cfg.threaded_agents = self.threaded_agents.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub x_n: f64,
    pub loss: f64,
    pub h_max: i64,
    pub rounds: u64,
    pub messages: u64,
    pub pulls: u64,
    /// Wall time of the whole trajectory the checkpoint was cut from.
    pub wall_ms: f64,
}

impl RunMetrics {
    fn from_result(r: &RunResult, wall_ms: f64) -> Self {
        RunMetrics {
            x_n: r.x_n,
            loss: r.loss,
            h_max: r.h_max,
            rounds: r.rounds,
            messages: r.messages,
            pulls: r.total_pulls,
            wall_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub objective: ObjectiveId,
    pub players: usize,
    pub budget: u64,
    pub seed: u64,
    /// A failed cell keeps its error message.
    pub outcome: std::result::Result<RunMetrics, String>,
}

/// Runs every `(m, seed)` cell once at the largest budget and cuts the
/// smaller budgets out of the same trajectory.
///
/// Records are ordered by player count, then budget, then seed, in config
/// order, regardless of how cells were scheduled.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let objective = Objective::from(config.objective);
    let truth = GroundTruth::builtin(config.objective);
    let options = config.sim_options();

    let cells: Vec<(usize, u64)> = config
        .players
        .iter()
        .flat_map(|&m| config.seeds.iter().map(move |&s| (m, s)))
        .collect();

    let per_cell: Vec<Vec<SweepRecord>> = cells
        .par_iter()
        .map(|&(players, seed)| {
            let params = config.params(players, config.max_budget());
            let start = Instant::now();
            let run = run_distributed_with(
                &params,
                |j| RewardOracle::for_player(objective.clone(), config.noise, seed, j),
                &truth,
                &options,
            );
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            config
                .budgets
                .iter()
                .map(|&budget| {
                    let outcome = run
                        .as_ref()
                        .map_err(|e| e.to_string())
                        .and_then(|run| {
                            run.result
                                .checkpoint(budget, players, &objective, &truth)
                                .map_err(|e| e.to_string())
                        })
                        .map(|r| RunMetrics::from_result(&r, wall_ms));
                    SweepRecord {
                        objective: config.objective,
                        players,
                        budget,
                        seed,
                        outcome,
                    }
                })
                .collect()
        })
        .collect();

    let seeds = config.seeds.len();
    let mut records = Vec::with_capacity(cells.len() * config.budgets.len());
    for by_player in per_cell.chunks(seeds) {
        for bi in 0..config.budgets.len() {
            records.extend(by_player.iter().map(|cell| cell[bi].clone()));
        }
    }
    Ok(records)
}

/// Smallest `C` that makes the `d = 0` set-size bound hold along a
/// noise-free run of `objective`.
pub fn calibrate_c(objective: ObjectiveId, params: &AlgoParams) -> Result<f64> {
    let obj = Objective::from(objective);
    let truth = GroundTruth::builtin(objective);
    let run = run_serial(
        params,
        |j| RewardOracle::for_player(obj.clone(), NoiseModel::None, 0, j),
        &truth,
    )?;
    Ok(bounds::calibrate_c(
        run.trajectory.iter().map(|l| (l.depth, l.set_size)),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordCheck {
    pub loss_ok: bool,
    pub rounds_ok: bool,
    pub messages_ok: bool,
    pub hmax_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSummary {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Required pass fraction.
    pub required: f64,
}

impl BoundSummary {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.passed as f64 / self.total as f64
        }
    }

    pub fn ok(&self) -> bool {
        self.fraction() >= self.required
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundsReport {
    pub checks: Vec<RecordCheck>,
    pub summary: Vec<BoundSummary>,
}

impl BoundsReport {
    /// The round bound holds for every run, not just with high probability.
    pub fn deterministic_ok(&self) -> bool {
        self.summary
            .iter()
            .filter(|s| s.name == "rounds")
            .all(BoundSummary::ok)
    }
}

/// Checks every successful record against the loss, rounds, messages and
/// depth bounds. `template` supplies `d`, `C`, `ν₁`, `ρ` and `δ`; `m` and `n`
/// come from each record.
pub fn verify_bounds(records: &[SweepRecord], template: &BoundParams) -> BoundsReport {
    let checks: Vec<RecordCheck> = records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|m| (r, m)))
        .map(|(r, m)| {
            let p = BoundParams {
                players: r.players,
                budget: r.budget,
                ..*template
            };
            let messages_ok = if m.h_max < 0 {
                m.messages == 0
            } else {
                m.messages as f64 <= bounds::messages_upper_bound(&p, m.h_max as u32)
            };
            RecordCheck {
                loss_ok: m.loss <= bounds::loss_upper_bound(&p),
                rounds_ok: bounds::rounds_upper_bound(&p).is_ok_and(|b| m.rounds as f64 <= b),
                messages_ok,
                hmax_ok: m.h_max as f64 >= bounds::hmax_lower_bound(&p).floor(),
            }
        })
        .collect();
    if checks.is_empty() {
        return BoundsReport::default();
    }
    let probabilistic = 1.0 - template.delta;
    let tally = |name, required, f: fn(&RecordCheck) -> bool| BoundSummary {
        name,
        passed: checks.iter().filter(|c| f(c)).count(),
        total: checks.len(),
        required,
    };
    let summary = vec![
        tally("loss", probabilistic, |c| c.loss_ok),
        tally("rounds", 1.0, |c| c.rounds_ok),
        tally("messages", probabilistic, |c| c.messages_ok),
        tally("h_max", probabilistic, |c| c.hmax_ok),
    ];
    BoundsReport { checks, summary }
}

pub fn emit_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.objective.to_string(),
            r.players.to_string(),
            r.budget.to_string(),
            r.seed.to_string(),
        ];
        match &r.outcome {
            Ok(m) => row.extend([
                m.loss.to_string(),
                m.h_max.to_string(),
                m.rounds.to_string(),
                m.messages.to_string(),
                m.pulls.to_string(),
                format!("{:.3}", m.wall_ms),
            ]),
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Mean loss and its standard error for one `(m, n)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSummary {
    pub players: usize,
    pub budget: u64,
    pub runs: usize,
    pub mean: f64,
    pub std_err: f64,
}

pub fn summarize(records: &[SweepRecord]) -> Vec<LossSummary> {
    let mut keys: Vec<(usize, u64)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.players, r.budget)) {
            keys.push((r.players, r.budget));
        }
    }
    keys.into_iter()
        .map(|(players, budget)| {
            let losses: Vec<f64> = records
                .iter()
                .filter(|r| r.players == players && r.budget == budget)
                .filter_map(|r| r.outcome.as_ref().ok().map(|m| m.loss))
                .collect();
            let (mean, std_err) = mean_and_std_err(&losses);
            LossSummary {
                players,
                budget,
                runs: losses.len(),
                mean,
                std_err,
            }
        })
        .collect()
}

pub fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
