//! Agent-based simulation of the players.
//!
//! Each [`PlayerAgent`] owns its oracle, its random stream and its own copy
//! of the confidence set. Agents sample a level independently (optionally
//! on separate threads), post one [`BroadcastMessage`] each to the
//! [`BroadcastBus`], and wait at the barrier. Once every message is in,
//! each agent aggregates all payloads itself and applies the expansion rule.
//! Nothing is shared between barriers, so the outcome does not depend on
//! scheduling.

use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::algo::{
    aggregate_means, level_fits, select_expansions, AlgoParams, ConfidenceSet, LevelRecord,
    PlayerMeans, RunResult,
};
use crate::error::{Error, Result};
use crate::objective::{GroundTruth, RewardOracle};
use crate::partition::{cell_of, NodeId};

pub const DEFAULT_BARRIER_TIMEOUT: Duration = Duration::from_secs(30);

/// One player's means for every node of `S_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadcastMessage {
    pub sender: usize,
    pub depth: u32,
    pub payload: Vec<(NodeId, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommAccounting {
    /// Completed broadcast rounds `q`.
    pub rounds: u64,
    /// Values broadcast by each player, `M`.
    pub values_per_player: u64,
    /// Payload length of each round.
    pub payload_sizes: Vec<usize>,
    /// Values carried by the bus across all senders.
    pub values_observed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommSummary {
    pub rounds: u64,
    pub values_per_player: u64,
    pub max_payload: usize,
    pub values_observed: u64,
}

pub fn account(comm: &CommAccounting) -> CommSummary {
    CommSummary {
        rounds: comm.rounds,
        values_per_player: comm.values_per_player,
        max_payload: comm.payload_sizes.iter().copied().max().unwrap_or(0),
        values_observed: comm.values_observed,
    }
}

/// Per-round trace: sample schedule and cumulative pulls of every agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub depth: u32,
    pub t_h: u64,
    pub set_size: usize,
    pub pulls_per_agent: Vec<u64>,
}

/// In-process all-to-all channel with a barrier.
pub struct BroadcastBus {
    tx: Sender<BroadcastMessage>,
    rx: Receiver<BroadcastMessage>,
    timeout: Duration,
    comm: CommAccounting,
}

impl BroadcastBus {
    pub fn new(timeout: Duration) -> Self {
        let (tx, rx) = mpsc::channel();
        BroadcastBus {
            tx,
            rx,
            timeout,
            comm: CommAccounting::default(),
        }
    }

    pub fn sender(&self) -> Sender<BroadcastMessage> {
        self.tx.clone()
    }

    pub fn accounting(&self) -> &CommAccounting {
        &self.comm
    }

    /// Waits until `expected` messages for `depth` have arrived and closes the
    /// round. Messages come back sorted by sender.
    pub fn collect(&mut self, depth: u32, expected: usize) -> Result<Vec<BroadcastMessage>> {
        let deadline = Instant::now() + self.timeout;
        let mut inbox = Vec::with_capacity(expected);
        while inbox.len() < expected {
            let wait = deadline.saturating_duration_since(Instant::now());
            match self.rx.recv_timeout(wait) {
                Ok(msg) if msg.depth == depth => inbox.push(msg),
                Ok(_) => return Err(Error::Divergence { depth }),
                Err(RecvTimeoutError::Timeout) | Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::BarrierTimeout {
                        depth,
                        arrived: inbox.len(),
                        expected,
                    })
                }
            }
        }
        inbox.sort_by_key(|m| m.sender);
        if inbox.windows(2).any(|w| w[0].sender == w[1].sender) {
            return Err(Error::Divergence { depth });
        }
        let size = inbox.first().map_or(0, |m| m.payload.len());
        if inbox.iter().any(|m| m.payload.len() != size) {
            return Err(Error::Divergence { depth });
        }
        self.comm.rounds += 1;
        self.comm.values_per_player += size as u64;
        self.comm.payload_sizes.push(size);
        self.comm.values_observed += inbox.iter().map(|m| m.payload.len() as u64).sum::<u64>();
        Ok(inbox)
    }
}

pub struct PlayerAgent {
    id: usize,
    params: AlgoParams,
    oracle: RewardOracle,
    set: ConfidenceSet,
    used: u64,
    trajectory: Vec<LevelRecord>,
}

impl PlayerAgent {
    pub fn new(id: usize, params: AlgoParams, oracle: RewardOracle) -> Self {
        PlayerAgent {
            id,
            set: ConfidenceSet::root(&params),
            params,
            oracle,
            used: 0,
            trajectory: Vec::new(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn pulls(&self) -> u64 {
        self.oracle.pulls()
    }

    pub fn confidence_set(&self) -> &ConfidenceSet {
        &self.set
    }

    pub fn trajectory(&self) -> &[LevelRecord] {
        &self.trajectory
    }

    /// Whether the next level fits in this agent's remaining budget.
    pub fn can_continue(&self) -> bool {
        level_fits(
            self.set.depth,
            self.set.cost(),
            self.used,
            self.params.budget,
        )
    }

    /// Pulls every member `T_h` times and returns this agent's broadcast.
    pub fn sample_level(&mut self) -> Result<BroadcastMessage> {
        let mut payload = Vec::with_capacity(self.set.len());
        for &node in &self.set.members {
            let x = cell_of(node).rep_point;
            let mut sum = 0.0;
            for _ in 0..self.set.t_h {
                sum += self.oracle.pull(x)?;
            }
            payload.push((node, sum / self.set.t_h as f64));
        }
        self.used += self.set.cost();
        Ok(BroadcastMessage {
            sender: self.id,
            depth: self.set.depth,
            payload,
        })
    }

    /// Aggregates a full round of messages and advances to the next depth.
    pub fn receive(&mut self, messages: &[BroadcastMessage]) -> Result<()> {
        let reports: Vec<PlayerMeans> = messages
            .iter()
            .map(|m| PlayerMeans {
                player: m.sender,
                means: m.payload.clone(),
            })
            .collect();
        self.set.agg_means = aggregate_means(&self.set.members, &reports, self.params.players)?;
        let (expanded, next) = select_expansions(&self.set, &self.params)?;
        self.trajectory
            .push(LevelRecord::from_set(&self.set, expanded.len()));
        self.set = next;
        Ok(())
    }
}

/// Delivers the round's messages to every agent, has each aggregate them,
/// and checks that all agents agree on the result. Returns the aggregated
/// means of `S_h`.
pub fn barrier_broadcast(
    bus: &mut BroadcastBus,
    agents: &mut [PlayerAgent],
    depth: u32,
) -> Result<Vec<f64>> {
    let messages = bus.collect(depth, agents.len())?;
    for agent in agents.iter_mut() {
        agent.receive(&messages)?;
    }
    let (first, rest) = agents.split_first().ok_or(Error::Divergence { depth })?;
    let reference = first.trajectory.last().ok_or(Error::Divergence { depth })?;
    for agent in rest {
        let same_level = agent.trajectory.last().is_some_and(|l| {
            l.members == reference.members
                && l.agg_means
                    .iter()
                    .map(|v| v.to_bits())
                    .eq(reference.agg_means.iter().map(|v| v.to_bits()))
        });
        if !same_level || agent.set.members != first.set.members {
            return Err(Error::Divergence { depth });
        }
    }
    Ok(reference.agg_means.clone())
}

/// How agents are stepped during the sampling phase of a level.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Scheduler {
    /// Agents in id order on the calling thread.
    #[default]
    Sequential,
    /// Agents in the given order of positions `0..m` on the calling thread.
    Permuted(Vec<usize>),
    /// One thread per agent.
    Threaded,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub scheduler: Scheduler,
    pub barrier_timeout: Duration,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            scheduler: Scheduler::Sequential,
            barrier_timeout: DEFAULT_BARRIER_TIMEOUT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedRun {
    pub result: RunResult,
    pub comm: CommAccounting,
    pub trace: Vec<RoundTrace>,
}

pub fn run_distributed<F>(
    params: &AlgoParams,
    oracle_for: F,
    ground_truth: &GroundTruth,
) -> Result<DistributedRun>
where
    F: Fn(usize) -> RewardOracle,
{
    run_distributed_with(params, oracle_for, ground_truth, &SimOptions::default())
}

pub fn run_distributed_with<F>(
    params: &AlgoParams,
    oracle_for: F,
    ground_truth: &GroundTruth,
    options: &SimOptions,
) -> Result<DistributedRun>
where
    F: Fn(usize) -> RewardOracle,
{
    params.validate()?;
    let m = params.players;
    let mut agents: Vec<PlayerAgent> = (1..=m)
        .map(|j| PlayerAgent::new(j, *params, oracle_for(j)))
        .collect();
    let objective = agents[0].oracle.objective().clone();
    if let Scheduler::Permuted(order) = &options.scheduler {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != (0..m).collect::<Vec<_>>() {
            return Err(Error::InvalidParams(format!(
                "scheduler order {order:?} is not a permutation of 0..{m}"
            )));
        }
    }

    let mut bus = BroadcastBus::new(options.barrier_timeout);
    let mut trace = Vec::new();

    loop {
        let depth = agents[0].set.depth;
        let go = agents[0].can_continue();
        if agents.iter().any(|a| a.can_continue() != go) {
            return Err(Error::Divergence { depth });
        }
        if !go {
            break;
        }
        let (t_h, set_size) = (agents[0].set.t_h, agents[0].set.len());

        match &options.scheduler {
            Scheduler::Sequential => {
                for agent in agents.iter_mut() {
                    post(agent, &bus.sender())?;
                }
            }
            Scheduler::Permuted(order) => {
                for &k in order {
                    post(&mut agents[k], &bus.sender())?;
                }
            }
            Scheduler::Threaded => {
                thread::scope(|scope| {
                    let handles: Vec<_> = agents
                        .iter_mut()
                        .map(|agent| {
                            let tx = bus.sender();
                            scope.spawn(move || post(agent, &tx))
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("agent thread panicked"))
                        .collect::<Result<Vec<()>>>()
                })?;
            }
        }

        barrier_broadcast(&mut bus, &mut agents, depth)?;
        trace.push(RoundTrace {
            depth,
            t_h,
            set_size,
            pulls_per_agent: agents.iter().map(PlayerAgent::pulls).collect(),
        });
    }

    let total_pulls = agents.iter().map(PlayerAgent::pulls).sum();
    let trajectory = agents.swap_remove(0).trajectory;
    let result = RunResult::from_trajectory(trajectory, m, total_pulls, &objective, ground_truth)?;
    Ok(DistributedRun {
        result,
        comm: bus.comm,
        trace,
    })
}

fn post(agent: &mut PlayerAgent, tx: &Sender<BroadcastMessage>) -> Result<()> {
    let msg = agent.sample_level()?;
    // The bus outlives every sampling phase, so the receiver is still open.
    tx.send(msg).expect("bus receiver dropped");
    Ok(())
}
