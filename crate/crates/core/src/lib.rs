//! Distributed optimization of a noisy function over `[0, 1]` by `m`
//! cooperating players.
//!
//! Players walk a dyadic partition tree one depth at a time. At each depth
//! they sample every node of the current confidence set a fixed number of
//! times, broadcast their mean rewards, and keep expanding only the nodes
//! whose aggregated mean is close to the best one.
//!
//! [`serial::run_serial`] is the single-process reference implementation;
//! [`distsim::run_distributed`] runs the same search as independent agents
//! synchronized by a broadcast bus and must agree with it exactly.

pub mod algo;
pub mod bench;
pub mod bounds;
pub mod distsim;
pub mod error;
pub mod objective;
pub mod partition;
pub mod serial;

pub use algo::{AlgoParams, ConfidenceSet, LevelRecord, RunResult, RunStatus};
pub use error::{Error, Result};
pub use objective::{GroundTruth, NoiseModel, Objective, ObjectiveId, RewardOracle};
pub use partition::{NodeId, SmoothnessParams};
