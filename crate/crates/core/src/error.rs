use std::path::PathBuf;

use crate::partition::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point {0} lies outside the arm space [0, 1]")]
    Domain(f64),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("player {player} has no mean for node {node}")]
    MissingEntry { player: usize, node: NodeId },

    #[error("agents disagree on the confidence set after round at depth {depth}")]
    Divergence { depth: u32 },

    #[error("barrier at depth {depth} timed out: {arrived} of {expected} agents arrived")]
    BarrierTimeout {
        depth: u32,
        arrived: usize,
        expected: usize,
    },

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
