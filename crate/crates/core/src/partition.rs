//! Dyadic binary covering tree over the arm space `X = [0, 1]`.
//!
//! Node `(h, i)` owns the cell `[(i-1)/2^h, i/2^h]` and is represented by the
//! cell midpoint. Nodes are plain values; the tree is never materialized, a
//! run only ever holds the nodes of the current confidence set.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest level whose cell endpoints are still exact in an `f64`.
pub const MAX_DEPTH: u32 = 52;

/// Node `(h, i)` of the covering tree, with `1 <= i <= 2^h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub depth: u32,
    pub index: u64,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId { depth: 0, index: 1 };

    pub fn new(depth: u32, index: u64) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(Error::InvalidParams(format!(
                "depth {depth} exceeds the supported maximum {MAX_DEPTH}"
            )));
        }
        if index == 0 || index > 1u64 << depth {
            return Err(Error::InvalidParams(format!(
                "index {index} is outside [1, 2^{depth}]"
            )));
        }
        Ok(NodeId { depth, index })
    }

    pub fn is_valid(&self) -> bool {
        self.depth <= MAX_DEPTH && self.index >= 1 && self.index <= 1u64 << self.depth
    }

    pub fn children(self) -> (NodeId, NodeId) {
        children(self)
    }

    pub fn cell(self) -> Cell {
        cell_of(self)
    }

    /// The depth-`h` node whose cell contains `x`. Points on a shared
    /// boundary go to the right-hand cell, except `x = 1`.
    pub fn containing(x: f64, depth: u32) -> Result<NodeId> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(x));
        }
        let width = 1u64 << depth;
        let index = ((x * width as f64).floor() as u64 + 1).min(width);
        NodeId::new(depth, index)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.depth, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub node: NodeId,
    pub lower: f64,
    pub upper: f64,
    pub rep_point: f64,
}

impl Cell {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn children(node: NodeId) -> (NodeId, NodeId) {
    let depth = node.depth + 1;
    (
        NodeId {
            depth,
            index: 2 * node.index - 1,
        },
        NodeId {
            depth,
            index: 2 * node.index,
        },
    )
}

pub fn cell_of(node: NodeId) -> Cell {
    // Powers of two and small integer multiples of them are exact in f64.
    let width = (-(node.depth as f64)).exp2();
    let lower = (node.index - 1) as f64 * width;
    let upper = node.index as f64 * width;
    Cell {
        node,
        lower,
        upper,
        rep_point: lower + 0.5 * width,
    }
}

/// `ℓ(x, y) = |x - y|`.
pub fn semi_metric(x: f64, y: f64) -> f64 {
    (x - y).abs()
}

/// Smoothness constants `(ν₁, ρ, ν₂)` tying cell geometry to the semi-metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessParams {
    pub nu1: f64,
    pub rho: f64,
    pub nu2: f64,
}

impl Default for SmoothnessParams {
    fn default() -> Self {
        SmoothnessParams {
            nu1: 1.0,
            rho: 0.5,
            nu2: 0.5,
        }
    }
}

impl SmoothnessParams {
    pub fn new(nu1: f64, rho: f64, nu2: f64) -> Result<Self> {
        let p = SmoothnessParams { nu1, rho, nu2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu1.is_finite() && self.nu1 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "nu1 must be positive, got {}",
                self.nu1
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidParams(format!(
                "rho must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if !(self.nu2.is_finite() && self.nu2 > 0.0 && self.nu2 <= self.nu1) {
            return Err(Error::InvalidParams(format!(
                "nu2 must lie in (0, nu1], got {}",
                self.nu2
            )));
        }
        Ok(())
    }

    /// `ν₁ρ^h`, the diameter allowance at depth `h`.
    pub fn scale(&self, depth: u32) -> f64 {
        self.nu1 * self.rho.powi(depth as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    /// Cell reaches further than `ν₁ρ^h` from its representative.
    Diameter { sup_distance: f64, allowed: f64 },
    /// The `ν₂ρ^h` ball around the representative leaves the cell.
    Ball { radius: f64, inner_radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub node: NodeId,
    pub kind: ViolationKind,
}

/// Checks the bounded-diameter and well-shaped-cell conditions for every
/// depth up to `max_depth`.
///
/// Cells at one depth are translates of each other and `ℓ` is translation
/// invariant, so each depth is checked on its first, middle and last cell.
/// All quantities are dyadic, so the comparisons are exact.
pub fn check_assumptions(params: &SmoothnessParams, max_depth: u32) -> Vec<Violation> {
    let mut violations = Vec::new();
    for depth in 0..=max_depth.min(MAX_DEPTH) {
        let last = 1u64 << depth;
        let mut sampled = vec![1, last / 2 + 1, last];
        sampled.dedup();
        sampled.retain(|&i| i <= last);
        let allowed = params.scale(depth);
        let radius = params.nu2 * params.rho.powi(depth as i32);
        for index in sampled {
            let cell = cell_of(NodeId { depth, index });
            let sup_distance = semi_metric(cell.rep_point, cell.lower)
                .max(semi_metric(cell.rep_point, cell.upper));
            if sup_distance > allowed {
                violations.push(Violation {
                    node: cell.node,
                    kind: ViolationKind::Diameter {
                        sup_distance,
                        allowed,
                    },
                });
            }
            let inner_radius = (cell.rep_point - cell.lower).min(cell.upper - cell.rep_point);
            if radius > inner_radius {
                violations.push(Violation {
                    node: cell.node,
                    kind: ViolationKind::Ball {
                        radius,
                        inner_radius,
                    },
                });
            }
        }
    }
    violations
}
