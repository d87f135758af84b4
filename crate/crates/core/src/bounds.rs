//! Closed-form theoretical bounds, with the exact constants of their
//! derivations so they can be checked against individual runs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arity of the partition tree.
pub const TREE_ARITY: f64 = 2.0;

/// Below this the near-optimality dimension is treated as zero and the
/// geometric sums are replaced by their limits.
const D_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Near-optimality dimension `d`.
    pub d: f64,
    /// Packing constant `C` that goes with `d`.
    pub c: f64,
    pub nu1: f64,
    pub rho: f64,
    pub players: usize,
    pub budget: u64,
    pub delta: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "d must be >= 0, got {}",
                self.d
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "C must be > 0, got {}",
                self.c
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0 && self.nu1 > 0.0) {
            return Err(Error::InvalidParams("need nu1 > 0 and 0 < rho < 1".into()));
        }
        if self.players == 0 || self.budget == 0 || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParams(
                "need m >= 1, n >= 1 and 0 < delta < 1".into(),
            ));
        }
        Ok(())
    }

    fn mn(&self) -> f64 {
        self.players as f64 * self.budget as f64
    }

    /// `[log(π²n³/3δ) / (mn)]^{1/(d+2)}`
    fn rate(&self) -> f64 {
        let n = self.budget as f64;
        ((PI * PI * n * n * n / (3.0 * self.delta)).ln() / self.mn()).powf(1.0 / (self.d + 2.0))
    }
}

/// `c₁ = (1/(ρν₁)) · (C·6^{-d} / (1 - ρ^{d+2}))^{1/(d+2)}`
pub fn c1_constant(p: &BoundParams) -> f64 {
    let e = p.d + 2.0;
    (p.c * 6f64.powf(-p.d) / (1.0 - p.rho.powf(e))).powf(1.0 / e) / (p.rho * p.nu1)
}

/// High-probability lower bound on the deepest expanded depth,
/// `log_ρ(c₁ · rate)`. Real valued; compare against its floor.
pub fn hmax_lower_bound(p: &BoundParams) -> f64 {
    (c1_constant(p) * p.rate()).ln() / p.rho.ln()
}

/// High-probability upper bound on the loss, `6ν₁ · c₁ · rate`.
pub fn loss_upper_bound(p: &BoundParams) -> f64 {
    6.0 * p.nu1 * c1_constant(p) * p.rate()
}

/// Upper bound on communication rounds, `log(ν₁²mn) / (2 log(1/ρ))`.
pub fn rounds_upper_bound(p: &BoundParams) -> Result<f64> {
    let arg = p.nu1 * p.nu1 * p.mn();
    if arg <= 1.0 {
        return Err(Error::InvalidParams(format!(
            "rounds bound needs nu1^2·m·n > 1, got {arg}"
        )));
    }
    Ok(arg.ln() / (2.0 * (1.0 / p.rho).ln()))
}

/// Upper bound on the values each player broadcasts up to depth `h_max`:
/// `1 + C·K·(6ν₁)^{-d} · (ρ^{-d·h_max} - 1)/(ρ^{-d} - 1)` with `K = 2`,
/// which tends to `1 + C·K·h_max` as `d → 0`.
pub fn messages_upper_bound(p: &BoundParams, h_max: u32) -> f64 {
    let ck = p.c * TREE_ARITY;
    if p.d < D_ZERO {
        return 1.0 + ck * h_max as f64;
    }
    let ratio = p.rho.powf(-p.d);
    1.0 + ck * (6.0 * p.nu1).powf(-p.d) * (ratio.powi(h_max as i32) - 1.0) / (ratio - 1.0)
}

/// Bound on `|S_h|` for `h >= 1`: `2C(6ν₁ρ^{h-1})^{-d}`.
pub fn set_size_bound(p: &BoundParams, depth: u32) -> f64 {
    debug_assert!(depth >= 1);
    TREE_ARITY * p.c * (6.0 * p.nu1 * p.rho.powi(depth as i32 - 1)).powf(-p.d)
}

/// Smallest integer `C` for which the `d = 0` set-size bound `|S_h| <= 2C`
/// covers every observed set size at depth `h >= 1`.
pub fn calibrate_c<I>(set_sizes: I) -> f64
where
    I: IntoIterator<Item = (u32, usize)>,
{
    set_sizes
        .into_iter()
        .filter(|&(depth, _)| depth >= 1)
        .map(|(_, size)| (size as f64 / TREE_ARITY).ceil())
        .fold(1.0, f64::max)
}
