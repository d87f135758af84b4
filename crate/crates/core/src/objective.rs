//! Test objectives, bounded noise, and the per-player reward oracle.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid size used for the built-in ground truths.
pub const GROUND_TRUTH_RESOLUTION: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveId {
    DoubleSine,
    Garland,
}

impl ObjectiveId {
    pub const ALL: [ObjectiveId; 2] = [ObjectiveId::DoubleSine, ObjectiveId::Garland];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveId::DoubleSine => "double-sine",
            ObjectiveId::Garland => "garland",
        }
    }
}

impl fmt::Display for ObjectiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "double-sine" | "doublesine" | "sine" => Ok(ObjectiveId::DoubleSine),
            "garland" => Ok(ObjectiveId::Garland),
            other => Err(Error::Config(format!("unknown objective `{other}`"))),
        }
    }
}

type CustomFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A deterministic objective `f : [0, 1] -> [0, 1]`.
#[derive(Clone)]
pub enum Objective {
    /// `f(x) = (sin(13x)·sin(27x)/2 + 1)/2`
    DoubleSine,
    /// `f(x) = x(1-x)(4 - sqrt|sin(60x)|)`
    Garland,
    Custom {
        name: String,
        f: CustomFn,
    },
}

impl Objective {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Objective::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(value: f64) -> Self {
        Objective::custom(format!("constant({value})"), move |_| value)
    }

    pub fn name(&self) -> &str {
        match self {
            Objective::DoubleSine => ObjectiveId::DoubleSine.name(),
            Objective::Garland => ObjectiveId::Garland.name(),
            Objective::Custom { name, .. } => name,
        }
    }

    pub fn id(&self) -> Option<ObjectiveId> {
        match self {
            Objective::DoubleSine => Some(ObjectiveId::DoubleSine),
            Objective::Garland => Some(ObjectiveId::Garland),
            Objective::Custom { .. } => None,
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(x));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        match self {
            Objective::DoubleSine => 0.5 * ((13.0 * x).sin() * (27.0 * x).sin() / 2.0 + 1.0),
            Objective::Garland => x * (1.0 - x) * (4.0 - (60.0 * x).sin().abs().sqrt()),
            Objective::Custom { f, .. } => f(x),
        }
    }
}

impl From<ObjectiveId> for Objective {
    fn from(id: ObjectiveId) -> Self {
        match id {
            ObjectiveId::DoubleSine => Objective::DoubleSine,
            ObjectiveId::Garland => Objective::Garland,
        }
    }
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Objective({})", self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    /// `clamp(f(x) + g, 0, 1)`.
    #[default]
    Clamp,
    /// Redraw `g` until `f(x) + g` lands in `[0, 1]`.
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseModel {
    None,
    TruncatedGaussian { sigma: f64, truncation: Truncation },
    Uniform { halfwidth: f64 },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Self {
        NoiseModel::TruncatedGaussian {
            sigma,
            truncation: Truncation::Clamp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::TruncatedGaussian { sigma, .. } if sigma.is_finite() && sigma >= 0.0 => {
                Ok(())
            }
            NoiseModel::Uniform { halfwidth } if halfwidth.is_finite() && halfwidth >= 0.0 => {
                Ok(())
            }
            other => Err(Error::InvalidParams(format!("bad noise model {other:?}"))),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            NoiseModel::None => "none".into(),
            NoiseModel::TruncatedGaussian {
                sigma,
                truncation: Truncation::Clamp,
            } => {
                format!("gaussian(sigma={sigma})")
            }
            NoiseModel::TruncatedGaussian {
                sigma,
                truncation: Truncation::Reject,
            } => {
                format!("gaussian-reject(sigma={sigma})")
            }
            NoiseModel::Uniform { halfwidth } => format!("uniform(halfwidth={halfwidth})"),
        }
    }
}

/// Independent stream for `player`, derived from the master seed.
///
/// Each player gets its own ChaCha stream id under one key, so streams never
/// overlap and do not depend on how players are scheduled.
pub fn player_stream(master_seed: u64, player: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(player as u64);
    rng
}

/// One player's view of the environment: objective, noise and a private
/// random stream, plus a pull counter.
#[derive(Debug, Clone)]
pub struct RewardOracle {
    objective: Objective,
    noise: NoiseModel,
    rng: ChaCha8Rng,
    pulls: u64,
}

impl RewardOracle {
    pub fn new(objective: Objective, noise: NoiseModel, rng: ChaCha8Rng) -> Self {
        RewardOracle {
            objective,
            noise,
            rng,
            pulls: 0,
        }
    }

    pub fn for_player(
        objective: Objective,
        noise: NoiseModel,
        master_seed: u64,
        player: usize,
    ) -> Self {
        Self::new(objective, noise, player_stream(master_seed, player))
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    /// Draws one reward at `x`, always in `[0, 1]`.
    pub fn pull(&mut self, x: f64) -> Result<f64> {
        let mean = self.objective.evaluate(x)?;
        self.pulls += 1;
        let reward = match self.noise {
            NoiseModel::None => mean,
            NoiseModel::TruncatedGaussian { sigma, truncation } => {
                if sigma == 0.0 {
                    mean
                } else {
                    let normal =
                        Normal::new(0.0, sigma).map_err(|e| Error::InvalidParams(e.to_string()))?;
                    match truncation {
                        Truncation::Clamp => mean + normal.sample(&mut self.rng),
                        Truncation::Reject => loop {
                            let r = mean + normal.sample(&mut self.rng);
                            if (0.0..=1.0).contains(&r) {
                                break r;
                            }
                        },
                    }
                }
            }
            NoiseModel::Uniform { halfwidth } => {
                if halfwidth == 0.0 {
                    mean
                } else {
                    mean + self.rng.random_range(-halfwidth..=halfwidth)
                }
            }
        };
        Ok(reward.clamp(0.0, 1.0))
    }
}

/// Location and value of the global maximum, found by brute force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub f_star: f64,
    pub x_star: f64,
    pub grid_resolution: usize,
}

impl GroundTruth {
    /// Ground truth of a built-in objective at the default resolution,
    /// computed once per process.
    pub fn builtin(id: ObjectiveId) -> GroundTruth {
        static CACHE: [OnceLock<GroundTruth>; 2] = [OnceLock::new(), OnceLock::new()];
        let slot = match id {
            ObjectiveId::DoubleSine => &CACHE[0],
            ObjectiveId::Garland => &CACHE[1],
        };
        *slot.get_or_init(|| {
            find_ground_truth(&id.into(), GROUND_TRUTH_RESOLUTION).expect("resolution is valid")
        })
    }

    /// `f* - f(x)`.
    pub fn loss(&self, objective: &Objective, x: f64) -> Result<f64> {
        Ok(self.f_star - objective.evaluate(x)?)
    }
}

/// Grid search over `resolution` evenly spaced points, then a ternary search
/// in the two grid cells around the best point.
pub fn find_ground_truth(objective: &Objective, resolution: usize) -> Result<GroundTruth> {
    if resolution < 1000 {
        return Err(Error::InvalidParams(format!(
            "ground-truth resolution must be at least 1000, got {resolution}"
        )));
    }
    let step = 1.0 / (resolution - 1) as f64;
    let grid_point = |k: usize| {
        if k == resolution - 1 {
            1.0
        } else {
            k as f64 * step
        }
    };

    // Lowest index wins ties, so the reduction is independent of rayon's split.
    let (best_k, best_v) = (0..resolution)
        .into_par_iter()
        .map(|k| (k, objective.eval_unchecked(grid_point(k))))
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );

    let mut lo = grid_point(best_k.saturating_sub(1));
    let mut hi = grid_point((best_k + 1).min(resolution - 1));
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if objective.eval_unchecked(m1) < objective.eval_unchecked(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }

    let mut x_star = grid_point(best_k);
    let mut f_star = best_v;
    for x in [lo, hi, 0.5 * (lo + hi)] {
        let v = objective.eval_unchecked(x);
        if v > f_star {
            f_star = v;
            x_star = x;
        }
    }
    Ok(GroundTruth {
        f_star,
        x_star,
        grid_resolution: resolution,
    })
}
