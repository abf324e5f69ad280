use std::fmt;
use std::str::FromStr;

use crate::error::{L2sError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Dagger,
    Searn,
    Lols,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RollinSource {
    Learned,
    Mix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RolloutSource {
    Reference,
    Learned,
    Mix,
    None,
}

macro_rules! enum_strings {
    ($ty:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = L2sError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($ty::$variant),)+
                    other => Err(L2sError::config(format!(
                        concat!("unknown ", stringify!($ty), " {:?}"), other
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $s,)+ })
            }
        }
    };
}

enum_strings!(Algorithm { Dagger => "dagger", Searn => "searn", Lols => "lols" });
enum_strings!(RollinSource { Learned => "learned", Mix => "mix" });
enum_strings!(RolloutSource { Reference => "ref", Learned => "learned", Mix => "mix", None => "none" });

/// Interpolation default: the middle of the 1e-10..1e-6 range.
pub const DEFAULT_INTERPOLATION: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainerConfig {
    pub algorithm: Algorithm,
    pub rollin: RollinSource,
    pub rollout: RolloutSource,
    /// Interpolation rate: rollin mixing picks the reference with
    /// probability `(1 - beta)^u` after `u` updates.
    pub beta: f64,
    /// Probability a LOLS rollout follows the reference.
    pub rollout_mix_prob: f64,
    pub collapse_h: Option<usize>,
    /// Fraction of rollin positions used as deviation points.
    pub subsample: f64,
    pub passes: f64,
    /// Buffer the cost-sensitive examples of one structured example and
    /// apply them after its last deviation.
    pub update_per_example: bool,
    pub cache_enabled: bool,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig::for_algorithm(Algorithm::Lols)
    }
}

impl TrainerConfig {
    /// Defaults for `algorithm`: LOLS rolls in with the learned policy and
    /// out with a reference/learned mixture, Searn interpolates both, DAgger
    /// interpolates the rollin and never rolls out.
    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        let (rollin, rollout) = match algorithm {
            Algorithm::Lols => (RollinSource::Learned, RolloutSource::Mix),
            Algorithm::Searn => (RollinSource::Mix, RolloutSource::Mix),
            Algorithm::Dagger => (RollinSource::Mix, RolloutSource::None),
        };
        TrainerConfig {
            algorithm,
            rollin,
            rollout,
            beta: DEFAULT_INTERPOLATION,
            rollout_mix_prob: 0.5,
            collapse_h: None,
            subsample: 1.0,
            passes: 1.0,
            update_per_example: false,
            cache_enabled: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.algorithm, self.rollout) {
            (Algorithm::Dagger, RolloutSource::None) => {}
            (Algorithm::Dagger, r) => {
                return Err(L2sError::config(format!("dagger does not roll out (got rollout {r})")))
            }
            (a, RolloutSource::None) => {
                return Err(L2sError::config(format!("{a} needs a rollout policy")))
            }
            _ => {}
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(L2sError::config(format!("interpolation must be in (0, 1], got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.rollout_mix_prob) {
            return Err(L2sError::config(format!(
                "rollout mix probability must be in [0, 1], got {}",
                self.rollout_mix_prob
            )));
        }
        if self.collapse_h == Some(0) {
            return Err(L2sError::config("collapse horizon must be at least 1"));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(L2sError::config(format!("subsample must be in (0, 1], got {}", self.subsample)));
        }
        if !(self.passes.is_finite() && self.passes > 0.0) {
            return Err(L2sError::config(format!("passes must be positive, got {}", self.passes)));
        }
        Ok(())
    }
}
