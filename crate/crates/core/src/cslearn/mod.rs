//! Online cost-sensitive multiclass learning: one regressor per action onto
//! its cost, trained with per-coordinate AdaGrad.

mod persist;

pub use persist::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};

use crate::dataio::{check_bits, FeatureVector, LabelDict};
use crate::error::{L2sError, Result};

pub type Action = usize;

pub const DEFAULT_ETA: f64 = 0.5;
pub const EPSILON: f64 = 1e-6;

/// Shared features plus one cost per allowed action.
#[derive(Clone, Debug, PartialEq)]
pub struct CostSensitiveExample {
    pub features: FeatureVector,
    pub allowed: Vec<Action>,
    pub costs: Vec<f64>,
}

impl CostSensitiveExample {
    pub fn new(features: FeatureVector, allowed: Vec<Action>, costs: Vec<f64>) -> Result<Self> {
        if allowed.len() != costs.len() {
            return Err(L2sError::contract(format!(
                "{} allowed actions but {} costs",
                allowed.len(),
                costs.len()
            )));
        }
        if let Some(c) = costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(L2sError::Numeric(format!("invalid cost {c}")));
        }
        Ok(CostSensitiveExample {
            features,
            allowed,
            costs,
        })
    }
}

/// Anything that can act as the learned policy during search.
pub trait Learner {
    fn num_actions(&self) -> usize;

    /// Lowest-scoring action among `allowed`.
    fn predict(&self, features: &FeatureVector, allowed: &[Action]) -> Result<Action>;

    fn update(&mut self, ex: &CostSensitiveExample) -> Result<()>;

    /// Number of updates applied so far.
    fn update_count(&self) -> u64;
}

/// Always picks one action, or the smallest allowed one when it is not
/// allowed. Never learns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstantPolicy {
    pub action: Action,
    pub num_actions: usize,
}

impl ConstantPolicy {
    pub fn new(action: Action, num_actions: usize) -> Self {
        ConstantPolicy { action, num_actions }
    }
}

impl Learner for ConstantPolicy {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn predict(&self, _: &FeatureVector, allowed: &[Action]) -> Result<Action> {
        if allowed.contains(&self.action) {
            return Ok(self.action);
        }
        allowed
            .iter()
            .copied()
            .min()
            .ok_or_else(|| L2sError::contract("predict called with an empty allowed set"))
    }

    fn update(&mut self, _: &CostSensitiveExample) -> Result<()> {
        Ok(())
    }

    fn update_count(&self) -> u64 {
        0
    }
}

/// Dense per-action weight blocks over a `2^bits` hashed feature space.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearCSModel {
    bits: u8,
    num_actions: usize,
    weights: Vec<f64>,
    grad_sq: Vec<f64>,
    eta: f64,
    epsilon: f64,
    updates: u64,
    labels: LabelDict,
}

impl LinearCSModel {
    pub fn new(bits: u8, num_actions: usize, eta: f64) -> Result<Self> {
        check_bits(bits)?;
        if num_actions == 0 {
            return Err(L2sError::config("model needs at least one action"));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(L2sError::config(format!("learning rate must be positive, got {eta}")));
        }
        let size = num_actions << bits;
        Ok(LinearCSModel {
            bits,
            num_actions,
            weights: vec![0.0; size],
            grad_sq: vec![0.0; size],
            eta,
            epsilon: EPSILON,
            updates: 0,
            labels: LabelDict::new(),
        })
    }

    pub fn with_labels(mut self, labels: LabelDict) -> Self {
        self.labels = labels;
        self
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn labels(&self) -> &LabelDict {
        &self.labels
    }

    #[inline]
    fn slot(&self, action: Action, index: u32) -> usize {
        (action << self.bits) | index as usize
    }

    pub fn weight(&self, action: Action, index: u32) -> f64 {
        self.weights[self.slot(action, index)]
    }

    pub fn grad_sq(&self, action: Action, index: u32) -> f64 {
        self.grad_sq[self.slot(action, index)]
    }

    pub fn set_weight(&mut self, action: Action, index: u32, w: f64) {
        let s = self.slot(action, index);
        self.weights[s] = w;
    }

    pub(crate) fn set_entry(&mut self, action: Action, index: u32, w: f64, g: f64) {
        let s = self.slot(action, index);
        self.weights[s] = w;
        self.grad_sq[s] = g;
    }

    /// Nonzero `(action, index, weight, grad_sq)` entries in storage order.
    pub fn nonzero_entries(&self) -> impl Iterator<Item = (Action, u32, f64, f64)> + '_ {
        let mask = (1usize << self.bits) - 1;
        self.weights
            .iter()
            .zip(&self.grad_sq)
            .enumerate()
            .filter(|(_, (w, g))| **w != 0.0 || **g != 0.0)
            .map(move |(s, (&w, &g))| (s >> self.bits, (s & mask) as u32, w, g))
    }

    /// Dot product of action `action`'s weight block with `fv`.
    pub fn score(&self, fv: &FeatureVector, action: Action) -> f64 {
        debug_assert!(action < self.num_actions);
        let base = action << self.bits;
        fv.iter().map(|(i, v)| self.weights[base | i as usize] * v).sum()
    }

    fn check_action(&self, a: Action) -> Result<()> {
        if a >= self.num_actions {
            return Err(L2sError::config(format!(
                "action {a} outside model with {} actions",
                self.num_actions
            )));
        }
        Ok(())
    }
}

impl Learner for LinearCSModel {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn predict(&self, features: &FeatureVector, allowed: &[Action]) -> Result<Action> {
        let mut best: Option<(Action, f64)> = None;
        for &a in allowed {
            self.check_action(a)?;
            let s = self.score(features, a);
            best = match best {
                Some((ba, bs)) if bs < s || (bs == s && ba < a) => Some((ba, bs)),
                _ => Some((a, s)),
            };
        }
        best.map(|(a, _)| a)
            .ok_or_else(|| L2sError::contract("predict called with an empty allowed set"))
    }

    fn update(&mut self, ex: &CostSensitiveExample) -> Result<()> {
        for (&a, &cost) in ex.allowed.iter().zip(&ex.costs) {
            self.check_action(a)?;
            let residual = self.score(&ex.features, a) - cost;
            if !residual.is_finite() {
                return Err(L2sError::Numeric(format!("non-finite residual for action {a}")));
            }
            let base = a << self.bits;
            for (i, v) in ex.features.iter() {
                let s = base | i as usize;
                let g = residual * v;
                self.grad_sq[s] += g * g;
                self.weights[s] -= self.eta * g / (self.grad_sq[s] + self.epsilon).sqrt();
            }
        }
        self.updates += 1;
        Ok(())
    }

    fn update_count(&self) -> u64 {
        self.updates
    }
}
