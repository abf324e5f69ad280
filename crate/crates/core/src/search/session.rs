use std::collections::HashMap;

use super::counters::Counters;
use super::policy::{choose_policy_tied, ExampleContext, Phase, PolicyChoice};
use super::config::TrainerConfig;
use crate::cslearn::{Action, Learner};
use crate::dataio::FeatureVector;
use crate::error::{L2sError, Result};

/// One call to [`Session::predict`].
#[derive(Clone, Debug)]
pub struct PredictRequest {
    pub features: FeatureVector,
    /// The reference (oracle) decision.
    pub reference: Action,
    /// Name of this prediction, starting at 1.
    pub tag: u32,
    /// Tags of the earlier predictions the features were built from.
    pub condition_tags: Vec<u32>,
    pub allowed: Option<Vec<Action>>,
}

impl PredictRequest {
    pub fn new(features: FeatureVector, reference: Action, tag: u32) -> Self {
        PredictRequest {
            features,
            reference,
            tag,
            condition_tags: Vec::new(),
            allowed: None,
        }
    }

    pub fn condition_on(mut self, tags: Vec<u32>) -> Self {
        self.condition_tags = tags;
        self
    }

    pub fn allowed(mut self, allowed: Vec<Action>) -> Self {
        self.allowed = Some(allowed);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SessionMode {
    Rollin,
    /// One-step deviation: `t0` is 1-based.
    Deviation { t0: usize, a0: Action },
    TestDecode,
}

/// A step of the rollin trajectory: `ex[t]` and `cache[t]`.
#[derive(Clone, Debug)]
pub(crate) struct RolledStep {
    pub features: FeatureVector,
    pub allowed: Vec<Action>,
    pub reference: Action,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct MemoKey {
    policy: PolicyChoice,
    tag: u32,
    condition_tags: Vec<u32>,
    condition_actions: Vec<Action>,
}

/// State kept across all runs of one structured example.
#[derive(Default)]
pub(crate) struct ExampleState {
    pub steps: Vec<RolledStep>,
    memo: HashMap<MemoKey, Action>,
    pub counters: Counters,
}

/// Training-time settings a run needs besides its mode.
#[derive(Clone, Copy)]
pub(crate) struct RunPlan<'c> {
    pub cfg: &'c TrainerConfig,
    pub ctx: ExampleContext,
    pub rollout_policy: PolicyChoice,
}

/// The handle a task program talks to for one execution.
///
/// Depending on the mode, `predict` records a rollin, replays a cached
/// prefix and forces a deviation, or plainly decodes with the learned
/// policy.
pub struct Session<'a> {
    mode: SessionMode,
    learner: &'a dyn Learner,
    state: &'a mut ExampleState,
    plan: Option<RunPlan<'a>>,
    t: usize,
    tag_actions: HashMap<u32, Action>,
    loss_acc: f64,
    rollout_steps_taken: usize,
    collapsed: bool,
    finished: bool,
}

impl<'a> Session<'a> {
    pub(crate) fn new(
        mode: SessionMode,
        learner: &'a dyn Learner,
        state: &'a mut ExampleState,
        plan: Option<RunPlan<'a>>,
    ) -> Self {
        Session {
            mode,
            learner,
            state,
            plan,
            t: 0,
            tag_actions: HashMap::new(),
            loss_acc: 0.0,
            rollout_steps_taken: 0,
            collapsed: false,
            finished: false,
        }
    }

    pub fn mode(&self) -> SessionMode {
        self.mode
    }

    /// False at test time, where reference decisions are ignored and tasks
    /// may skip computing them.
    pub fn wants_reference(&self) -> bool {
        self.mode != SessionMode::TestDecode
    }

    /// Number of predictions made so far in this run.
    pub fn steps(&self) -> usize {
        self.t
    }

    /// Loss declared in this run (for a deviation, after any collapse point
    /// losses are dropped).
    pub fn loss(&self) -> f64 {
        self.loss_acc
    }

    pub(crate) fn finish(&mut self) -> f64 {
        self.finished = true;
        self.loss_acc
    }

    fn validate(&self, req: &PredictRequest) -> Result<()> {
        if self.finished {
            return Err(L2sError::contract("predict called after the task returned"));
        }
        if req.tag == 0 {
            return Err(L2sError::contract("prediction tags start at 1"));
        }
        let k = self.learner.num_actions();
        if req.reference >= k {
            return Err(L2sError::config(format!(
                "reference action {} outside {k} actions",
                req.reference
            )));
        }
        if let Some(allowed) = &req.allowed {
            if allowed.is_empty() {
                return Err(L2sError::contract(format!("empty allowed set at tag {}", req.tag)));
            }
            if let Some(a) = allowed.iter().find(|&&a| a >= k) {
                return Err(L2sError::config(format!("allowed action {a} outside {k} actions")));
            }
        }
        Ok(())
    }

    fn reference_action(reference: Action, allowed: &[Action]) -> Action {
        if allowed.contains(&reference) {
            reference
        } else {
            allowed.iter().copied().min().unwrap_or(reference)
        }
    }

    fn call_policy(&mut self, policy: PolicyChoice, req: &PredictRequest, allowed: &[Action]) -> Result<Action> {
        self.state.counters.policy_calls += 1;
        match policy {
            PolicyChoice::Reference => Ok(Self::reference_action(req.reference, allowed)),
            PolicyChoice::Learned => self.learner.predict(&req.features, allowed),
        }
    }

    /// Memoized rollout prediction keyed by the tag, its condition tags and
    /// the actions currently assigned to them.
    pub(crate) fn memo_lookup_or_call(
        &mut self,
        req: &PredictRequest,
        allowed: &[Action],
        policy: PolicyChoice,
    ) -> Result<Action> {
        let condition_actions = req
            .condition_tags
            .iter()
            .map(|tag| {
                self.tag_actions.get(tag).copied().ok_or_else(|| {
                    L2sError::contract(format!(
                        "tag {} conditions on tag {tag}, which was not predicted in this trajectory",
                        req.tag
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let key = MemoKey {
            policy,
            tag: req.tag,
            condition_tags: req.condition_tags.clone(),
            condition_actions,
        };
        if let Some(&a) = self.state.memo.get(&key) {
            self.state.counters.memo_hits += 1;
            return Ok(a);
        }
        let a = self.call_policy(policy, req, allowed)?;
        self.state.memo.insert(key, a);
        self.state.counters.memo_stores += 1;
        Ok(a)
    }

    pub fn predict(&mut self, req: PredictRequest) -> Result<Action> {
        self.validate(&req)?;
        let allowed = req
            .allowed
            .clone()
            .unwrap_or_else(|| (0..self.learner.num_actions()).collect());
        self.t += 1;
        let t = self.t;
        let action = match self.mode {
            SessionMode::TestDecode => self.call_policy(PolicyChoice::Learned, &req, &allowed)?,
            SessionMode::Rollin => {
                let plan = self.plan.expect("rollin runs carry a plan");
                let policy = choose_policy_tied(
                    plan.cfg,
                    Phase::Rollin,
                    t,
                    plan.ctx,
                    self.learner.update_count(),
                );
                let a = self.call_policy(policy, &req, &allowed)?;
                let reference = Self::reference_action(req.reference, &allowed);
                self.state.steps.push(RolledStep {
                    features: req.features.clone(),
                    allowed: allowed.clone(),
                    reference,
                    action: a,
                });
                a
            }
            SessionMode::Deviation { t0, a0 } => {
                let plan = self.plan.expect("deviation runs carry a plan");
                if t < t0 {
                    self.state.steps.get(t - 1).map(|s| s.action).ok_or_else(|| {
                        L2sError::contract(format!("run diverged from its rollin at step {t}"))
                    })?
                } else if t == t0 {
                    a0
                } else if self.collapsed
                    || plan.cfg.collapse_h.is_some_and(|h| self.rollout_steps_taken >= h)
                {
                    self.collapsed = true;
                    *allowed.iter().min().expect("allowed is nonempty")
                } else {
                    self.rollout_steps_taken += 1;
                    self.state.counters.rollout_steps += 1;
                    if plan.cfg.cache_enabled {
                        self.memo_lookup_or_call(&req, &allowed, plan.rollout_policy)?
                    } else {
                        self.call_policy(plan.rollout_policy, &req, &allowed)?
                    }
                }
            }
        };
        self.tag_actions.insert(req.tag, action);
        Ok(action)
    }

    /// Adds `val` to the loss of this run. Negative or non-finite values are
    /// rejected.
    pub fn declare_loss(&mut self, val: f64) -> Result<()> {
        if !val.is_finite() {
            return Err(L2sError::Numeric(format!("non-finite loss {val}")));
        }
        if val < 0.0 {
            return Err(L2sError::contract(format!("negative loss {val}")));
        }
        if !self.collapsed {
            self.loss_acc += val;
        }
        Ok(())
    }
}
