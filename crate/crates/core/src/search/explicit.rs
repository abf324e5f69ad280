//! Explicit search spaces `(A, E, S, loss)` driven through the same
//! predict/loss interface as any task program.

use super::learn::{test_decode, Task};
use super::session::{PredictRequest, Session};
use crate::cslearn::{Action, CostSensitiveExample, Learner};
use crate::dataio::FeatureVector;
use crate::error::{L2sError, Result};

pub type StateId = usize;

const STATE_NAMESPACE: &str = "s";

#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitSearchSpace {
    /// Ordered successors of each state; empty exactly for end states.
    pub next: Vec<Vec<StateId>>,
    pub start: StateId,
    /// Loss of each end state (`None` elsewhere).
    pub losses: Vec<Option<f64>>,
}

impl ExplicitSearchSpace {
    pub fn num_states(&self) -> usize {
        self.next.len()
    }

    pub fn is_end(&self, s: StateId) -> bool {
        self.next[s].is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_states();
        if self.start >= n || self.losses.len() != n {
            return Err(L2sError::config("search space start or loss table out of range"));
        }
        for (s, succ) in self.next.iter().enumerate() {
            if let Some(&bad) = succ.iter().find(|&&c| c >= n) {
                return Err(L2sError::config(format!("state {s} links to missing state {bad}")));
            }
            match (succ.is_empty(), self.losses[s]) {
                (true, Some(l)) if l.is_finite() && l >= 0.0 => {}
                (true, _) => {
                    return Err(L2sError::config(format!("end state {s} needs a finite nonnegative loss")))
                }
                (false, Some(_)) => {
                    return Err(L2sError::config(format!("state {s} has successors and a loss")))
                }
                (false, None) => {}
            }
        }
        Ok(())
    }

    fn bits(&self) -> u8 {
        let need = usize::BITS - self.num_states().saturating_sub(1).leading_zeros();
        (need as u8).max(8)
    }

    /// One-hot feature vector naming state `s`.
    pub fn state_features(&self, s: StateId) -> FeatureVector {
        let mut fv = FeatureVector::new(self.bits());
        fv.add_indexed(STATE_NAMESPACE, s as u32, 1.0);
        fv
    }

    /// Lowest end-state loss reachable from each state.
    fn best_reachable(&self) -> Vec<f64> {
        let n = self.num_states();
        let mut best: Vec<f64> = self.losses.iter().map(|l| l.unwrap_or(f64::INFINITY)).collect();
        for _ in 0..n {
            let mut changed = false;
            for s in 0..n {
                if let Some(b) = self.next[s].iter().map(|&c| best[c]).reduce(f64::min) {
                    if b < best[s] {
                        best[s] = b;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        best
    }
}

impl Task for ExplicitSearchSpace {
    type Input = ();
    type Output = StateId;

    fn num_actions(&self) -> usize {
        self.next.iter().map(Vec::len).max().unwrap_or(0).max(1)
    }

    fn run(&self, session: &mut Session<'_>, _: &()) -> Result<StateId> {
        let best = if session.wants_reference() {
            self.best_reachable()
        } else {
            Vec::new()
        };
        let mut s = self.start;
        let mut steps = 0usize;
        while !self.is_end(s) {
            if steps >= self.num_states() {
                return Err(L2sError::contract(format!(
                    "search space did not terminate within {} steps",
                    self.num_states()
                )));
            }
            let succ = &self.next[s];
            let reference = if best.is_empty() {
                0
            } else {
                (0..succ.len())
                    .min_by(|&a, &b| best[succ[a]].total_cmp(&best[succ[b]]))
                    .unwrap_or(0)
            };
            steps += 1;
            let req = PredictRequest::new(self.state_features(s), reference, steps as u32)
                .allowed((0..succ.len()).collect());
            s = succ[session.predict(req)?];
        }
        session.declare_loss(self.losses[s].expect("end states carry a loss"))?;
        Ok(s)
    }
}

/// Walks `space` from its start, letting `policy` pick an index into the
/// successor list of each state, and returns the end state and its loss.
pub fn run_explicit_space<L: Learner>(space: &ExplicitSearchSpace, policy: &L) -> Result<(StateId, f64)> {
    space.validate()?;
    let decoded = test_decode(space, &(), policy)?;
    Ok((decoded.output, decoded.loss))
}

/// A fixed state → successor-index table, usable as a policy over the
/// one-hot state features of an explicit space.
#[derive(Clone, Debug)]
pub struct TablePolicy {
    pub choices: Vec<Action>,
    pub num_actions: usize,
}

impl Learner for TablePolicy {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn predict(&self, features: &FeatureVector, allowed: &[Action]) -> Result<Action> {
        let (state, _) = features
            .iter()
            .next()
            .ok_or_else(|| L2sError::contract("table policy needs a state feature"))?;
        let a = self.choices.get(state as usize).copied().unwrap_or(0);
        if allowed.contains(&a) {
            Ok(a)
        } else {
            Err(L2sError::contract(format!("table choice {a} not allowed in state {state}")))
        }
    }

    fn update(&mut self, _: &CostSensitiveExample) -> Result<()> {
        Ok(())
    }

    fn update_count(&self) -> u64 {
        0
    }
}
