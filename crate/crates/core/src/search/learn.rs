use super::config::{Algorithm, RollinSource, TrainerConfig};
use super::counters::Counters;
use super::policy::{choose_policy_tied, keep_position, ExampleContext, Phase, PolicyChoice};
use super::session::{ExampleState, RunPlan, Session, SessionMode};
use crate::cslearn::{ConstantPolicy, CostSensitiveExample, Learner};
use crate::error::{L2sError, Result};

/// A terminating program that makes predictions through a [`Session`] and
/// declares its loss there.
pub trait Task {
    type Input;
    type Output;

    /// Upper bound on action ids the task uses.
    fn num_actions(&self) -> usize;

    /// Whether loss is declared early under a decomposition
    /// `loss = A(prefix) + B(suffix)`. Path collapse requires it.
    fn history_independent(&self) -> bool {
        false
    }

    fn run(&self, session: &mut Session<'_>, input: &Self::Input) -> Result<Self::Output>;
}

/// Result of a test-time decode.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded<O> {
    pub output: O,
    pub loss: f64,
    pub counters: Counters,
}

/// Differential costs: each loss minus the smallest one.
pub fn make_cost_vector(losses: &[f64]) -> Result<Vec<f64>> {
    if losses.is_empty() {
        return Err(L2sError::contract("cost vector needs at least one action"));
    }
    if let Some(l) = losses.iter().find(|l| !l.is_finite()) {
        return Err(L2sError::Numeric(format!("non-finite rollout loss {l}")));
    }
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(losses.iter().map(|l| l - min).collect())
}

fn run_once<T: Task + ?Sized>(
    task: &T,
    input: &T::Input,
    learner: &dyn Learner,
    mode: SessionMode,
    state: &mut ExampleState,
    plan: Option<RunPlan<'_>>,
) -> Result<(T::Output, f64, usize)> {
    state.counters.run_executions += 1;
    let mut session = Session::new(mode, learner, state, plan);
    let output = task.run(&mut session, input)?;
    let steps = session.steps();
    let loss = session.finish();
    Ok((output, loss, steps))
}

fn check_actions<T: Task + ?Sized, L: Learner + ?Sized>(task: &T, learner: &L) -> Result<()> {
    if learner.num_actions() < task.num_actions() {
        return Err(L2sError::config(format!(
            "task uses {} actions but the model has {}",
            task.num_actions(),
            learner.num_actions()
        )));
    }
    Ok(())
}

/// Decodes `input` once with the learned policy.
pub fn test_decode<T, L>(task: &T, input: &T::Input, learner: &L) -> Result<Decoded<T::Output>>
where
    T: Task + ?Sized,
    L: Learner,
{
    check_actions(task, learner)?;
    let mut state = ExampleState::default();
    let (output, loss, _) = run_once(task, input, learner, SessionMode::TestDecode, &mut state, None)?;
    Ok(Decoded {
        output,
        loss,
        counters: state.counters,
    })
}

/// Decodes `input` following the reference decision at every step.
pub fn reference_decode<T>(task: &T, input: &T::Input) -> Result<Decoded<T::Output>>
where
    T: Task + ?Sized,
{
    let policy = ConstantPolicy::new(0, task.num_actions().max(1));
    let cfg = TrainerConfig {
        rollin: RollinSource::Mix,
        ..TrainerConfig::default()
    };
    let plan = RunPlan {
        cfg: &cfg,
        ctx: ExampleContext::default(),
        rollout_policy: PolicyChoice::Reference,
    };
    let mut state = ExampleState::default();
    let (output, loss, _) = run_once(task, input, &policy, SessionMode::Rollin, &mut state, Some(plan))?;
    Ok(Decoded {
        output,
        loss,
        counters: state.counters,
    })
}

/// Trains on one structured example: a rollin run, then one run per
/// one-step deviation at every kept position, each turned into a
/// cost-sensitive update. Returns the work done.
pub fn learn_example<T, L>(
    task: &T,
    input: &T::Input,
    learner: &mut L,
    cfg: &TrainerConfig,
    ctx: ExampleContext,
) -> Result<Counters>
where
    T: Task + ?Sized,
    L: Learner,
{
    cfg.validate()?;
    check_actions(task, learner)?;
    if cfg.collapse_h.is_some() && !task.history_independent() {
        return Err(L2sError::config(
            "path collapse needs a task with history-independent loss",
        ));
    }

    let mut state = ExampleState::default();
    let rollin_plan = RunPlan {
        cfg,
        ctx,
        rollout_policy: PolicyChoice::Learned,
    };
    run_once(task, input, &*learner, SessionMode::Rollin, &mut state, Some(rollin_plan))?;
    let horizon = state.steps.len();

    let mut pending = Vec::new();
    for t0 in 1..=horizon {
        if !keep_position(cfg, ctx, t0) {
            continue;
        }
        let step = &state.steps[t0 - 1];
        let allowed = step.allowed.clone();
        let costs = match cfg.algorithm {
            Algorithm::Dagger => {
                let reference = step.reference;
                allowed
                    .iter()
                    .map(|&a| if a == reference { 0.0 } else { 1.0 })
                    .collect()
            }
            Algorithm::Searn | Algorithm::Lols => {
                let plan = RunPlan {
                    cfg,
                    ctx,
                    rollout_policy: choose_policy_tied(
                        cfg,
                        Phase::Rollout,
                        t0,
                        ctx,
                        learner.update_count(),
                    ),
                };
                let mut losses = Vec::with_capacity(allowed.len());
                for &a0 in &allowed {
                    let mode = SessionMode::Deviation { t0, a0 };
                    let (_, loss, steps) =
                        run_once(task, input, &*learner, mode, &mut state, Some(plan))?;
                    if steps < t0 {
                        return Err(L2sError::contract(format!(
                            "deviation at step {t0} was never reached; the task made {steps} predictions"
                        )));
                    }
                    losses.push(loss);
                }
                make_cost_vector(&losses)?
            }
        };
        let features = state.steps[t0 - 1].features.clone();
        let example = CostSensitiveExample::new(features, allowed, costs)?;
        state.counters.cs_examples += 1;
        if cfg.update_per_example || cfg.algorithm == Algorithm::Dagger {
            pending.push(example);
        } else {
            learner.update(&example)?;
        }
    }
    for example in &pending {
        learner.update(example)?;
    }
    Ok(state.counters)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_vector_subtracts_min() {
        assert_eq!(make_cost_vector(&[2.0, 1.0, 3.0]).unwrap(), vec![1.0, 0.0, 2.0]);
        assert_eq!(make_cost_vector(&[0.5]).unwrap(), vec![0.0]);
        assert_eq!(make_cost_vector(&[4.0, 4.0, 4.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn cost_vector_errors() {
        assert!(matches!(make_cost_vector(&[]), Err(L2sError::Contract(_))));
        assert!(matches!(make_cost_vector(&[1.0, f64::NAN]), Err(L2sError::Numeric(_))));
    }
}
