use std::fmt;
use std::ops::AddAssign;

/// Instrumented work counters; `Display` renders a flat `key=value` block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub run_executions: u64,
    pub policy_calls: u64,
    pub memo_hits: u64,
    pub memo_stores: u64,
    pub rollout_steps: u64,
    pub cs_examples: u64,
}

impl AddAssign for Counters {
    fn add_assign(&mut self, o: Counters) {
        self.run_executions += o.run_executions;
        self.policy_calls += o.policy_calls;
        self.memo_hits += o.memo_hits;
        self.memo_stores += o.memo_stores;
        self.rollout_steps += o.rollout_steps;
        self.cs_examples += o.cs_examples;
    }
}

impl fmt::Display for Counters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "run_executions={}", self.run_executions)?;
        writeln!(f, "policy_calls={}", self.policy_calls)?;
        writeln!(f, "memo_hits={}", self.memo_hits)?;
        writeln!(f, "memo_stores={}", self.memo_stores)?;
        writeln!(f, "rollout_steps={}", self.rollout_steps)?;
        writeln!(f, "cs_examples={}", self.cs_examples)
    }
}
