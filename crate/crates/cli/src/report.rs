use std::fmt;
use std::fs;
use std::path::Path;

use l2s::search::Counters;

/// Ordered `key=value` lines.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct RunReport {
    lines: Vec<(String, String)>,
}

impl RunReport {
    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.push(key, format!("{value:.6}"));
    }

    pub fn counters(&mut self, c: &Counters) {
        self.push("run_executions", c.run_executions);
        self.push("policy_calls", c.policy_calls);
        self.push("memo_hits", c.memo_hits);
        self.push("memo_stores", c.memo_stores);
        self.push("rollout_steps", c.rollout_steps);
        self.push("cs_examples", c.cs_examples);
    }

    pub fn extend(&mut self, other: RunReport) {
        self.lines.extend(other.lines);
    }

    pub fn emit(&self, path: Option<&Path>) -> std::io::Result<()> {
        print!("{self}");
        if let Some(p) = path {
            fs::write(p, self.to_string())?;
        }
        Ok(())
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.lines {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
