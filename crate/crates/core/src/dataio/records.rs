//! Entity-relation corpus: one JSON object per line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{L2sError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    /// Inclusive token span `[start, end]`.
    pub span: [usize; 2],
    pub gold_type: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRecord {
    /// Zero-based entity indices.
    pub arg1: usize,
    pub arg2: usize,
    pub gold_type: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    #[serde(default)]
    pub tokens: Vec<String>,
    pub entities: Vec<EntityRecord>,
    #[serde(default)]
    pub relations: Vec<RelationRecord>,
}

impl SentenceRecord {
    /// Surface text of entity `n`, or an empty string without tokens.
    pub fn entity_text(&self, n: usize) -> String {
        let [start, end] = self.entities[n].span;
        if self.tokens.is_empty() {
            return String::new();
        }
        let end = end.min(self.tokens.len().saturating_sub(1));
        self.tokens[start.min(end)..=end].join("_")
    }

    /// Gold relation between entities `n < m`, `None` when unlisted.
    pub fn gold_relation(&self, n: usize, m: usize) -> Option<&str> {
        self.relations
            .iter()
            .find(|r| (r.arg1 == n && r.arg2 == m) || (r.arg1 == m && r.arg2 == n))
            .map(|r| r.gold_type.as_str())
    }

    fn check(&self, line: usize) -> Result<()> {
        for e in &self.entities {
            if e.span[0] > e.span[1] {
                return Err(L2sError::Parse {
                    line,
                    msg: format!("span {:?} has start after end", e.span),
                });
            }
        }
        let k = self.entities.len();
        for r in &self.relations {
            if r.arg1 >= k || r.arg2 >= k || r.arg1 == r.arg2 {
                return Err(L2sError::Parse {
                    line,
                    msg: format!("relation ({}, {}) does not name two entities", r.arg1, r.arg2),
                });
            }
        }
        Ok(())
    }
}

pub fn read_entrel(path: impl AsRef<Path>) -> Result<Vec<SentenceRecord>> {
    read_entrel_str(&fs::read_to_string(path)?)
}

pub fn read_entrel_str(text: &str) -> Result<Vec<SentenceRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SentenceRecord = serde_json::from_str(line).map_err(|e| L2sError::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        rec.check(i + 1)?;
        out.push(rec);
    }
    Ok(out)
}
