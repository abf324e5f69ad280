use crate::cslearn::Action;
use crate::dataio::LabelDict;
use crate::error::{L2sError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BioTag {
    Outside,
    Begin(String),
    Inside(String),
}

impl BioTag {
    pub fn parse(label: &str) -> Option<BioTag> {
        if label == "O" {
            return Some(BioTag::Outside);
        }
        let (prefix, kind) = label.split_once('-')?;
        if kind.is_empty() {
            return None;
        }
        match prefix {
            "B" => Some(BioTag::Begin(kind.to_string())),
            "I" => Some(BioTag::Inside(kind.to_string())),
            _ => None,
        }
    }

    pub fn entity_type(&self) -> Option<&str> {
        match self {
            BioTag::Outside => None,
            BioTag::Begin(t) | BioTag::Inside(t) => Some(t),
        }
    }
}

/// BIO view of a label inventory: `I-x` may only follow `B-x` or `I-x`.
#[derive(Clone, Debug)]
pub struct BioScheme {
    tags: Vec<BioTag>,
}

impl BioScheme {
    pub fn new(labels: &LabelDict) -> Result<Self> {
        let tags = labels
            .labels()
            .iter()
            .map(|l| {
                BioTag::parse(l).ok_or_else(|| L2sError::config(format!("label {l:?} is not a BIO label")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BioScheme { tags })
    }

    pub fn tag(&self, id: Action) -> &BioTag {
        &self.tags[id]
    }

    pub fn num_labels(&self) -> usize {
        self.tags.len()
    }

    /// Labels allowed after `prev` (`None` at sentence start).
    pub fn valid_after(&self, prev: Option<Action>) -> Vec<Action> {
        let open = prev.and_then(|p| self.tags[p].entity_type());
        (0..self.tags.len())
            .filter(|&id| match &self.tags[id] {
                BioTag::Inside(t) => open == Some(t.as_str()),
                _ => true,
            })
            .collect()
    }

    /// The `B-x` label matching an `I-x` label, if present in the inventory.
    pub fn begin_for(&self, id: Action) -> Option<Action> {
        match &self.tags[id] {
            BioTag::Inside(t) => self
                .tags
                .iter()
                .position(|tag| matches!(tag, BioTag::Begin(b) if b == t)),
            _ => None,
        }
    }
}

/// Labels allowed after `prev` under the BIO constraint.
pub fn bio_valid_labels(scheme: &BioScheme, prev: Option<Action>) -> Vec<Action> {
    scheme.valid_after(prev)
}
