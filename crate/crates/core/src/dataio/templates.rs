//! Feature templates in the style of `--search_neighbor_features -1:w,1:w`
//! and `--affix -2w,+2w`.

use super::conll::Sentence;
use super::hashing::{FeatureVector, Namespace};
use crate::error::{L2sError, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const BIAS_NAMESPACE: &str = "const";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborSpec {
    pub offset: i32,
    pub namespace: Namespace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AffixSide {
    Prefix,
    Suffix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffixSpec {
    pub length: usize,
    pub side: AffixSide,
    pub namespace: Namespace,
}

impl AffixSpec {
    /// Namespace the affix features are emitted into, e.g. `-2w`.
    pub fn feature_namespace(&self) -> String {
        let sign = match self.side {
            AffixSide::Prefix => '+',
            AffixSide::Suffix => '-',
        };
        format!("{sign}{}{}", self.length, self.namespace)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateSpec {
    pub neighbor_features: Vec<NeighborSpec>,
    pub affix_specs: Vec<AffixSpec>,
    /// Column read for each namespace: `w` is column 0, `p` column 1 unless
    /// overridden.
    pub columns: Vec<(Namespace, usize)>,
}

impl Default for TemplateSpec {
    /// Current word plus both neighbours, with two-character prefix and suffix.
    fn default() -> Self {
        TemplateSpec::parse("0:w,-1:w,1:w", "-2w,+2w").expect("default templates parse")
    }
}

fn default_columns() -> Vec<(Namespace, usize)> {
    vec![
        (Namespace::new("w").unwrap(), 0),
        (Namespace::new("p").unwrap(), 1),
    ]
}

impl TemplateSpec {
    pub fn empty() -> Self {
        TemplateSpec {
            neighbor_features: Vec::new(),
            affix_specs: Vec::new(),
            columns: default_columns(),
        }
    }

    /// Parses comma-separated `offset:ns` neighbour items and `[+-]len ns`
    /// affix items. Either string may be empty.
    pub fn parse(neighbors: &str, affixes: &str) -> Result<Self> {
        let mut spec = TemplateSpec::empty();
        for item in neighbors.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (off, ns) = item
                .split_once(':')
                .ok_or_else(|| L2sError::config(format!("bad neighbor template {item:?}")))?;
            let offset: i32 = off
                .parse()
                .map_err(|_| L2sError::config(format!("bad neighbor offset {off:?}")))?;
            let namespace = Namespace::new(ns)?;
            if spec
                .neighbor_features
                .iter()
                .any(|n| n.offset == offset && n.namespace == namespace)
            {
                return Err(L2sError::config(format!("duplicate neighbor template {item:?}")));
            }
            spec.neighbor_features.push(NeighborSpec { offset, namespace });
        }
        for item in affixes.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let side = match item.as_bytes()[0] {
                b'+' => AffixSide::Prefix,
                b'-' => AffixSide::Suffix,
                _ => return Err(L2sError::config(format!("affix {item:?} needs a +/- sign"))),
            };
            let rest = &item[1..];
            let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
            let length: usize = rest[..digits]
                .parse()
                .map_err(|_| L2sError::config(format!("bad affix length in {item:?}")))?;
            if !(1..=7).contains(&length) {
                return Err(L2sError::config(format!("affix length must be 1..7 in {item:?}")));
            }
            let namespace = Namespace::new(&rest[digits..])?;
            spec.affix_specs.push(AffixSpec {
                length,
                side,
                namespace,
            });
        }
        Ok(spec)
    }

    pub fn column_of(&self, ns: &Namespace) -> Option<usize> {
        self.columns
            .iter()
            .find(|(n, _)| n == ns)
            .map(|&(_, c)| c)
    }

    /// Checks every referenced namespace maps to one of the first `width`
    /// columns (the feature columns, label column excluded).
    pub fn validate(&self, width: usize) -> Result<()> {
        let namespaces = self
            .neighbor_features
            .iter()
            .map(|n| &n.namespace)
            .chain(self.affix_specs.iter().map(|a| &a.namespace));
        for ns in namespaces {
            match self.column_of(ns) {
                Some(c) if c < width => {}
                Some(c) => {
                    return Err(L2sError::config(format!(
                        "namespace {ns} reads column {c} but the corpus has {width} columns"
                    )))
                }
                None => return Err(L2sError::config(format!("no column mapped for namespace {ns}"))),
            }
        }
        Ok(())
    }
}

fn affix(word: &str, length: usize, side: AffixSide) -> &str {
    let n = word.chars().count();
    if n <= length {
        return word;
    }
    let cut = match side {
        AffixSide::Prefix => length,
        AffixSide::Suffix => n - length,
    };
    let byte = word.char_indices().nth(cut).map_or(word.len(), |(b, _)| b);
    match side {
        AffixSide::Prefix => &word[..byte],
        AffixSide::Suffix => &word[byte..],
    }
}

/// Expands `spec` at token `pos`. Never looks at predictions.
pub fn apply_templates(sent: &Sentence, pos: usize, spec: &TemplateSpec, bits: u8) -> FeatureVector {
    assert!(pos < sent.len(), "position {pos} outside sentence of length {}", sent.len());
    let mut fv = FeatureVector::new(bits);
    let len = sent.len() as i64;
    for n in &spec.neighbor_features {
        let col = spec.column_of(&n.namespace).unwrap_or(0);
        let p = pos as i64 + i64::from(n.offset);
        let value = if p < 0 {
            BOS
        } else if p >= len {
            EOS
        } else {
            sent.tokens[p as usize].column(col).unwrap_or("")
        };
        fv.add(n.namespace.as_str(), &format!("{}:{value}", n.offset));
    }
    for a in &spec.affix_specs {
        let col = spec.column_of(&a.namespace).unwrap_or(0);
        let word = sent.tokens[pos].column(col).unwrap_or("");
        fv.add(&a.feature_namespace(), affix(word, a.length, a.side));
    }
    fv.add(BIAS_NAMESPACE, "bias");
    fv
}
