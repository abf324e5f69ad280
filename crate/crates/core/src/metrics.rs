//! Hamming accuracy, BIO span F1, relation/entity micro F1 and attachment
//! score.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{L2sError, Result};
use crate::tasks::BioTag;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub kind: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Prf {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }
}

impl fmt::Display for Prf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "precision={:.6} recall={:.6} f1={:.6} tp={} fp={} fn={}",
            self.precision, self.recall, self.f1, self.tp, self.fp, self.fn_
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Averaging {
    Macro,
    Micro,
}

impl std::str::FromStr for Averaging {
    type Err = L2sError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro" => Ok(Averaging::Macro),
            "micro" => Ok(Averaging::Micro),
            other => Err(L2sError::config(format!("unknown averaging {other:?}"))),
        }
    }
}

pub fn hamming_accuracy<T: PartialEq>(pred: &[T], gold: &[T]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(L2sError::contract(format!(
            "prediction length {} differs from gold length {}",
            pred.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Ok(1.0);
    }
    let hits = pred.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Replaces every `I-x` not preceded by `B-x`/`I-x` with `B-x`.
pub fn fix_malpositioned<S: AsRef<str>>(labels: &[S]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(labels.len());
    let mut open: Option<String> = None;
    for l in labels {
        let l = l.as_ref();
        let fixed = match BioTag::parse(l) {
            Some(BioTag::Inside(t)) if open.as_deref() != Some(t.as_str()) => format!("B-{t}"),
            _ => l.to_string(),
        };
        open = BioTag::parse(&fixed).and_then(|t| t.entity_type().map(str::to_string));
        out.push(fixed);
    }
    out
}

/// Spans of maximal `B-x (I-x)*` runs after fixing malpositioned tags.
pub fn extract_spans_bio<S: AsRef<str>>(labels: &[S]) -> Vec<Span> {
    let fixed = fix_malpositioned(labels);
    let mut spans = Vec::new();
    let mut current: Option<Span> = None;
    for (i, l) in fixed.iter().enumerate() {
        match BioTag::parse(l) {
            Some(BioTag::Begin(t)) => {
                spans.extend(current.take());
                current = Some(Span {
                    start: i,
                    end: i,
                    kind: t,
                });
            }
            Some(BioTag::Inside(_)) => {
                if let Some(span) = current.as_mut() {
                    span.end = i;
                }
            }
            _ => spans.extend(current.take()),
        }
    }
    spans.extend(current);
    spans
}

/// Span precision/recall/F1 over parallel corpora of BIO label sequences.
///
/// Macro averaging means per-type F1 over the types present in either side;
/// its precision and recall are the per-type means as well.
pub fn span_f1<S: AsRef<str>>(pred: &[Vec<S>], gold: &[Vec<S>], averaging: Averaging) -> Result<Prf> {
    if pred.len() != gold.len() {
        return Err(L2sError::contract("prediction and gold corpora differ in size"));
    }
    let mut pred_spans = BTreeSet::new();
    let mut gold_spans = BTreeSet::new();
    for (i, (p, g)) in pred.iter().zip(gold).enumerate() {
        pred_spans.extend(extract_spans_bio(p).into_iter().map(|s| (i, s)));
        gold_spans.extend(extract_spans_bio(g).into_iter().map(|s| (i, s)));
    }
    let counts = |kind: Option<&str>| {
        let keep = |s: &&(usize, Span)| kind.is_none_or(|k| s.1.kind == k);
        let tp = pred_spans.iter().filter(keep).filter(|s| gold_spans.contains(s)).count();
        let np = pred_spans.iter().filter(keep).count();
        let ng = gold_spans.iter().filter(keep).count();
        (tp, np - tp, ng - tp)
    };
    match averaging {
        Averaging::Micro => {
            let (tp, fp, fn_) = counts(None);
            Ok(Prf::from_counts(tp, fp, fn_))
        }
        Averaging::Macro => {
            let kinds: BTreeSet<&str> = pred_spans
                .iter()
                .chain(&gold_spans)
                .map(|(_, s)| s.kind.as_str())
                .collect();
            let (tp, fp, fn_) = counts(None);
            if kinds.is_empty() {
                return Ok(Prf::from_counts(tp, fp, fn_));
            }
            let per_type: Vec<Prf> = kinds
                .iter()
                .map(|k| {
                    let (tp, fp, fn_) = counts(Some(k));
                    Prf::from_counts(tp, fp, fn_)
                })
                .collect();
            let mean = |f: fn(&Prf) -> f64| per_type.iter().map(f).sum::<f64>() / per_type.len() as f64;
            Ok(Prf {
                precision: mean(|p| p.precision),
                recall: mean(|p| p.recall),
                f1: mean(|p| p.f1),
                tp,
                fp,
                fn_,
            })
        }
    }
}

/// A typed relation between two entity indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationTriple {
    pub arg1: usize,
    pub arg2: usize,
    pub kind: String,
}

/// Micro F1 over relations, ignoring `none`.
pub fn micro_f1_relations(pred: &[Vec<RelationTriple>], gold: &[Vec<RelationTriple>]) -> Result<Prf> {
    if pred.len() != gold.len() {
        return Err(L2sError::contract("prediction and gold corpora differ in size"));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        let p: BTreeSet<&RelationTriple> = p.iter().filter(|r| r.kind != "none").collect();
        let g: BTreeSet<&RelationTriple> = g.iter().filter(|r| r.kind != "none").collect();
        let hit = p.intersection(&g).count();
        tp += hit;
        fp += p.len() - hit;
        fn_ += g.len() - hit;
    }
    Ok(Prf::from_counts(tp, fp, fn_))
}

/// Micro F1 over entity typings; every entity is counted once per side.
pub fn micro_f1_entities<S: AsRef<str> + PartialEq>(pred: &[Vec<S>], gold: &[Vec<S>]) -> Result<Prf> {
    if pred.len() != gold.len() {
        return Err(L2sError::contract("prediction and gold corpora differ in size"));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (p, g) in pred.iter().zip(gold) {
        if p.len() != g.len() {
            return Err(L2sError::contract("entity counts differ"));
        }
        let hit = p.iter().zip(g).filter(|(a, b)| a == b).count();
        tp += hit;
        fp += p.len() - hit;
        fn_ += g.len() - hit;
    }
    Ok(Prf::from_counts(tp, fp, fn_))
}

/// Fraction of words whose predicted head is the gold head.
pub fn uas(pred: &[usize], gold: &[usize]) -> Result<f64> {
    hamming_accuracy(pred, gold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn span(start: usize, end: usize, kind: &str) -> Span {
        Span {
            start,
            end,
            kind: kind.to_string(),
        }
    }

    #[test]
    fn hamming() {
        assert_eq!(hamming_accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(hamming_accuracy(&[1, 2, 3], &[4, 5, 6]).unwrap(), 0.0);
        assert!((hamming_accuracy(&[1, 2, 3], &[1, 2, 0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(hamming_accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn malpositioned_inside_becomes_begin() {
        assert_eq!(fix_malpositioned(&labels("O I-LOC")), labels("O B-LOC"));
        assert_eq!(extract_spans_bio(&labels("O I-LOC")), vec![span(1, 1, "LOC")]);
    }

    #[test]
    fn plain_span() {
        assert_eq!(extract_spans_bio(&labels("B-ORG I-ORG O")), vec![span(0, 1, "ORG")]);
    }

    #[test]
    fn type_switch_inside() {
        assert_eq!(fix_malpositioned(&labels("B-PER I-ORG")), labels("B-PER B-ORG"));
        assert_eq!(
            extract_spans_bio(&labels("B-PER I-ORG")),
            vec![span(0, 0, "PER"), span(1, 1, "ORG")]
        );
    }

    #[test]
    fn span_f1_edges() {
        let gold = vec![labels("B-PER I-PER O B-LOC")];
        let p = span_f1(&gold, &gold, Averaging::Macro).unwrap();
        assert_eq!(p.f1, 1.0);
        let none = vec![labels("O O O O")];
        let p = span_f1(&none, &gold, Averaging::Micro).unwrap();
        assert_eq!((p.recall, p.f1), (0.0, 0.0));
    }

    #[test]
    fn macro_one_perfect_one_empty() {
        let gold = vec![labels("B-PER O B-LOC")];
        let pred = vec![labels("B-PER O O")];
        let p = span_f1(&pred, &gold, Averaging::Macro).unwrap();
        assert_eq!(p.f1, 0.5);
        let p = span_f1(&pred, &gold, Averaging::Micro).unwrap();
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn relation_micro() {
        let r = |a, b, k: &str| RelationTriple {
            arg1: a,
            arg2: b,
            kind: k.to_string(),
        };
        let gold = vec![vec![r(0, 1, "work_for"), r(1, 2, "located_in")]];
        let all_none = vec![vec![r(0, 1, "none"), r(1, 2, "none")]];
        assert_eq!(micro_f1_relations(&all_none, &gold).unwrap().recall, 0.0);
        assert_eq!(micro_f1_relations(&gold, &gold).unwrap().f1, 1.0);
        let half = vec![vec![r(0, 1, "work_for"), r(0, 2, "kill")]];
        let p = micro_f1_relations(&half, &gold).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn attachment() {
        assert_eq!(uas(&[2, 0, 2], &[2, 0, 2]).unwrap(), 1.0);
        assert_eq!(uas(&[1, 1], &[2, 0]).unwrap(), 0.0);
        assert!((uas(&[2, 0, 2, 2, 9], &[2, 0, 2, 2, 4]).unwrap() - 0.8).abs() < 1e-15);
    }
}
