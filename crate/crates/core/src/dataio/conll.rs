use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{L2sError, Result};

/// Label strings mapped to contiguous ids in first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelDict {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelDict {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut dict = Self::new();
        for l in labels {
            dict.get_or_insert(&l.into());
        }
        dict
    }

    pub fn get_or_insert(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub columns: Vec<String>,
}

impl Token {
    pub fn column(&self, i: usize) -> Option<&str> {
        self.columns.get(i).map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub gold_labels: Vec<usize>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Reads a whitespace-separated column corpus; blank lines separate sentences.
///
/// `label_column` selects the gold label column (`None` means the last one).
/// Labels are added to `dict` in first-appearance order.
pub fn read_conll(
    path: impl AsRef<Path>,
    label_column: Option<usize>,
    dict: &mut LabelDict,
) -> Result<Vec<Sentence>> {
    let text = fs::read_to_string(path)?;
    read_conll_str(&text, label_column, dict)
}

pub fn read_conll_str(
    text: &str,
    label_column: Option<usize>,
    dict: &mut LabelDict,
) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut current = Sentence {
        tokens: Vec::new(),
        gold_labels: Vec::new(),
    };
    let mut width: Option<usize> = None;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::replace(
                    &mut current,
                    Sentence {
                        tokens: Vec::new(),
                        gold_labels: Vec::new(),
                    },
                ));
            }
            continue;
        }
        let columns: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        match width {
            None => width = Some(columns.len()),
            Some(w) if w != columns.len() => {
                return Err(L2sError::Parse {
                    line: lineno + 1,
                    msg: format!("expected {w} columns, found {}", columns.len()),
                })
            }
            _ => {}
        }
        let col = label_column.unwrap_or(columns.len() - 1);
        let label = columns.get(col).ok_or_else(|| L2sError::Parse {
            line: lineno + 1,
            msg: format!("label column {col} out of range"),
        })?;
        current.gold_labels.push(dict.get_or_insert(label));
        current.tokens.push(Token { columns });
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

/// Writes sentences back in the column format `read_conll` accepts.
pub fn write_conll<W: Write>(mut out: W, sentences: &[Sentence]) -> Result<()> {
    for (i, sent) in sentences.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        for tok in &sent.tokens {
            writeln!(out, "{}", tok.columns.join(" "))?;
        }
    }
    Ok(())
}
