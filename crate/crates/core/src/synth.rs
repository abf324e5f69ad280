//! Synthetic corpora: Markov label chains with noisy emissions, and random
//! explicit search spaces.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataio::{LabelDict, Sentence, Token};
use crate::error::{L2sError, Result};
use crate::search::{ExplicitSearchSpace, StateId};

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovConfig {
    pub num_labels: usize,
    pub length: usize,
    pub num_sentences: usize,
    /// Probability a word is replaced by an uninformative distractor.
    pub noise: f64,
    /// Probability label `y` is followed by `y + 1 mod k`; otherwise the next
    /// label is uniform.
    pub stickiness: f64,
    pub seed: u64,
}

impl Default for MarkovConfig {
    fn default() -> Self {
        MarkovConfig {
            num_labels: 5,
            length: 20,
            num_sentences: 2000,
            noise: 0.3,
            stickiness: 0.8,
            seed: 0,
        }
    }
}

pub fn markov_labels(k: usize) -> LabelDict {
    LabelDict::from_labels((0..k).map(|y| format!("L{y}")))
}

/// An order-1 Markov label chain where each label emits the word `w{y}`,
/// replaced with probability `noise` by one of `k` distractor words `u{i}`
/// drawn independently of the label. Tokens have columns `word label`.
pub fn markov_corpus(cfg: &MarkovConfig) -> Result<(Vec<Sentence>, LabelDict)> {
    let k = cfg.num_labels;
    if k == 0 || cfg.length == 0 {
        return Err(L2sError::config("markov corpus needs labels and a positive length"));
    }
    for (name, p) in [("noise", cfg.noise), ("stickiness", cfg.stickiness)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(L2sError::config(format!("{name} {p} outside [0, 1]")));
        }
    }
    let labels = markov_labels(k);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sentences = Vec::with_capacity(cfg.num_sentences);
    for _ in 0..cfg.num_sentences {
        let mut tokens = Vec::with_capacity(cfg.length);
        let mut gold = Vec::with_capacity(cfg.length);
        let mut y = rng.random_range(0..k);
        for t in 0..cfg.length {
            if t > 0 {
                y = if rng.random::<f64>() < cfg.stickiness {
                    (y + 1) % k
                } else {
                    rng.random_range(0..k)
                };
            }
            let word = if rng.random::<f64>() < cfg.noise {
                format!("u{}", rng.random_range(0..k))
            } else {
                format!("w{y}")
            };
            tokens.push(Token {
                columns: vec![word, format!("L{y}")],
            });
            gold.push(y);
        }
        sentences.push(Sentence {
            tokens,
            gold_labels: gold,
        });
    }
    Ok((sentences, labels))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceConfig {
    pub max_states: usize,
    pub max_branching: usize,
    pub max_depth: usize,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            max_states: 50,
            max_branching: 3,
            max_depth: 5,
        }
    }
}

/// A random layered DAG: states at `max_depth` are ends, shallower states
/// stop early with probability 1/4 and otherwise link to one to
/// `max_branching` states of the next layer, sometimes shared.
pub fn random_search_space<R: Rng>(rng: &mut R, cfg: SpaceConfig) -> ExplicitSearchSpace {
    let mut next: Vec<Vec<StateId>> = vec![Vec::new()];
    let mut layer = vec![0];
    for depth in 0..cfg.max_depth {
        let mut new_layer: Vec<StateId> = Vec::new();
        for &s in &layer {
            if depth > 0 && rng.random_range(0..4) == 0 {
                continue;
            }
            let width = rng.random_range(1..=cfg.max_branching);
            for _ in 0..width {
                let reuse = !new_layer.is_empty() && rng.random_range(0..3) == 0;
                let child = if reuse || next.len() >= cfg.max_states {
                    match new_layer.get(rng.random_range(0..new_layer.len().max(1))) {
                        Some(&c) => c,
                        None => break,
                    }
                } else {
                    next.push(Vec::new());
                    new_layer.push(next.len() - 1);
                    next.len() - 1
                };
                next[s].push(child);
            }
        }
        if new_layer.is_empty() {
            break;
        }
        layer = new_layer;
    }
    let losses = next
        .iter()
        .map(|succ| succ.is_empty().then(|| rng.random_range(0..100) as f64 / 10.0))
        .collect();
    ExplicitSearchSpace {
        next,
        start: 0,
        losses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markov_corpus_shape() {
        let cfg = MarkovConfig {
            num_sentences: 10,
            ..MarkovConfig::default()
        };
        let (corpus, labels) = markov_corpus(&cfg).unwrap();
        assert_eq!(corpus.len(), 10);
        assert_eq!(labels.len(), 5);
        assert!(corpus.iter().all(|s| s.len() == 20 && s.gold_labels.len() == 20));
        assert_eq!(markov_corpus(&cfg).unwrap().0, corpus);
    }

    #[test]
    fn noiseless_words_match_labels() {
        let cfg = MarkovConfig {
            num_sentences: 3,
            noise: 0.0,
            ..MarkovConfig::default()
        };
        let (corpus, _) = markov_corpus(&cfg).unwrap();
        for s in &corpus {
            for (tok, y) in s.tokens.iter().zip(&s.gold_labels) {
                assert_eq!(tok.columns[0], format!("w{y}"));
            }
        }
    }

    #[test]
    fn spaces_are_valid_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let space = random_search_space(&mut rng, SpaceConfig::default());
            space.validate().unwrap();
            assert!(space.num_states() <= 50);
            assert!(space.next.iter().all(|s| s.len() <= 3));
        }
    }
}
