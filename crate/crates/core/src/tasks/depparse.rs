//! Unlabeled arc-hybrid dependency parsing.
//!
//! Tokens are numbered from 1; index 0 is the synthetic root. Shift moves
//! the buffer front onto the stack, LeftArc attaches the stack top to the
//! buffer front and pops it, RightArc attaches the stack top to the item
//! below it and pops it.

use std::collections::HashMap;

use crate::cslearn::Action;
use crate::dataio::{FeatureVector, Sentence};
use crate::error::{L2sError, Result};
use crate::search::{PredictRequest, Session, Task};

pub const ROOT: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transition {
    Shift = 0,
    RightArc = 1,
    LeftArc = 2,
}

impl Transition {
    /// Tie-break order for the oracle.
    pub const ALL: [Transition; 3] = [Transition::Shift, Transition::RightArc, Transition::LeftArc];

    pub fn id(self) -> Action {
        self as Action
    }

    pub fn from_id(id: Action) -> Option<Transition> {
        Transition::ALL.get(id).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParserState {
    pub stack: Vec<usize>,
    /// Next buffer token; the buffer is `front..=n`.
    pub front: usize,
    pub n: usize,
    /// Assigned head per token, `heads[0]` unused.
    pub heads: Vec<Option<usize>>,
}

impl ParserState {
    pub fn initial(n: usize) -> Self {
        ParserState {
            stack: vec![ROOT],
            front: 1,
            n,
            heads: vec![None; n + 1],
        }
    }

    pub fn buffer_empty(&self) -> bool {
        self.front > self.n
    }

    pub fn is_terminal(&self) -> bool {
        self.buffer_empty() && self.stack.len() == 1
    }

    fn top(&self) -> usize {
        *self.stack.last().expect("stack holds the root")
    }

    fn second(&self) -> Option<usize> {
        self.stack.len().checked_sub(2).map(|i| self.stack[i])
    }

    /// Words whose assigned head differs from `gold` (unassigned words excluded).
    pub fn wrong_so_far(&self, gold: &[usize]) -> usize {
        (1..=self.n)
            .filter(|&w| self.heads[w].is_some_and(|h| h != gold[w - 1]))
            .count()
    }
}

pub fn dep_valid_actions(state: &ParserState) -> Vec<Transition> {
    let mut out = Vec::with_capacity(3);
    if !state.buffer_empty() {
        out.push(Transition::Shift);
    }
    if state.stack.len() >= 2 {
        out.push(Transition::RightArc);
    }
    if !state.buffer_empty() && state.top() != ROOT {
        out.push(Transition::LeftArc);
    }
    out
}

pub fn dep_trans(state: &ParserState, action: Transition) -> Result<ParserState> {
    if !dep_valid_actions(state).contains(&action) {
        return Err(L2sError::contract(format!("{action:?} is not valid in {state:?}")));
    }
    let mut next = state.clone();
    match action {
        Transition::Shift => {
            next.stack.push(next.front);
            next.front += 1;
        }
        Transition::LeftArc => {
            let s0 = next.stack.pop().expect("checked");
            next.heads[s0] = Some(state.front);
        }
        Transition::RightArc => {
            let s0 = next.stack.pop().expect("checked");
            next.heads[s0] = Some(next.top());
        }
    }
    Ok(next)
}

/// Arc cost of applying `action`: 1 if it attaches a word to a wrong head.
fn arc_loss(state: &ParserState, action: Transition, gold: &[usize]) -> usize {
    match action {
        Transition::Shift => 0,
        Transition::LeftArc => usize::from(gold[state.top() - 1] != state.front),
        Transition::RightArc => {
            usize::from(Some(gold[state.top() - 1]) != state.second())
        }
    }
}

/// Minimal completion loss by exhaustive search, memoized on
/// `(stack, buffer front)` for one gold tree.
#[derive(Debug)]
pub struct ExhaustiveOracle<'g> {
    gold: &'g [usize],
    memo: HashMap<(Vec<usize>, usize), usize>,
}

impl<'g> ExhaustiveOracle<'g> {
    pub fn new(gold: &'g [usize]) -> Self {
        ExhaustiveOracle {
            gold,
            memo: HashMap::new(),
        }
    }

    /// Fewest further wrong attachments over all completions of `state`.
    pub fn future_loss(&mut self, state: &ParserState) -> usize {
        if state.is_terminal() {
            return 0;
        }
        let key = (state.stack.clone(), state.front);
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let best = dep_valid_actions(state)
            .into_iter()
            .map(|a| {
                let next = dep_trans(state, a).expect("valid action");
                arc_loss(state, a, self.gold) + self.future_loss(&next)
            })
            .min()
            .expect("non-terminal states have a valid action");
        self.memo.insert(key, best);
        best
    }

    /// Minimal total loss reachable after taking `action`.
    pub fn action_loss(&mut self, state: &ParserState, action: Transition) -> usize {
        let next = dep_trans(state, action).expect("valid action");
        state.wrong_so_far(self.gold) + arc_loss(state, action, self.gold) + self.future_loss(&next)
    }

    pub fn min_loss(&mut self, state: &ParserState) -> usize {
        state.wrong_so_far(self.gold) + self.future_loss(state)
    }
}

fn argmin_action(valid: &[Transition], mut cost: impl FnMut(Transition) -> usize) -> Transition {
    let mut best: Option<(Transition, usize)> = None;
    for &a in Transition::ALL.iter().filter(|a| valid.contains(a)) {
        let c = cost(a);
        if best.is_none_or(|(_, bc)| c < bc) {
            best = Some((a, c));
        }
    }
    best.expect("non-terminal state").0
}

/// The action whose best completion has the lowest loss, found by
/// exhaustive search; ties go Shift, then RightArc, then LeftArc.
pub fn dep_gold_action(state: &ParserState, gold: &[usize]) -> Transition {
    let mut oracle = ExhaustiveOracle::new(gold);
    let valid = dep_valid_actions(state);
    argmin_action(&valid, |a| oracle.action_loss(state, a))
}

/// Closed-form arc-hybrid costs: the number of gold arcs that become
/// unreachable by taking each action. `None` for invalid actions.
pub fn dynamic_oracle_costs(state: &ParserState, gold: &[usize]) -> [Option<usize>; 3] {
    let head = |w: usize| gold[w - 1];
    let buffer = state.front..=state.n;
    let mut costs = [None; 3];
    for a in dep_valid_actions(state) {
        let cost = match a {
            Transition::Shift => {
                let b0 = state.front;
                let below_top = &state.stack[..state.stack.len() - 1];
                usize::from(below_top.contains(&head(b0)))
                    + state.stack.iter().filter(|&&d| d != ROOT && head(d) == b0).count()
            }
            Transition::LeftArc => {
                let s0 = state.top();
                let lost_head = Some(head(s0)) == state.second()
                    || (state.front + 1..=state.n).contains(&head(s0));
                usize::from(lost_head) + buffer.clone().filter(|&d| head(d) == s0).count()
            }
            Transition::RightArc => {
                let s0 = state.top();
                usize::from(buffer.contains(&head(s0)))
                    + buffer.clone().filter(|&d| head(d) == s0).count()
            }
        };
        costs[a.id()] = Some(cost);
    }
    costs
}

/// Oracle action from the closed-form costs, same tie order as
/// [`dep_gold_action`].
pub fn dynamic_gold_action(state: &ParserState, gold: &[usize]) -> Transition {
    let costs = dynamic_oracle_costs(state, gold);
    let valid = dep_valid_actions(state);
    argmin_action(&valid, |a| costs[a.id()].expect("valid"))
}

/// Whether `heads` (1-based words, 0 = root) forms a projective tree.
pub fn is_projective_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().any(|&h| h > n) {
        return false;
    }
    let head = |w: usize| heads[w - 1];
    // every word must reach the root without cycles
    for w in 1..=n {
        let (mut cur, mut steps) = (w, 0);
        while cur != ROOT {
            cur = head(cur);
            steps += 1;
            if steps > n {
                return false;
            }
        }
    }
    let dominates = |h: usize, mut d: usize| {
        while d != ROOT {
            if d == h {
                return true;
            }
            d = head(d);
        }
        h == ROOT
    };
    (1..=n).all(|d| {
        let h = head(d);
        let (lo, hi) = if h < d { (h, d) } else { (d, h) };
        (lo + 1..hi).all(|between| dominates(h, between))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Exhaustive,
    Dynamic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepSentence {
    pub words: Vec<String>,
    pub tags: Vec<String>,
    /// Gold head of each word (0 = root).
    pub heads: Vec<usize>,
}

impl DepSentence {
    /// Builds a parser input from a column corpus row set.
    pub fn from_sentence(
        sent: &Sentence,
        word_col: usize,
        tag_col: Option<usize>,
        head_col: usize,
    ) -> Result<Self> {
        let mut out = DepSentence {
            words: Vec::with_capacity(sent.len()),
            tags: Vec::with_capacity(sent.len()),
            heads: Vec::with_capacity(sent.len()),
        };
        for tok in &sent.tokens {
            out.words.push(tok.column(word_col).unwrap_or("").to_string());
            out.tags.push(tag_col.and_then(|c| tok.column(c)).unwrap_or("_").to_string());
            let h = tok.column(head_col).unwrap_or("");
            out.heads.push(h.parse().map_err(|_| {
                L2sError::config(format!("head {h:?} is not a token index"))
            })?);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Loads parser inputs, skipping (with a warning) sentences whose gold tree
/// is not projective.
pub fn dep_inputs(sentences: &[Sentence]) -> Result<Vec<DepSentence>> {
    let mut out = Vec::new();
    for (i, s) in sentences.iter().enumerate() {
        let width = s.tokens.first().map_or(0, |t| t.columns.len());
        let tag_col = (width >= 3).then_some(1);
        let d = DepSentence::from_sentence(s, 0, tag_col, width.saturating_sub(1))?;
        if is_projective_tree(&d.heads) {
            out.push(d);
        } else {
            log::warn!("skipping sentence {i}: gold tree is not projective");
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct DepParserTask {
    pub bits: u8,
    pub oracle: OracleKind,
}

impl Default for DepParserTask {
    fn default() -> Self {
        DepParserTask {
            bits: crate::dataio::DEFAULT_BITS,
            oracle: OracleKind::Dynamic,
        }
    }
}

fn word_at(sent: &DepSentence, i: Option<usize>) -> (&str, &str) {
    match i {
        None => ("<none>", "<none>"),
        Some(ROOT) => ("<root>", "<root>"),
        Some(i) if i <= sent.len() => (&sent.words[i - 1], &sent.tags[i - 1]),
        Some(_) => ("<none>", "<none>"),
    }
}

fn parser_features(sent: &DepSentence, state: &ParserState, bits: u8) -> FeatureVector {
    let mut fv = FeatureVector::new(bits);
    let s0 = state.stack.last().copied();
    let s1 = state.second();
    let b0 = (!state.buffer_empty()).then_some(state.front);
    let b1 = (state.front < state.n).then_some(state.front + 1);
    let positions = [("s0", s0), ("s1", s1), ("b0", b0), ("b1", b1)];
    for (name, pos) in positions {
        let (w, t) = word_at(sent, pos);
        fv.add(name, &format!("w={w}"));
        fv.add(name, &format!("t={t}"));
    }
    for (name, pos) in [("s0", s0), ("b0", b0)] {
        let (w, _) = word_at(sent, pos);
        let chars: Vec<char> = w.chars().collect();
        let suffix: String = chars[chars.len().saturating_sub(2)..].iter().collect();
        fv.add(name, &format!("suf={suffix}"));
    }
    let (s0w, s0t) = word_at(sent, s0);
    let (s1w, s1t) = word_at(sent, s1);
    let (b0w, b0t) = word_at(sent, b0);
    fv.add("pair", &format!("{s0w}|{b0w}"));
    fv.add("pair", &format!("{s0t}|{b0t}"));
    fv.add("pair", &format!("{s1w}|{s0w}"));
    fv.add("tri", &format!("{s1t}|{s0t}|{b0t}"));
    fv.add("tri", &format!("{s1w}|{s0w}|{b0w}"));
    let dist = match (s0, b0) {
        (Some(s), Some(b)) if s != ROOT => (b - s).min(5).to_string(),
        _ => "-".to_string(),
    };
    fv.add("dist", &dist);
    fv.add("depth", &state.stack.len().min(4).to_string());
    fv.add("const", "bias");
    fv
}

/// Parses with the learned policy, using the oracle as reference, and
/// declares the number of words with a wrong head at the end.
pub fn run_dep_parser(task: &DepParserTask, session: &mut Session<'_>, sent: &DepSentence) -> Result<Vec<usize>> {
    if sent.is_empty() {
        return Err(L2sError::contract("cannot parse an empty sentence"));
    }
    let mut exhaustive = ExhaustiveOracle::new(&sent.heads);
    let mut state = ParserState::initial(sent.len());
    let mut step = 0u32;
    while !state.is_terminal() {
        let valid = dep_valid_actions(&state);
        if valid.is_empty() {
            return Err(L2sError::contract(format!("no valid transition in {state:?}")));
        }
        let reference = if session.wants_reference() {
            match task.oracle {
                OracleKind::Dynamic => dynamic_gold_action(&state, &sent.heads),
                OracleKind::Exhaustive => {
                    argmin_action(&valid, |a| exhaustive.action_loss(&state, a))
                }
            }
        } else {
            valid[0]
        };
        step += 1;
        let req = PredictRequest::new(parser_features(sent, &state, task.bits), reference.id(), step)
            .allowed(valid.iter().map(|a| a.id()).collect());
        let action = session.predict(req)?;
        let action = Transition::from_id(action)
            .ok_or_else(|| L2sError::config(format!("action {action} is not a transition")))?;
        state = dep_trans(&state, action)?;
    }
    let heads: Vec<usize> = (1..=sent.len()).map(|w| state.heads[w].unwrap_or(ROOT)).collect();
    let wrong = heads.iter().zip(&sent.heads).filter(|(p, g)| p != g).count();
    session.declare_loss(wrong as f64)?;
    Ok(heads)
}

impl Task for DepParserTask {
    type Input = DepSentence;
    type Output = Vec<usize>;

    fn num_actions(&self) -> usize {
        3
    }

    fn run(&self, session: &mut Session<'_>, input: &DepSentence) -> Result<Vec<usize>> {
        run_dep_parser(self, session, input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(stack: &[usize], front: usize, n: usize) -> ParserState {
        ParserState {
            stack: stack.to_vec(),
            front,
            n,
            heads: vec![None; n + 1],
        }
    }

    #[test]
    fn valid_actions() {
        assert_eq!(dep_valid_actions(&state(&[0], 1, 1)), vec![Transition::Shift]);
        assert_eq!(
            dep_valid_actions(&state(&[0, 1], 2, 2)),
            vec![Transition::Shift, Transition::RightArc, Transition::LeftArc]
        );
        assert!(dep_valid_actions(&state(&[0], 3, 2)).is_empty());
        assert_eq!(dep_valid_actions(&state(&[0, 2], 3, 2)), vec![Transition::RightArc]);
    }

    #[test]
    fn transitions() {
        let s = dep_trans(&state(&[0], 1, 1), Transition::Shift).unwrap();
        assert_eq!((s.stack.clone(), s.buffer_empty()), (vec![0, 1], true));

        let s = dep_trans(&state(&[0, 1], 2, 2), Transition::LeftArc).unwrap();
        assert_eq!(s.heads[1], Some(2));
        assert_eq!((s.stack.clone(), s.front), (vec![0], 2));

        let s = dep_trans(&state(&[0, 2], 3, 2), Transition::RightArc).unwrap();
        assert_eq!(s.heads[2], Some(0));
        assert!(s.is_terminal());

        assert!(dep_trans(&state(&[0], 1, 1), Transition::LeftArc).is_err());
    }

    #[test]
    fn two_word_gold_sequence() {
        let gold = [2, 0];
        let mut s = ParserState::initial(2);
        let mut seq = Vec::new();
        while !s.is_terminal() {
            let a = dep_gold_action(&s, &gold);
            assert_eq!(a, dynamic_gold_action(&s, &gold));
            seq.push(a);
            s = dep_trans(&s, a).unwrap();
        }
        assert_eq!(
            seq,
            [Transition::Shift, Transition::LeftArc, Transition::Shift, Transition::RightArc]
        );
        assert_eq!(s.wrong_so_far(&gold), 0);
    }

    #[test]
    fn projectivity() {
        assert!(is_projective_tree(&[2, 0]));
        assert!(is_projective_tree(&[0]));
        // 1 <- 3, 2 <- 4 cross
        assert!(!is_projective_tree(&[3, 4, 0, 3]));
        // cycle
        assert!(!is_projective_tree(&[2, 1]));
        assert!(!is_projective_tree(&[5]));
    }
}
