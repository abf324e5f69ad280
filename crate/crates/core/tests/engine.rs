use std::cell::RefCell;

use l2s::cslearn::{write_model, Action, ConstantPolicy, CostSensitiveExample, Learner, LinearCSModel};
use l2s::dataio::{FeatureVector, LabelDict, Sentence, TemplateSpec};
use l2s::search::{
    learn_example, reference_decode, test_decode, Algorithm, Counters, ExampleContext, PredictRequest,
    RolloutSource, Session, SessionMode, Task, TrainerConfig,
};
use l2s::synth::{markov_corpus, MarkovConfig};
use l2s::tasks::{DepParserTask, DepSentence, SequenceTask, SequenceTaskConfig};
use l2s::L2sError;

fn corpus(k: usize, t: usize, n: usize, seed: u64) -> (Vec<Sentence>, LabelDict) {
    markov_corpus(&MarkovConfig {
        num_labels: k,
        length: t,
        num_sentences: n,
        seed,
        ..MarkovConfig::default()
    })
    .unwrap()
}

fn seq_task(labels: &LabelDict, order: usize) -> SequenceTask {
    let config = SequenceTaskConfig {
        markov_order: order,
        templates: TemplateSpec::parse("0:w", "").unwrap(),
        bits: 18,
    };
    SequenceTask::new(config, labels.clone()).unwrap()
}

fn lols() -> TrainerConfig {
    TrainerConfig::for_algorithm(Algorithm::Lols)
}

/// Fixed-length task with `k` actions that logs what every run saw.
struct Recorder {
    len: usize,
    k: usize,
    reference: Action,
    log: RefCell<Vec<(SessionMode, Vec<Action>)>>,
}

impl Recorder {
    fn new(len: usize, k: usize, reference: Action) -> Self {
        Recorder {
            len,
            k,
            reference,
            log: RefCell::new(Vec::new()),
        }
    }
}

impl Task for Recorder {
    type Input = ();
    type Output = Vec<Action>;

    fn num_actions(&self) -> usize {
        self.k
    }

    fn history_independent(&self) -> bool {
        true
    }

    fn run(&self, session: &mut Session<'_>, _: &()) -> l2s::Result<Vec<Action>> {
        let mut out = Vec::new();
        for n in 1..=self.len {
            let mut fv = FeatureVector::new(8);
            fv.add("x", &n.to_string());
            let a = session.predict(PredictRequest::new(fv, self.reference, n as u32))?;
            session.declare_loss(if a == self.reference { 0.0 } else { 1.0 })?;
            out.push(a);
        }
        self.log.borrow_mut().push((session.mode(), out.clone()));
        Ok(out)
    }
}

#[test]
fn deviation_replays_prefix_forces_action_then_rolls_out() {
    let task = Recorder::new(3, 3, 0);
    let mut policy = ConstantPolicy::new(2, 3);
    let cfg = TrainerConfig {
        rollout: RolloutSource::Reference,
        ..lols()
    };
    learn_example(&task, &(), &mut policy, &cfg, ExampleContext::default()).unwrap();
    let log = task.log.borrow();
    assert_eq!(log[0], (SessionMode::Rollin, vec![2, 2, 2]));
    let dev = log
        .iter()
        .find(|(m, _)| *m == SessionMode::Deviation { t0: 2, a0: 1 })
        .unwrap();
    assert_eq!(dev.1, vec![2, 1, 0]);
}

#[test]
fn zero_model_decodes_smallest_action() {
    let task = Recorder::new(4, 5, 3);
    let model = LinearCSModel::new(8, 5, 0.5).unwrap();
    let d = test_decode(&task, &(), &model).unwrap();
    assert_eq!(d.output, vec![0; 4]);
    assert_eq!(d.loss, 4.0);
    assert_eq!((d.counters.run_executions, d.counters.policy_calls), (1, 4));
    assert_eq!(d.counters.rollout_steps, 0);
}

fn counters_for(t: usize, k: usize, collapse: Option<usize>) -> Counters {
    let (c, labels) = corpus(k, t, 1, (t * 10 + k) as u64);
    let task = seq_task(&labels, 0);
    let mut model = LinearCSModel::new(18, k, 0.5).unwrap();
    let cfg = TrainerConfig {
        cache_enabled: false,
        collapse_h: collapse,
        ..lols()
    };
    learn_example(&task, &c[0], &mut model, &cfg, ExampleContext::default()).unwrap()
}

#[test]
fn hand_traced_counters() {
    let c = counters_for(3, 2, None);
    assert_eq!((c.run_executions, c.policy_calls), (7, 9));
    assert_eq!(c.rollout_steps, 6);
    assert_eq!(c.cs_examples, 3);
    let c = counters_for(3, 2, Some(1));
    assert_eq!((c.run_executions, c.policy_calls), (7, 7));
}

#[test]
fn dagger_never_rolls_out() {
    let (c, labels) = corpus(2, 3, 1, 1);
    let task = seq_task(&labels, 1);
    let mut model = LinearCSModel::new(18, 2, 0.5).unwrap();
    let cfg = TrainerConfig::for_algorithm(Algorithm::Dagger);
    let counters = learn_example(&task, &c[0], &mut model, &cfg, ExampleContext::default()).unwrap();
    assert_eq!(counters.run_executions, 1);
    assert_eq!(counters.cs_examples, 3);
    assert_eq!(counters.rollout_steps, 0);
}

#[test]
fn memo_hits_when_rollouts_agree() {
    let (c, labels) = corpus(3, 6, 1, 2);
    let task = seq_task(&labels, 1);
    let mut model = LinearCSModel::new(18, 3, 0.5).unwrap();
    let counters = learn_example(&task, &c[0], &mut model, &lols(), ExampleContext::default()).unwrap();
    assert!(counters.memo_hits > 0);
    assert!(counters.policy_calls <= 6 * 3 + 6);

    let cfg = TrainerConfig {
        cache_enabled: false,
        ..lols()
    };
    let counters = learn_example(&task, &c[0], &mut model, &cfg, ExampleContext::default()).unwrap();
    assert_eq!(counters.memo_hits, 0);
}

#[test]
fn memo_needs_predicted_condition_tags() {
    struct BadTags;
    impl Task for BadTags {
        type Input = ();
        type Output = ();
        fn num_actions(&self) -> usize {
            2
        }
        fn run(&self, session: &mut Session<'_>, _: &()) -> l2s::Result<()> {
            for n in 1..=3u32 {
                let req = PredictRequest::new(FeatureVector::new(8), 0, n).condition_on(vec![n + 7]);
                session.predict(req)?;
            }
            Ok(())
        }
    }
    let mut model = LinearCSModel::new(8, 2, 0.5).unwrap();
    let err = learn_example(&BadTags, &(), &mut model, &lols(), ExampleContext::default()).unwrap_err();
    match err {
        L2sError::Contract(msg) => assert!(msg.contains("tag 8") || msg.contains("tag 9"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
}

/// Predicts its own update count, so rollouts reveal which policy state
/// they ran under.
struct CountingPolicy {
    k: usize,
    updates: u64,
}

impl Learner for CountingPolicy {
    fn num_actions(&self) -> usize {
        self.k
    }
    fn predict(&self, _: &FeatureVector, _: &[Action]) -> l2s::Result<Action> {
        Ok(self.updates as usize % self.k)
    }
    fn update(&mut self, _: &CostSensitiveExample) -> l2s::Result<()> {
        self.updates += 1;
        Ok(())
    }
    fn update_count(&self) -> u64 {
        self.updates
    }
}

#[test]
fn online_updates_reach_later_rollouts() {
    let task = Recorder::new(5, 16, 0);
    let mut policy = CountingPolicy { k: 16, updates: 3 };
    let cfg = TrainerConfig {
        rollout: RolloutSource::Learned,
        cache_enabled: false,
        ..lols()
    };
    learn_example(&task, &(), &mut policy, &cfg, ExampleContext::default()).unwrap();
    for (mode, out) in task.log.borrow().iter() {
        if let SessionMode::Deviation { t0, .. } = *mode {
            for &a in &out[t0..] {
                assert_eq!(a, 3 + t0 - 1);
            }
        }
    }
    assert_eq!(policy.updates, 8);
}

#[test]
fn batched_updates_freeze_the_policy_within_an_example() {
    let task = Recorder::new(4, 16, 0);
    let mut policy = CountingPolicy { k: 16, updates: 5 };
    let cfg = TrainerConfig {
        rollout: RolloutSource::Learned,
        update_per_example: true,
        ..lols()
    };
    learn_example(&task, &(), &mut policy, &cfg, ExampleContext::default()).unwrap();
    for (mode, out) in task.log.borrow().iter() {
        let forced = match *mode {
            SessionMode::Deviation { t0, .. } => Some(t0 - 1),
            _ => None,
        };
        for (i, &a) in out.iter().enumerate() {
            if Some(i) != forced {
                assert_eq!(a, 5, "{mode:?} {out:?}");
            }
        }
    }
    assert_eq!(policy.updates, 9);
}

fn model_bytes(model: &LinearCSModel) -> Vec<u8> {
    let mut out = Vec::new();
    write_model(model, &mut out).unwrap();
    out
}

#[test]
fn cache_is_exact_with_per_example_updates() {
    let (c, labels) = corpus(4, 8, 30, 9);
    let task = seq_task(&labels, 1);
    let mut runs = Vec::new();
    for cache in [true, false] {
        let mut model = LinearCSModel::new(18, 4, 0.5).unwrap();
        let cfg = TrainerConfig {
            update_per_example: true,
            cache_enabled: cache,
            seed: 11,
            ..lols()
        };
        let mut counters = Counters::default();
        for (i, s) in c.iter().enumerate() {
            let ctx = ExampleContext {
                example_id: i as u64,
                pass: 0,
            };
            counters += learn_example(&task, s, &mut model, &cfg, ctx).unwrap();
        }
        runs.push((model_bytes(&model), counters));
    }
    assert_eq!(runs[0].0, runs[1].0);
    assert!(runs[0].1.policy_calls < runs[1].1.policy_calls);
}

/// Hamming labeling that declares the whole loss at the end.
struct LateLoss(SequenceTask);

impl Task for LateLoss {
    type Input = Sentence;
    type Output = Vec<Action>;
    fn num_actions(&self) -> usize {
        self.0.num_actions()
    }
    fn run(&self, session: &mut Session<'_>, sent: &Sentence) -> l2s::Result<Vec<Action>> {
        let mut out: Vec<Action> = Vec::new();
        for n in 1..=sent.len() {
            let mut fv = l2s::dataio::apply_templates(sent, n - 1, &self.0.config.templates, 18);
            if let Some(&p) = out.last() {
                fv.add("prev", &format!("prev_1={}", self.0.labels().name(p).unwrap()));
            }
            let req = PredictRequest::new(fv, sent.gold_labels[n - 1], n as u32).condition_on(self.0.condition_tags(n));
            out.push(session.predict(req)?);
        }
        let wrong = out.iter().zip(&sent.gold_labels).filter(|(a, b)| a != b).count();
        session.declare_loss(wrong as f64)?;
        Ok(out)
    }
}

#[test]
fn early_and_late_loss_declaration_agree() {
    let (c, labels) = corpus(3, 7, 20, 4);
    let early = seq_task(&labels, 1);
    let late = LateLoss(seq_task(&labels, 1));
    let mut m1 = LinearCSModel::new(18, 3, 0.5).unwrap();
    let mut m2 = LinearCSModel::new(18, 3, 0.5).unwrap();
    for (i, s) in c.iter().enumerate() {
        let ctx = ExampleContext {
            example_id: i as u64,
            pass: 0,
        };
        learn_example(&early, s, &mut m1, &lols(), ctx).unwrap();
        learn_example(&late, s, &mut m2, &lols(), ctx).unwrap();
    }
    assert_eq!(model_bytes(&m1), model_bytes(&m2));
    for s in &c {
        assert_eq!(test_decode(&early, s, &m1).unwrap().loss, test_decode(&late, s, &m2).unwrap().loss);
    }
}

/// Declares an extra loss only while rolling in.
struct RollinNoise(SequenceTask);

impl Task for RollinNoise {
    type Input = Sentence;
    type Output = Vec<Action>;
    fn num_actions(&self) -> usize {
        self.0.num_actions()
    }
    fn history_independent(&self) -> bool {
        true
    }
    fn run(&self, session: &mut Session<'_>, sent: &Sentence) -> l2s::Result<Vec<Action>> {
        if session.mode() == SessionMode::Rollin {
            session.declare_loss(100.0)?;
        }
        self.0.run(session, sent)
    }
}

#[test]
fn rollin_losses_do_not_reach_costs() {
    let (c, labels) = corpus(3, 6, 10, 5);
    let plain = seq_task(&labels, 1);
    let noisy = RollinNoise(seq_task(&labels, 1));
    let mut m1 = LinearCSModel::new(18, 3, 0.5).unwrap();
    let mut m2 = LinearCSModel::new(18, 3, 0.5).unwrap();
    for (i, s) in c.iter().enumerate() {
        let ctx = ExampleContext {
            example_id: i as u64,
            pass: 0,
        };
        learn_example(&plain, s, &mut m1, &lols(), ctx).unwrap();
        learn_example(&noisy, s, &mut m2, &lols(), ctx).unwrap();
    }
    assert_eq!(model_bytes(&m1), model_bytes(&m2));
}

#[test]
fn collapse_refused_for_history_dependent_tasks() {
    let sent = DepSentence {
        words: vec!["a".into(), "b".into()],
        tags: vec!["_".into(), "_".into()],
        heads: vec![2, 0],
    };
    let mut model = LinearCSModel::new(18, 3, 0.5).unwrap();
    let cfg = TrainerConfig {
        collapse_h: Some(1),
        ..lols()
    };
    let err = learn_example(&DepParserTask::default(), &sent, &mut model, &cfg, ExampleContext::default());
    assert!(matches!(err, Err(L2sError::Config(_))));
}

#[test]
fn negative_loss_is_rejected() {
    struct Negative;
    impl Task for Negative {
        type Input = ();
        type Output = ();
        fn num_actions(&self) -> usize {
            2
        }
        fn run(&self, session: &mut Session<'_>, _: &()) -> l2s::Result<()> {
            session.predict(PredictRequest::new(FeatureVector::new(8), 0, 1))?;
            session.declare_loss(-1.0)
        }
    }
    let model = LinearCSModel::new(8, 2, 0.5).unwrap();
    assert!(matches!(test_decode(&Negative, &(), &model), Err(L2sError::Contract(_))));
}

#[test]
fn model_too_small_for_task() {
    let task = Recorder::new(2, 4, 0);
    let model = LinearCSModel::new(8, 3, 0.5).unwrap();
    assert!(matches!(test_decode(&task, &(), &model), Err(L2sError::Config(_))));
}

#[test]
fn reference_decode_follows_gold() {
    let (c, labels) = corpus(5, 12, 5, 6);
    let task = seq_task(&labels, 1);
    for s in &c {
        let d = reference_decode(&task, s).unwrap();
        assert_eq!(d.output, s.gold_labels);
        assert_eq!(d.loss, 0.0);
    }
}

#[test]
fn constant_policy_loss_counts_mismatches() {
    let (c, labels) = corpus(5, 12, 5, 7);
    let task = seq_task(&labels, 1);
    for s in &c {
        let d = test_decode(&task, s, &ConstantPolicy::new(2, 5)).unwrap();
        let expect = s.gold_labels.iter().filter(|&&y| y != 2).count();
        assert_eq!(d.loss, expect as f64);
    }
}
