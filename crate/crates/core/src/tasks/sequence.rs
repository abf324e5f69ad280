use super::bio::BioScheme;
use crate::cslearn::Action;
use crate::dataio::{apply_templates, LabelDict, Sentence, TemplateSpec};
use crate::error::{L2sError, Result};
use crate::search::{PredictRequest, Session, Task};

pub const PREV_NAMESPACE: &str = "prev";

#[derive(Clone, Debug)]
pub struct SequenceTaskConfig {
    /// How many previous predictions feed features and condition tags.
    pub markov_order: usize,
    pub templates: TemplateSpec,
    pub bits: u8,
}

impl Default for SequenceTaskConfig {
    fn default() -> Self {
        SequenceTaskConfig {
            markov_order: 1,
            templates: TemplateSpec::default(),
            bits: crate::dataio::DEFAULT_BITS,
        }
    }
}

/// Sequence labeling under Hamming loss, optionally BIO-constrained.
#[derive(Clone, Debug)]
pub struct SequenceTask {
    pub config: SequenceTaskConfig,
    labels: LabelDict,
    bio: Option<BioScheme>,
}

impl SequenceTask {
    pub fn new(config: SequenceTaskConfig, labels: LabelDict) -> Result<Self> {
        if labels.is_empty() {
            return Err(L2sError::config("sequence task needs at least one label"));
        }
        Ok(SequenceTask {
            config,
            labels,
            bio: None,
        })
    }

    /// Same task with the `I-x` after `B-x`/`I-x` constraint.
    pub fn bio(config: SequenceTaskConfig, labels: LabelDict) -> Result<Self> {
        let scheme = BioScheme::new(&labels)?;
        let mut task = SequenceTask::new(config, labels)?;
        task.bio = Some(scheme);
        Ok(task)
    }

    pub fn labels(&self) -> &LabelDict {
        &self.labels
    }

    pub fn scheme(&self) -> Option<&BioScheme> {
        self.bio.as_ref()
    }

    fn label_name(&self, id: Action) -> &str {
        self.labels.name(id).unwrap_or("?")
    }

    /// Tags of the earlier predictions position `n` (1-based) conditions on.
    pub fn condition_tags(&self, n: usize) -> Vec<u32> {
        let order = if self.bio.is_some() {
            self.config.markov_order.max(1)
        } else {
            self.config.markov_order
        };
        (n.saturating_sub(order).max(1)..n).map(|t| t as u32).collect()
    }
}

/// Labels the sentence left to right, declaring Hamming loss as it goes.
pub fn run_sequence(task: &SequenceTask, session: &mut Session<'_>, sent: &Sentence) -> Result<Vec<Action>> {
    let mut output: Vec<Action> = Vec::with_capacity(sent.len());
    for n in 1..=sent.len() {
        let mut fv = apply_templates(sent, n - 1, &task.config.templates, task.config.bits);
        for j in 1..=task.config.markov_order.min(n - 1) {
            let prev = task.label_name(output[n - 1 - j]);
            fv.add(PREV_NAMESPACE, &format!("prev_{j}={prev}"));
        }
        let gold = sent.gold_labels[n - 1];
        let mut req = PredictRequest::new(fv, gold, n as u32).condition_on(task.condition_tags(n));
        if let Some(scheme) = &task.bio {
            let allowed = scheme.valid_after(output.last().copied());
            if !allowed.contains(&gold) {
                req.reference = scheme.begin_for(gold).unwrap_or(allowed[0]);
            }
            req = req.allowed(allowed);
        }
        let pred = session.predict(req)?;
        session.declare_loss(if pred == gold { 0.0 } else { 1.0 })?;
        output.push(pred);
    }
    Ok(output)
}

impl Task for SequenceTask {
    type Input = Sentence;
    type Output = Vec<Action>;

    fn num_actions(&self) -> usize {
        self.labels.len()
    }

    fn history_independent(&self) -> bool {
        true
    }

    fn run(&self, session: &mut Session<'_>, input: &Sentence) -> Result<Vec<Action>> {
        run_sequence(self, session, input)
    }
}
