use crate::dataio::{apply_templates, LabelDict, Sentence, TemplateSpec};
use crate::error::{L2sError, Result};
use crate::search::{PredictRequest, Session, Task};

/// A sequence whose positive integer labels are read from the gold column.
#[derive(Clone, Debug)]
pub struct DetectionInput {
    pub sentence: Sentence,
    pub values: Vec<u32>,
}

impl DetectionInput {
    pub fn from_sentence(sentence: Sentence, labels: &LabelDict) -> Result<Self> {
        let values = sentence
            .gold_labels
            .iter()
            .map(|&id| {
                let name = labels.name(id).unwrap_or("");
                name.parse::<u32>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .ok_or_else(|| L2sError::config(format!("detection label {name:?} is not a positive integer")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DetectionInput { sentence, values })
    }

    pub fn max_value(&self) -> u32 {
        self.values.iter().copied().fold(1, u32::max)
    }
}

/// Detects the largest label in a sequence with an asymmetric loss:
/// missing a large value costs `false_negative_loss`, overshooting costs 1.
#[derive(Clone, Debug)]
pub struct DetectionTask {
    pub templates: TemplateSpec,
    pub bits: u8,
    /// Largest label value; action `a` predicts value `a + 1`.
    pub max_label: u32,
    pub false_negative_loss: f64,
    /// Whether the run returns its max prediction.
    pub emit_output: bool,
}

impl DetectionTask {
    pub fn new(templates: TemplateSpec, bits: u8, max_label: u32, false_negative_loss: f64) -> Result<Self> {
        if !(false_negative_loss.is_finite() && false_negative_loss > 0.0) {
            return Err(L2sError::config("false negative loss must be positive"));
        }
        if max_label == 0 {
            return Err(L2sError::config("detection needs at least one label value"));
        }
        Ok(DetectionTask {
            templates,
            bits,
            max_label,
            false_negative_loss,
            emit_output: true,
        })
    }

    pub fn loss(&self, gold_max: u32, predicted_max: u32) -> f64 {
        if gold_max > predicted_max {
            self.false_negative_loss
        } else if gold_max < predicted_max {
            1.0
        } else {
            0.0
        }
    }
}

pub fn run_detection(task: &DetectionTask, session: &mut Session<'_>, input: &DetectionInput) -> Result<Option<u32>> {
    let gold_max = input.max_value();
    let mut max_prediction = 1u32;
    for (i, &value) in input.values.iter().enumerate() {
        let fv = apply_templates(&input.sentence, i, &task.templates, task.bits);
        let reference = (value.min(task.max_label) - 1) as usize;
        let pred = session.predict(PredictRequest::new(fv, reference, i as u32 + 1))? as u32 + 1;
        max_prediction = max_prediction.max(pred);
    }
    session.declare_loss(task.loss(gold_max, max_prediction))?;
    Ok(task.emit_output.then_some(max_prediction))
}

impl Task for DetectionTask {
    type Input = DetectionInput;
    type Output = Option<u32>;

    fn num_actions(&self) -> usize {
        self.max_label as usize
    }

    fn run(&self, session: &mut Session<'_>, input: &DetectionInput) -> Result<Option<u32>> {
        run_detection(self, session, input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetric_loss() {
        let task = DetectionTask::new(TemplateSpec::empty(), 12, 3, 5.0).unwrap();
        assert_eq!(task.loss(2, 1), 5.0);
        assert_eq!(task.loss(2, 2), 0.0);
        assert_eq!(task.loss(1, 2), 1.0);
    }

    #[test]
    fn labels_must_be_positive_integers() {
        let dict = LabelDict::from_labels(["1", "0"]);
        let sent = Sentence {
            tokens: vec![],
            gold_labels: vec![0, 1],
        };
        assert!(DetectionInput::from_sentence(sent, &dict).is_err());
        assert!(DetectionTask::new(TemplateSpec::empty(), 12, 3, 0.0).is_err());
    }
}
