use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use l2s::dataio::{read_conll, read_entrel, LabelDict, Sentence, SentenceRecord, TemplateSpec};
use l2s::metrics::{hamming_accuracy, micro_f1_entities, micro_f1_relations, span_f1, uas, Averaging, RelationTriple};
use l2s::search::Task;
use l2s::tasks::{
    dep_inputs, DepParserTask, DepSentence, DetectionInput, DetectionTask, EntityRelationInput,
    EntityRelationOutput, EntityRelationTask, RelationConstraintTable, SequenceTask, SequenceTaskConfig,
    NONE_RELATION,
};
use l2s::L2sError;
use serde_json::{json, Value};

use crate::args::{TaskKind, TaskOpts};
use crate::report::RunReport;
use crate::CliError;

/// Task-agnostic view of gold and predicted structures, shared by `test`
/// and `score` so both compute metrics the same way.
pub enum Scored {
    Labels {
        bio: bool,
        gold: Vec<Vec<String>>,
        pred: Vec<Vec<String>>,
    },
    Maxima {
        gold: Vec<u32>,
        pred: Vec<u32>,
    },
    Heads {
        gold: Vec<usize>,
        pred: Vec<usize>,
    },
    Relations {
        gold_entities: Vec<Vec<String>>,
        pred_entities: Vec<Vec<String>>,
        gold: Vec<Vec<RelationTriple>>,
        pred: Vec<Vec<RelationTriple>>,
    },
}

impl Scored {
    pub fn report(&self, averaging: Averaging) -> Result<RunReport, CliError> {
        let mut r = RunReport::default();
        match self {
            Scored::Labels { bio, gold, pred } => {
                let flat = |x: &[Vec<String>]| x.concat();
                r.metric("accuracy", hamming_accuracy(&flat(pred), &flat(gold))?);
                if *bio {
                    let prf = span_f1(pred, gold, averaging)?;
                    r.metric("span_precision", prf.precision);
                    r.metric("span_recall", prf.recall);
                    r.metric("span_f1", prf.f1);
                }
            }
            Scored::Maxima { gold, pred } => {
                let n = gold.len().max(1) as f64;
                let count = |f: fn(u32, u32) -> bool| gold.iter().zip(pred).filter(|(g, p)| f(**g, **p)).count() as f64 / n;
                r.metric("max_accuracy", count(|g, p| g == p));
                r.metric("undershoot_rate", count(|g, p| g > p));
                r.metric("overshoot_rate", count(|g, p| g < p));
            }
            Scored::Heads { gold, pred } => r.metric("uas", uas(pred, gold)?),
            Scored::Relations {
                gold_entities,
                pred_entities,
                gold,
                pred,
            } => {
                r.metric("entity_f1", micro_f1_entities(pred_entities, gold_entities)?.f1);
                let prf = micro_f1_relations(pred, gold)?;
                r.metric("relation_precision", prf.precision);
                r.metric("relation_recall", prf.recall);
                r.metric("relation_f1", prf.f1);
            }
        }
        Ok(r)
    }
}

/// What the CLI needs from a task beyond running it.
pub trait CliTask: Task + Sync {
    fn tokens(input: &Self::Input) -> usize;
    fn scored(&self, inputs: &[Self::Input], outputs: &[Self::Output]) -> Scored;
    fn write_predictions(&self, inputs: &[Self::Input], outputs: &[Self::Output], out: &mut dyn Write) -> io::Result<()>;
}

fn write_rows(out: &mut dyn Write, sent: &Sentence, extra: impl Fn(usize) -> String) -> io::Result<()> {
    for (i, tok) in sent.tokens.iter().enumerate() {
        writeln!(out, "{} {}", tok.columns.join(" "), extra(i))?;
    }
    writeln!(out)
}

impl CliTask for SequenceTask {
    fn tokens(input: &Sentence) -> usize {
        input.len()
    }

    fn scored(&self, inputs: &[Sentence], outputs: &[Vec<usize>]) -> Scored {
        let names = |ids: &[usize]| ids.iter().map(|&a| self.labels().name(a).unwrap_or("?").to_string()).collect();
        Scored::Labels {
            bio: self.scheme().is_some(),
            gold: inputs.iter().map(|s| names(&s.gold_labels)).collect(),
            pred: outputs.iter().map(|o| names(o)).collect(),
        }
    }

    fn write_predictions(&self, inputs: &[Sentence], outputs: &[Vec<usize>], out: &mut dyn Write) -> io::Result<()> {
        for (s, o) in inputs.iter().zip(outputs) {
            write_rows(out, s, |i| self.labels().name(o[i]).unwrap_or("?").to_string())?;
        }
        Ok(())
    }
}

impl CliTask for DetectionTask {
    fn tokens(input: &DetectionInput) -> usize {
        input.values.len()
    }

    fn scored(&self, inputs: &[DetectionInput], outputs: &[Option<u32>]) -> Scored {
        Scored::Maxima {
            gold: inputs.iter().map(DetectionInput::max_value).collect(),
            pred: outputs.iter().map(|o| o.unwrap_or(1)).collect(),
        }
    }

    fn write_predictions(&self, inputs: &[DetectionInput], outputs: &[Option<u32>], out: &mut dyn Write) -> io::Result<()> {
        for (x, o) in inputs.iter().zip(outputs) {
            write_rows(out, &x.sentence, |_| o.unwrap_or(1).to_string())?;
        }
        Ok(())
    }
}

impl CliTask for DepParserTask {
    fn tokens(input: &DepSentence) -> usize {
        input.len()
    }

    fn scored(&self, inputs: &[DepSentence], outputs: &[Vec<usize>]) -> Scored {
        Scored::Heads {
            gold: inputs.iter().flat_map(|s| s.heads.iter().copied()).collect(),
            pred: outputs.concat(),
        }
    }

    fn write_predictions(&self, inputs: &[DepSentence], outputs: &[Vec<usize>], out: &mut dyn Write) -> io::Result<()> {
        for (s, heads) in inputs.iter().zip(outputs) {
            let tagged = s.tags.iter().any(|t| t != "_");
            for i in 0..s.len() {
                if tagged {
                    writeln!(out, "{} {} {} {}", s.words[i], s.tags[i], s.heads[i], heads[i])?;
                } else {
                    writeln!(out, "{} {} {}", s.words[i], s.heads[i], heads[i])?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn gold_triples(rec: &SentenceRecord) -> Vec<RelationTriple> {
    let k = rec.entities.len();
    let mut out = Vec::new();
    for n in 0..k {
        for m in n + 1..k {
            out.push(RelationTriple {
                arg1: n,
                arg2: m,
                kind: rec.gold_relation(n, m).unwrap_or(NONE_RELATION).to_string(),
            });
        }
    }
    out
}

fn entity_names(table: &RelationConstraintTable, out: &EntityRelationOutput) -> Vec<String> {
    out.entity_types
        .iter()
        .map(|&t| table.entity_types().name(t).unwrap_or("?").to_string())
        .collect()
}

fn relation_triples(table: &RelationConstraintTable, out: &EntityRelationOutput) -> Vec<RelationTriple> {
    out.relations
        .iter()
        .map(|&(n, m, r)| RelationTriple {
            arg1: n,
            arg2: m,
            kind: table.relation_types().name(r).unwrap_or("?").to_string(),
        })
        .collect()
}

impl CliTask for EntityRelationTask {
    fn tokens(input: &EntityRelationInput) -> usize {
        input.record.tokens.len()
    }

    fn scored(&self, inputs: &[EntityRelationInput], outputs: &[EntityRelationOutput]) -> Scored {
        Scored::Relations {
            gold_entities: inputs
                .iter()
                .map(|x| x.record.entities.iter().map(|e| e.gold_type.clone()).collect())
                .collect(),
            pred_entities: outputs.iter().map(|o| entity_names(&self.table, o)).collect(),
            gold: inputs.iter().map(|x| gold_triples(&x.record)).collect(),
            pred: outputs.iter().map(|o| relation_triples(&self.table, o)).collect(),
        }
    }

    fn write_predictions(
        &self,
        inputs: &[EntityRelationInput],
        outputs: &[EntityRelationOutput],
        out: &mut dyn Write,
    ) -> io::Result<()> {
        for (x, o) in inputs.iter().zip(outputs) {
            let mut v = serde_json::to_value(&x.record)?;
            let relations: Vec<Value> = relation_triples(&self.table, o)
                .into_iter()
                .map(|t| json!([t.arg1, t.arg2, t.kind]))
                .collect();
            v["predicted_entities"] = json!(entity_names(&self.table, o));
            v["predicted_relations"] = Value::Array(relations);
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

/// A loaded corpus with its task; `split` marks where the second file
/// begins when two were read.
pub enum Workload {
    Seq(SequenceTask, Vec<Sentence>),
    Detect(DetectionTask, Vec<DetectionInput>),
    Entrel(EntityRelationTask, Vec<EntityRelationInput>),
    Dep(DepParserTask, Vec<DepSentence>),
}

pub struct Loaded {
    pub workload: Workload,
    /// Names stored with the model and checked at test time.
    pub labels: LabelDict,
    pub num_actions: usize,
    pub split: usize,
}

/// Runs `$body` with `$task` and `$inputs` bound to the concrete task and
/// input slice of a workload.
#[macro_export]
macro_rules! with_workload {
    ($w:expr, |$task:ident, $inputs:ident| $body:expr) => {
        match $w {
            $crate::workload::Workload::Seq($task, $inputs) => $body,
            $crate::workload::Workload::Detect($task, $inputs) => $body,
            $crate::workload::Workload::Entrel($task, $inputs) => $body,
            $crate::workload::Workload::Dep($task, $inputs) => $body,
        }
    };
}

fn data_err(e: L2sError) -> CliError {
    match e {
        L2sError::Config(m) => CliError::Usage(m),
        other => CliError::Data(other.to_string()),
    }
}

fn read_sentences(paths: &[PathBuf], dict: &mut LabelDict) -> Result<(Vec<Sentence>, usize), CliError> {
    let mut all = Vec::new();
    let mut split = 0;
    for (i, p) in paths.iter().enumerate() {
        let mut part = read_conll(p, None, dict).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        if i == 0 {
            split = part.len();
        }
        all.append(&mut part);
    }
    Ok((all, split))
}

fn check_known(dict: &LabelDict, known: Option<&LabelDict>) -> Result<(), CliError> {
    if let Some(k) = known {
        if dict.len() > k.len() {
            return Err(CliError::Model(format!(
                "corpus label {:?} is not in the model's label table ({} labels)",
                dict.name(k.len()).unwrap_or("?"),
                k.len()
            )));
        }
    }
    Ok(())
}

fn table_labels(table: &RelationConstraintTable) -> LabelDict {
    let entities = table.entity_types().labels().iter().map(|l| format!("entity:{l}"));
    let relations = table.relation_types().labels().iter().map(|l| format!("relation:{l}"));
    LabelDict::from_labels(entities.chain(relations))
}

/// Loads `paths` (concatenated) for the configured task. With `known`, the
/// corpus is read against the model's labels and must not add any.
pub fn load(opts: &TaskOpts, paths: &[PathBuf], known: Option<&LabelDict>) -> Result<Loaded, CliError> {
    let templates = TemplateSpec::parse(&opts.neighbors, &opts.affixes).map_err(data_err)?;
    match opts.task {
        TaskKind::Seq | TaskKind::Bio => {
            let mut dict = known.cloned().unwrap_or_default();
            let (sentences, split) = read_sentences(paths, &mut dict)?;
            check_known(&dict, known)?;
            if let Some(s) = sentences.first() {
                templates.validate(s.tokens[0].columns.len() - 1).map_err(data_err)?;
            }
            let config = SequenceTaskConfig {
                markov_order: opts.markov_order,
                templates,
                bits: opts.bits,
            };
            let task = if opts.task == TaskKind::Bio {
                SequenceTask::bio(config, dict.clone())
            } else {
                SequenceTask::new(config, dict.clone())
            }
            .map_err(data_err)?;
            Ok(Loaded {
                num_actions: dict.len(),
                labels: dict,
                workload: Workload::Seq(task, sentences),
                split,
            })
        }
        TaskKind::Detect => {
            let mut dict = known.cloned().unwrap_or_default();
            let (sentences, split) = read_sentences(paths, &mut dict)?;
            check_known(&dict, known)?;
            let inputs = sentences
                .into_iter()
                .map(|s| DetectionInput::from_sentence(s, &dict))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Data(e.to_string()))?;
            let max_label = dict.labels().iter().filter_map(|l| l.parse::<u32>().ok()).max().unwrap_or(1);
            let task = DetectionTask::new(templates, opts.bits, max_label, opts.false_negative_loss).map_err(data_err)?;
            Ok(Loaded {
                num_actions: max_label as usize,
                labels: dict,
                workload: Workload::Detect(task, inputs),
                split,
            })
        }
        TaskKind::Entrel => {
            let table = match &opts.relations {
                Some(p) => RelationConstraintTable::load(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
                None => RelationConstraintTable::default(),
            };
            let labels = table_labels(&table);
            if known.is_some_and(|k| k != &labels) {
                return Err(CliError::Model("the model was trained with a different relation table".into()));
            }
            let mut inputs = Vec::new();
            let mut split = 0;
            for (i, p) in paths.iter().enumerate() {
                let records = read_entrel(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                for r in records {
                    inputs.push(EntityRelationInput::new(r, &table).map_err(|e| CliError::Data(e.to_string()))?);
                }
                if i == 0 {
                    split = inputs.len();
                }
            }
            let num_actions = table.entity_types().len().max(table.relation_types().len());
            Ok(Loaded {
                workload: Workload::Entrel(EntityRelationTask { table, bits: opts.bits }, inputs),
                labels,
                num_actions,
                split,
            })
        }
        TaskKind::Dep => {
            let labels = LabelDict::from_labels(["shift", "right_arc", "left_arc"]);
            if known.is_some_and(|k| k != &labels) {
                return Err(CliError::Model("the model was not trained for dependency parsing".into()));
            }
            let mut inputs = Vec::new();
            let mut split = 0;
            for (i, p) in paths.iter().enumerate() {
                let (sentences, _) = read_sentences(std::slice::from_ref(p), &mut LabelDict::new())?;
                inputs.extend(dep_inputs(&sentences).map_err(data_err)?);
                if i == 0 {
                    split = inputs.len();
                }
            }
            let task = DepParserTask {
                bits: opts.bits,
                ..DepParserTask::default()
            };
            Ok(Loaded {
                workload: Workload::Dep(task, inputs),
                labels,
                num_actions: 3,
                split,
            })
        }
    }
}

fn blocks(text: &str) -> Vec<Vec<Vec<&str>>> {
    text.split("\n\n")
        .map(|b| b.lines().map(|l| l.split_whitespace().collect::<Vec<_>>()).filter(|r| !r.is_empty()).collect::<Vec<_>>())
        .filter(|b: &Vec<Vec<&str>>| !b.is_empty())
        .collect()
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, CliError> {
    s.parse()
        .map_err(|_| CliError::Data(format!("predictions block {line}: {s:?} is not a number")))
}

/// Reads a predictions file back into gold/predicted structures.
pub fn read_predictions(kind: TaskKind, path: &Path) -> Result<Scored, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let short = |b: usize| CliError::Data(format!("predictions block {b} has rows without gold and predicted columns"));
    match kind {
        TaskKind::Seq | TaskKind::Bio => {
            let (mut gold, mut pred) = (Vec::new(), Vec::new());
            for (b, block) in blocks(&text).iter().enumerate() {
                if block.iter().any(|r| r.len() < 2) {
                    return Err(short(b));
                }
                gold.push(block.iter().map(|r| r[r.len() - 2].to_string()).collect());
                pred.push(block.iter().map(|r| r[r.len() - 1].to_string()).collect());
            }
            Ok(Scored::Labels {
                bio: kind == TaskKind::Bio,
                gold,
                pred,
            })
        }
        TaskKind::Detect => {
            let (mut gold, mut pred) = (Vec::new(), Vec::new());
            for (b, block) in blocks(&text).iter().enumerate() {
                if block.iter().any(|r| r.len() < 2) {
                    return Err(short(b));
                }
                let mut g = 1;
                for r in block {
                    g = g.max(parse_num::<u32>(r[r.len() - 2], b)?);
                }
                gold.push(g);
                pred.push(parse_num(block[0][block[0].len() - 1], b)?);
            }
            Ok(Scored::Maxima { gold, pred })
        }
        TaskKind::Dep => {
            let (mut gold, mut pred) = (Vec::new(), Vec::new());
            for (b, block) in blocks(&text).iter().enumerate() {
                for r in block {
                    if r.len() < 2 {
                        return Err(short(b));
                    }
                    gold.push(parse_num(r[r.len() - 2], b)?);
                    pred.push(parse_num(r[r.len() - 1], b)?);
                }
            }
            Ok(Scored::Heads { gold, pred })
        }
        TaskKind::Entrel => {
            let mut scored = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let bad = |m: &str| CliError::Data(format!("{}:{}: {m}", path.display(), i + 1));
                let v: Value = serde_json::from_str(line).map_err(|e| bad(&e.to_string()))?;
                let rec: SentenceRecord = serde_json::from_value(v.clone()).map_err(|e| bad(&e.to_string()))?;
                let pe: Vec<String> = serde_json::from_value(v["predicted_entities"].clone())
                    .map_err(|_| bad("missing predicted_entities"))?;
                let pr: Vec<(usize, usize, String)> = serde_json::from_value(v["predicted_relations"].clone())
                    .map_err(|_| bad("missing predicted_relations"))?;
                scored.0.push(rec.entities.iter().map(|e| e.gold_type.clone()).collect());
                scored.1.push(pe);
                scored.2.push(gold_triples(&rec));
                scored.3.push(
                    pr.into_iter()
                        .map(|(arg1, arg2, kind)| RelationTriple { arg1, arg2, kind })
                        .collect(),
                );
            }
            Ok(Scored::Relations {
                gold_entities: scored.0,
                pred_entities: scored.1,
                gold: scored.2,
                pred: scored.3,
            })
        }
    }
}
