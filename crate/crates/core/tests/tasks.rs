use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use l2s::cslearn::{ConstantPolicy, Learner, LinearCSModel};
use l2s::dataio::{read_conll, read_entrel, LabelDict, TemplateSpec};
use l2s::metrics::{extract_spans_bio, fix_malpositioned, uas};
use l2s::search::{reference_decode, test_decode, Algorithm, TrainerConfig};
use l2s::tasks::{
    bio_valid_labels, dep_inputs, find_valid_relations, BioScheme, BioTag, DepParserTask, DetectionInput,
    DetectionTask, EntityRelationInput, EntityRelationTask, RelationConstraintTable, SequenceTask,
    SequenceTaskConfig,
};
use l2s::trainer::train;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn ner_labels() -> LabelDict {
    LabelDict::from_labels(["O", "B-PER", "I-PER", "B-LOC", "B-ORG", "I-ORG", "B-MISC"])
}

fn random_model(bits: u8, k: usize, seed: u64) -> LinearCSModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = LinearCSModel::new(bits, k, 0.5).unwrap();
    for a in 0..k {
        for i in 0..1u32 << bits {
            model.set_weight(a, i, rng.random_range(-1.0..1.0));
        }
    }
    model
}

#[test]
fn bio_allowed_sets() {
    let labels = ner_labels();
    let scheme = BioScheme::new(&labels).unwrap();
    let id = |l: &str| labels.id(l).unwrap();
    let after_o = bio_valid_labels(&scheme, Some(id("O")));
    let names: Vec<&str> = after_o.iter().map(|&a| labels.name(a).unwrap()).collect();
    assert_eq!(names, ["O", "B-PER", "B-LOC", "B-ORG", "B-MISC"]);
    assert_eq!(bio_valid_labels(&scheme, None), after_o);
    let after_loc = bio_valid_labels(&scheme, Some(id("B-LOC")));
    assert!(!after_loc.contains(&id("I-PER")));
    assert!(bio_valid_labels(&scheme, Some(id("I-ORG"))).contains(&id("I-ORG")));
    assert!(BioScheme::new(&LabelDict::from_labels(["NN", "VB"])).is_err());
}

#[test]
fn sequence_conditions_on_previous_tag() {
    let task = SequenceTask::new(SequenceTaskConfig::default(), ner_labels()).unwrap();
    assert_eq!(task.condition_tags(5), vec![4]);
    assert_eq!(task.condition_tags(1), Vec::<u32>::new());
}

#[test]
fn bio_decodes_respect_the_constraint() {
    let mut labels = ner_labels();
    let corpus = read_conll(data("ner_fixture.conll"), None, &mut labels).unwrap();
    let task = SequenceTask::bio(SequenceTaskConfig { bits: 10, ..Default::default() }, labels.clone()).unwrap();
    for seed in 0..50 {
        let model = random_model(10, labels.len(), seed);
        for s in &corpus {
            let names: Vec<&str> = test_decode(&task, s, &model)
                .unwrap()
                .output
                .iter()
                .map(|&a| labels.name(a).unwrap())
                .collect();
            assert_eq!(fix_malpositioned(&names), names);
        }
    }
    let zero = LinearCSModel::new(10, labels.len(), 0.5).unwrap();
    for s in &corpus {
        let d = reference_decode(&task, s).unwrap();
        assert_eq!(d.output, s.gold_labels);
        assert!(test_decode(&task, s, &zero).unwrap().output.iter().all(|&a| a == 0));
    }
}

#[test]
fn entrel_shapes_and_constraints() {
    let table = RelationConstraintTable::load(data("relations.txt")).unwrap();
    let records = read_entrel(data("entrel_sample.jsonl")).unwrap();
    let task = EntityRelationTask {
        table: table.clone(),
        bits: 10,
    };
    let inputs: Vec<EntityRelationInput> = records
        .into_iter()
        .map(|r| EntityRelationInput::new(r, &table).unwrap())
        .collect();
    let first = reference_decode(&task, &inputs[0]).unwrap();
    assert_eq!(first.output.entity_types.len(), 3);
    assert_eq!(first.output.relations.len(), 3);
    for input in &inputs {
        assert_eq!(reference_decode(&task, input).unwrap().loss, 0.0);
    }

    let person = table.entity_types().id("Person").unwrap();
    let org = table.entity_types().id("Organization").unwrap();
    let work_for = table.relation_types().id("work_for").unwrap();
    assert_eq!(find_valid_relations(person, org, &table).unwrap(), vec![0, work_for]);
    assert!(find_valid_relations(99, org, &table).is_err());

    for seed in 0..100 {
        let model = random_model(10, task_actions(&table), seed);
        for input in &inputs {
            let out = test_decode(&task, input, &model).unwrap().output;
            for &(n, m, r) in &out.relations {
                let valid = find_valid_relations(out.entity_types[n], out.entity_types[m], &table).unwrap();
                assert!(valid.contains(&r));
            }
        }
    }
}

fn task_actions(table: &RelationConstraintTable) -> usize {
    table.entity_types().len().max(table.relation_types().len())
}

#[test]
fn detection_losses() {
    let mut labels = LabelDict::new();
    let corpus = l2s::dataio::read_conll_str("a 1\nb 2\nc 1\n", None, &mut labels).unwrap();
    let input = DetectionInput::from_sentence(corpus[0].clone(), &labels).unwrap();
    let task = DetectionTask::new(TemplateSpec::default(), 12, 2, 4.0).unwrap();
    let d = test_decode(&task, &input, &ConstantPolicy::new(0, 2)).unwrap();
    assert_eq!((d.output, d.loss), (Some(1), 4.0));
    let d = test_decode(&task, &input, &ConstantPolicy::new(1, 2)).unwrap();
    assert_eq!((d.output, d.loss), (Some(2), 0.0));
    let low = l2s::dataio::read_conll_str("a 1\nb 1\n", None, &mut labels).unwrap();
    let input = DetectionInput::from_sentence(low[0].clone(), &labels).unwrap();
    assert_eq!(test_decode(&task, &input, &ConstantPolicy::new(1, 2)).unwrap().loss, 1.0);
}

#[test]
fn span_extraction_round_trips() {
    let tags = ["B-PER", "I-ORG", "O", "I-LOC", "I-LOC", "B-LOC"];
    let spans = extract_spans_bio(&tags);
    let mut encoded = vec!["O".to_string(); tags.len()];
    for s in &spans {
        encoded[s.start] = format!("B-{}", s.kind);
        for slot in &mut encoded[s.start + 1..=s.end] {
            *slot = format!("I-{}", s.kind);
        }
    }
    assert_eq!(extract_spans_bio(&encoded), spans);
    assert!(matches!(BioTag::parse("I-LOC"), Some(BioTag::Inside(_))));
}

#[test]
fn parser_memorizes_toy_treebank() {
    let mut labels = LabelDict::new();
    let corpus = read_conll(data("toy_treebank.conll"), None, &mut labels).unwrap();
    let inputs = dep_inputs(&corpus).unwrap();
    assert_eq!(inputs.len(), 10);
    let task = DepParserTask::default();
    let mut model = LinearCSModel::new(18, 3, 0.5).unwrap();
    let cfg = TrainerConfig {
        passes: 20.0,
        ..TrainerConfig::for_algorithm(Algorithm::Dagger)
    };
    train(&task, &inputs, &mut model, &cfg, |_, _| {}).unwrap();
    assert!(model.update_count() > 0);
    let (mut pred, mut gold) = (Vec::new(), Vec::new());
    for s in &inputs {
        pred.extend(test_decode(&task, s, &model).unwrap().output);
        gold.extend(s.heads.iter().copied());
    }
    assert_eq!(uas(&pred, &gold).unwrap(), 1.0);
}
