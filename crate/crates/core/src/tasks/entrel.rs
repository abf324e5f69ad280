use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use crate::cslearn::Action;
use crate::dataio::{FeatureVector, LabelDict, SentenceRecord};
use crate::error::{L2sError, Result};
use crate::search::{PredictRequest, Session, Task};

pub const NONE_RELATION: &str = "none";

/// Text form of the built-in table, one `relation arg1_type arg2_type` per
/// line. `none` lines only declare entity types.
pub const DEFAULT_RELATION_TABLE: &str = "\
work_for Person Organization
live_in Person Location
org_based_in Organization Location
located_in Location Location
kill Person Person
none Other Other
";

/// Which relation types may hold between two typed arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationConstraintTable {
    entity_types: LabelDict,
    relation_types: LabelDict,
    valid: HashMap<(Action, Action), BTreeSet<Action>>,
}

impl Default for RelationConstraintTable {
    fn default() -> Self {
        RelationConstraintTable::parse(DEFAULT_RELATION_TABLE).expect("default table parses")
    }
}

impl RelationConstraintTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = RelationConstraintTable {
            entity_types: LabelDict::new(),
            relation_types: LabelDict::from_labels([NONE_RELATION]),
            valid: HashMap::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [rel, a1, a2] = fields[..] else {
                return Err(L2sError::Parse {
                    line: i + 1,
                    msg: "expected `relation arg1_type arg2_type`".into(),
                });
            };
            let t1 = table.entity_types.get_or_insert(a1);
            let t2 = table.entity_types.get_or_insert(a2);
            let r = table.relation_types.get_or_insert(rel);
            if r != 0 {
                table.valid.entry((t1, t2)).or_default().insert(r);
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn entity_types(&self) -> &LabelDict {
        &self.entity_types
    }

    pub fn relation_types(&self) -> &LabelDict {
        &self.relation_types
    }
}

/// Relations allowed between entities typed `t1` and `t2`, always including
/// `none` (id 0). Unknown entity types are a configuration error.
pub fn find_valid_relations(t1: Action, t2: Action, table: &RelationConstraintTable) -> Result<Vec<Action>> {
    let n = table.entity_types.len();
    if t1 >= n || t2 >= n {
        return Err(L2sError::config(format!(
            "no constraint entry for entity type pair ({t1}, {t2})"
        )));
    }
    let mut out = vec![0];
    if let Some(set) = table.valid.get(&(t1, t2)) {
        out.extend(set.iter().copied());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntityRelationOutput {
    pub entity_types: Vec<Action>,
    /// `(n, m, relation)` for every entity pair `n < m`, including `none`.
    pub relations: Vec<(usize, usize, Action)>,
}

/// Types every entity, then labels every ordered pair with a relation
/// consistent with the predicted types.
#[derive(Clone, Debug)]
pub struct EntityRelationTask {
    pub table: RelationConstraintTable,
    pub bits: u8,
}

/// Gold entity and relation ids of one record under `table`.
#[derive(Clone, Debug)]
pub struct EntityRelationInput {
    pub record: SentenceRecord,
    pub gold_entities: Vec<Action>,
    /// Indexed by pair order `(0,1), (0,2), ..., (K-2,K-1)`.
    pub gold_relations: Vec<Action>,
}

impl EntityRelationInput {
    pub fn new(record: SentenceRecord, table: &RelationConstraintTable) -> Result<Self> {
        let gold_entities = record
            .entities
            .iter()
            .map(|e| {
                table.entity_types.id(&e.gold_type).ok_or_else(|| {
                    L2sError::config(format!("entity type {:?} missing from the constraint table", e.gold_type))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let k = record.entities.len();
        let mut gold_relations = Vec::with_capacity(k * k.saturating_sub(1) / 2);
        for n in 0..k {
            for m in n + 1..k {
                let rel = record.gold_relation(n, m).unwrap_or(NONE_RELATION);
                gold_relations.push(table.relation_types.id(rel).ok_or_else(|| {
                    L2sError::config(format!("relation type {rel:?} missing from the constraint table"))
                })?);
            }
        }
        Ok(EntityRelationInput {
            record,
            gold_entities,
            gold_relations,
        })
    }
}

fn entity_features(rec: &SentenceRecord, n: usize, bits: u8) -> FeatureVector {
    let mut fv = FeatureVector::new(bits);
    let text = rec.entity_text(n);
    fv.add("e", &text.to_lowercase());
    let [start, end] = rec.entities[n].span;
    for i in start..=end {
        if let Some(tok) = rec.tokens.get(i) {
            fv.add("w", &tok.to_lowercase());
            let chars: Vec<char> = tok.chars().collect();
            let suffix: String = chars[chars.len().saturating_sub(3)..].iter().collect();
            fv.add("suf", &suffix);
            if chars.first().is_some_and(|c| c.is_uppercase()) {
                fv.add("shape", "cap");
            }
        }
    }
    for (off, ns) in [(-1i64, "l"), (1, "r")] {
        let pos = if off < 0 { start as i64 - 1 } else { end as i64 + 1 };
        let tok = usize::try_from(pos)
            .ok()
            .and_then(|p| rec.tokens.get(p))
            .map_or("<b>", String::as_str);
        fv.add(ns, &tok.to_lowercase());
    }
    fv.add("const", "bias");
    fv
}

fn relation_features(
    rec: &SentenceRecord,
    n: usize,
    m: usize,
    types: (&str, &str),
    bits: u8,
) -> FeatureVector {
    let mut fv = FeatureVector::new(bits);
    fv.add("types", &format!("{}|{}", types.0, types.1));
    let (a_end, b_start) = (rec.entities[n].span[1], rec.entities[m].span[0]);
    let between: Vec<&str> = if b_start > a_end + 1 && b_start <= rec.tokens.len() {
        rec.tokens[a_end + 1..b_start].iter().map(String::as_str).collect()
    } else {
        Vec::new()
    };
    for w in &between {
        fv.add("bw", &w.to_lowercase());
        fv.add("tbw", &format!("{}|{}|{}", types.0, types.1, w.to_lowercase()));
    }
    let dist = b_start.saturating_sub(a_end);
    let bucket = match dist {
        0..=1 => "adj",
        2..=4 => "near",
        _ => "far",
    };
    fv.add("dist", bucket);
    fv.add("pair", &format!("{}|{}", rec.entity_text(n).to_lowercase(), rec.entity_text(m).to_lowercase()));
    fv.add("const", "bias");
    fv
}

/// Relation tag for the pair `(n, m)` of 1-based entity indices.
pub fn relation_tag(k: usize, n: usize, m: usize) -> u32 {
    (k * (n + 1) + m) as u32
}

pub fn run_entity_relation(
    task: &EntityRelationTask,
    session: &mut Session<'_>,
    input: &EntityRelationInput,
) -> Result<EntityRelationOutput> {
    let rec = &input.record;
    let k = rec.entities.len();
    let entity_allowed: Vec<Action> = (0..task.table.entity_types.len()).collect();
    let mut types = Vec::with_capacity(k);
    for n in 0..k {
        let gold = input.gold_entities[n];
        let req = PredictRequest::new(entity_features(rec, n, task.bits), gold, n as u32 + 1)
            .allowed(entity_allowed.clone());
        let pred = session.predict(req)?;
        session.declare_loss(if pred == gold { 0.0 } else { 1.0 })?;
        types.push(pred);
    }

    let mut relations = Vec::with_capacity(input.gold_relations.len());
    let mut pair = 0;
    for n in 0..k {
        for m in n + 1..k {
            let gold = input.gold_relations[pair];
            pair += 1;
            let valid = find_valid_relations(types[n], types[m], &task.table)?;
            let names = (
                task.table.entity_types.name(types[n]).unwrap_or("?"),
                task.table.entity_types.name(types[m]).unwrap_or("?"),
            );
            let req = PredictRequest::new(relation_features(rec, n, m, names, task.bits), gold, relation_tag(k, n + 1, m + 1))
                .condition_on(vec![n as u32 + 1, m as u32 + 1])
                .allowed(valid);
            let pred = session.predict(req)?;
            session.declare_loss(if pred == gold { 0.0 } else { 1.0 })?;
            relations.push((n, m, pred));
        }
    }
    Ok(EntityRelationOutput {
        entity_types: types,
        relations,
    })
}

impl Task for EntityRelationTask {
    type Input = EntityRelationInput;
    type Output = EntityRelationOutput;

    fn num_actions(&self) -> usize {
        self.table.entity_types.len().max(self.table.relation_types.len())
    }

    fn history_independent(&self) -> bool {
        true
    }

    fn run(&self, session: &mut Session<'_>, input: &EntityRelationInput) -> Result<EntityRelationOutput> {
        run_entity_relation(self, session, input)
    }
}
