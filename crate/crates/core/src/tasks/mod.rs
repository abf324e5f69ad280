//! Task programs written against the predict/loss interface.

mod bio;
mod depparse;
mod detect;
mod entrel;
mod sequence;

pub use bio::{bio_valid_labels, BioScheme, BioTag};
pub use depparse::{
    dep_gold_action, dep_inputs, dep_trans, dep_valid_actions, dynamic_gold_action,
    dynamic_oracle_costs, is_projective_tree, run_dep_parser, DepParserTask, DepSentence,
    ExhaustiveOracle, OracleKind, ParserState, Transition, ROOT,
};
pub use detect::{run_detection, DetectionInput, DetectionTask};
pub use entrel::{
    find_valid_relations, relation_tag, run_entity_relation, EntityRelationInput,
    EntityRelationOutput, EntityRelationTask, RelationConstraintTable, DEFAULT_RELATION_TABLE,
    NONE_RELATION,
};
pub use sequence::{run_sequence, SequenceTask, SequenceTaskConfig, PREV_NAMESPACE};
