//! Corpus readers, feature templates and the hashed feature space.

mod conll;
mod hashing;
mod records;
mod templates;

pub use conll::{read_conll, read_conll_str, write_conll, LabelDict, Sentence, Token};
pub(crate) use hashing::check_bits;
pub use hashing::{fnv1a64, hash_feature, FeatureVector, Namespace, NamespaceGroup, DEFAULT_BITS};
pub use records::{read_entrel, read_entrel_str, EntityRecord, RelationRecord, SentenceRecord};
pub use templates::{apply_templates, AffixSide, AffixSpec, NeighborSpec, TemplateSpec};
