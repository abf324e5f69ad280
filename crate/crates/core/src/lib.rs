//! Learning to search: structured prediction by running an ordinary task
//! program many times under a search session, turning one-step deviations
//! into cost-sensitive updates of a hashed linear policy.
//!
//! ```
//! use l2s::dataio::{read_conll_str, LabelDict};
//! use l2s::cslearn::LinearCSModel;
//! use l2s::search::test_decode;
//! use l2s::tasks::{SequenceTask, SequenceTaskConfig};
//!
//! let mut labels = LabelDict::new();
//! let corpus = read_conll_str("the D\ndog N\n", None, &mut labels).unwrap();
//! let task = SequenceTask::new(SequenceTaskConfig::default(), labels.clone()).unwrap();
//! let model = LinearCSModel::new(18, labels.len(), 0.5).unwrap();
//! let decoded = test_decode(&task, &corpus[0], &model).unwrap();
//! assert_eq!(decoded.output, vec![0, 0]);
//! ```

pub mod batch;
pub mod cslearn;
pub mod dataio;
mod error;
pub mod metrics;
pub mod search;
pub mod synth;
pub mod tasks;
pub mod trainer;

pub use error::{L2sError, Result};
