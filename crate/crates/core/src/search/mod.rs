//! The search engine: runs task programs as a rollin followed by one-step
//! deviation rollouts and turns the rollout losses into cost-sensitive
//! updates of the learned policy.

mod config;
mod counters;
mod explicit;
mod learn;
mod policy;
mod session;

pub use config::{Algorithm, RollinSource, RolloutSource, TrainerConfig, DEFAULT_INTERPOLATION};
pub use counters::Counters;
pub use explicit::{run_explicit_space, ExplicitSearchSpace, StateId, TablePolicy};
pub use learn::{learn_example, make_cost_vector, reference_decode, test_decode, Decoded, Task};
pub use policy::{
    choose_policy_tied, keep_position, reference_probability, tied_coin, ExampleContext, Phase,
    PolicyChoice,
};
pub use session::{PredictRequest, Session, SessionMode};
