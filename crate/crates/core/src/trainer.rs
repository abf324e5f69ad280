//! Multi-pass training over a corpus.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cslearn::Learner;
use crate::error::Result;
use crate::search::{learn_example, Counters, ExampleContext, Task, TrainerConfig};

/// One epoch of the schedule: its pass index and t0 keep rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Epoch {
    pub pass: u64,
    pub subsample: f64,
}

/// Epochs run for `cfg.passes`: whole passes at the configured subsample
/// rate, then one more pass whose positions are subsampled by the
/// fractional remainder. Fewer than one pass means a single subsampled pass.
pub fn epoch_schedule(cfg: &TrainerConfig) -> Vec<Epoch> {
    let whole = cfg.passes.floor() as u64;
    let frac = cfg.passes - whole as f64;
    let mut epochs: Vec<Epoch> = (0..whole)
        .map(|pass| Epoch {
            pass,
            subsample: cfg.subsample,
        })
        .collect();
    if frac > 1e-12 {
        epochs.push(Epoch {
            pass: whole,
            subsample: cfg.subsample * frac,
        });
    }
    epochs
}

/// Corpus order for `pass`, a seeded shuffle of `0..n`.
pub fn pass_order(seed: u64, pass: u64, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let key = seed ^ pass.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(key));
    order
}

/// Trains on `inputs` for the configured number of passes. `after_pass` is
/// called with the pass index and the counters of that pass.
pub fn train<T, L, F>(
    task: &T,
    inputs: &[T::Input],
    learner: &mut L,
    cfg: &TrainerConfig,
    mut after_pass: F,
) -> Result<Counters>
where
    T: Task + ?Sized,
    L: Learner,
    F: FnMut(u64, &Counters),
{
    cfg.validate()?;
    let mut total = Counters::default();
    for epoch in epoch_schedule(cfg) {
        let epoch_cfg = TrainerConfig {
            subsample: epoch.subsample,
            ..cfg.clone()
        };
        let mut pass_counters = Counters::default();
        for i in pass_order(cfg.seed, epoch.pass, inputs.len()) {
            let ctx = ExampleContext {
                example_id: i as u64,
                pass: epoch.pass,
            };
            pass_counters += learn_example(task, &inputs[i], learner, &epoch_cfg, ctx)?;
        }
        after_pass(epoch.pass, &pass_counters);
        total += pass_counters;
    }
    Ok(total)
}
