//! Decoding many examples against one read-only model.
//!
//! With the `parallel` feature (on by default) examples are spread over the
//! rayon pool, each with its own session. Without it, or when
//! [`Parallelism::Sequential`] is asked for, they run in corpus order. Both
//! paths produce identical results.

use crate::cslearn::Learner;
use crate::error::Result;
use crate::search::{test_decode, Decoded, Task};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    #[default]
    Sequential,
    Concurrent,
}

pub fn decode_sequential<T, L>(task: &T, inputs: &[T::Input], learner: &L) -> Result<Vec<Decoded<T::Output>>>
where
    T: Task + ?Sized,
    L: Learner,
{
    inputs.iter().map(|x| test_decode(task, x, learner)).collect()
}

#[cfg(feature = "parallel")]
pub fn decode_parallel<T, L>(task: &T, inputs: &[T::Input], learner: &L) -> Result<Vec<Decoded<T::Output>>>
where
    T: Task + Sync + ?Sized,
    T::Input: Sync,
    T::Output: Send,
    L: Learner + Sync,
{
    use rayon::prelude::*;
    inputs.par_iter().map(|x| test_decode(task, x, learner)).collect()
}

/// Decodes `inputs`, concurrently when requested and compiled in.
pub fn decode_batch<T, L>(
    task: &T,
    inputs: &[T::Input],
    learner: &L,
    mode: Parallelism,
) -> Result<Vec<Decoded<T::Output>>>
where
    T: Task + Sync + ?Sized,
    T::Input: Sync,
    T::Output: Send,
    L: Learner + Sync,
{
    match mode {
        #[cfg(feature = "parallel")]
        Parallelism::Concurrent => decode_parallel(task, inputs, learner),
        _ => decode_sequential(task, inputs, learner),
    }
}
