//! Tied randomness: every mixture coin is a pure function of
//! `(seed, example, pass, t, phase)`, so all deviations of one example that
//! reach the same time step see the same policy choice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Algorithm, RollinSource, RolloutSource, TrainerConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyChoice {
    Reference,
    Learned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Rollin,
    Rollout,
    Subsample,
}

/// Which structured example and pass a coin belongs to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExampleContext {
    pub example_id: u64,
    pub pass: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` keyed by the tuple.
pub fn tied_coin(seed: u64, ctx: ExampleContext, t: usize, phase: Phase) -> f64 {
    let key = [ctx.example_id, ctx.pass, t as u64, phase as u64]
        .iter()
        .fold(splitmix(seed), |h, &x| splitmix(h ^ x));
    ChaCha8Rng::seed_from_u64(key).random::<f64>()
}

/// Probability the interpolated (Searn/DAgger style) policy is the reference.
pub fn reference_probability(beta: f64, update_count: u64) -> f64 {
    (1.0 - beta).powf(update_count as f64)
}

/// Policy selector for a rollin step `t` or a rollout started at `t`.
pub fn choose_policy_tied(
    cfg: &TrainerConfig,
    phase: Phase,
    t: usize,
    ctx: ExampleContext,
    update_count: u64,
) -> PolicyChoice {
    let p_ref = match phase {
        Phase::Rollin => match cfg.rollin {
            RollinSource::Learned => return PolicyChoice::Learned,
            RollinSource::Mix => reference_probability(cfg.beta, update_count),
        },
        Phase::Rollout | Phase::Subsample => match cfg.rollout {
            RolloutSource::Reference => return PolicyChoice::Reference,
            RolloutSource::Learned | RolloutSource::None => return PolicyChoice::Learned,
            RolloutSource::Mix => match cfg.algorithm {
                Algorithm::Searn => reference_probability(cfg.beta, update_count),
                _ => cfg.rollout_mix_prob,
            },
        },
    };
    if tied_coin(cfg.seed, ctx, t, phase) < p_ref {
        PolicyChoice::Reference
    } else {
        PolicyChoice::Learned
    }
}

/// Whether deviation point `t0` is kept under the configured subsample rate.
pub fn keep_position(cfg: &TrainerConfig, ctx: ExampleContext, t0: usize) -> bool {
    cfg.subsample >= 1.0 || tied_coin(cfg.seed, ctx, t0, Phase::Subsample) < cfg.subsample
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_tuple_same_choice() {
        let mut cfg = TrainerConfig::default();
        cfg.rollout = RolloutSource::Mix;
        let ctx = ExampleContext { example_id: 4, pass: 1 };
        for t in 1..20 {
            let a = choose_policy_tied(&cfg, Phase::Rollout, t, ctx, 17);
            let b = choose_policy_tied(&cfg, Phase::Rollout, t, ctx, 17);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mixture_uses_both_policies() {
        let cfg = TrainerConfig::default();
        let ctx = ExampleContext::default();
        let refs = (1..200)
            .filter(|&t| choose_policy_tied(&cfg, Phase::Rollout, t, ctx, 0) == PolicyChoice::Reference)
            .count();
        assert!(refs > 60 && refs < 140, "{refs}");
    }

    #[test]
    fn interpolation_edges() {
        assert_eq!(reference_probability(1.0, 1), 0.0);
        assert_eq!(reference_probability(1.0, 0), 1.0);
        assert_eq!(reference_probability(0.3, 0), 1.0);
        let mut cfg = TrainerConfig::default();
        cfg.rollin = RollinSource::Mix;
        cfg.beta = 1.0;
        let ctx = ExampleContext::default();
        assert!((1..50).all(|t| choose_policy_tied(&cfg, Phase::Rollin, t, ctx, 0) == PolicyChoice::Reference));
        assert!((1..50).all(|t| choose_policy_tied(&cfg, Phase::Rollin, t, ctx, 3) == PolicyChoice::Learned));
    }

    #[test]
    fn coins_differ_across_examples() {
        let a: Vec<f64> = (0..8)
            .map(|e| tied_coin(1, ExampleContext { example_id: e, pass: 0 }, 3, Phase::Rollin))
            .collect();
        assert!(a.windows(2).all(|w| w[0] != w[1]));
        assert!(a.iter().all(|c| (0.0..1.0).contains(c)));
    }
}
