//! Episodic softmax policy gradient with a mean-return baseline.

use rand::Rng;

use super::{AgentConfig, EpisodeLog, EpisodeTally};
use crate::env::{ActionId, SpinEnv};
use crate::error::Result;
use crate::valuenet::{backward, features, forward_cached, Gradient, NetworkParameters, FEATURE_DIM};

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Draws an index from a probability vector.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Discounted returns `G_t = Σ_k γ^k r_{t+k}`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (o, r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *o = acc;
    }
    out
}

/// Score-function gradient `Σ_t (G_t − b) ∇ log π(a_t | s_t)` averaged over
/// the episode, with `b` the mean return.
pub fn policy_gradient(
    params: &NetworkParameters,
    states: &[[f64; FEATURE_DIM]],
    actions: &[ActionId],
    returns: &[f64],
) -> Gradient {
    let mut grad = params.tensors.zeros_like();
    if states.is_empty() {
        return grad;
    }
    let baseline = returns.iter().sum::<f64>() / returns.len() as f64;
    for ((x, a), g) in states.iter().zip(actions).zip(returns) {
        let advantage = g - baseline;
        if advantage == 0.0 {
            continue;
        }
        let cache = forward_cached(params, x);
        let probs = softmax(&cache.output);
        let d: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(i, p)| advantage * ((i == a.index()) as u8 as f64 - p))
            .collect();
        grad.add_scaled(&backward(params, &cache, &d), 1.0);
    }
    grad.scale(1.0 / states.len() as f64);
    grad
}

/// One episode of sampling from the softmax policy followed by a single
/// gradient-ascent step. `episode` is 1-based.
pub fn run_episode_pg<R: Rng + ?Sized>(
    env: &mut SpinEnv,
    params: &mut NetworkParameters,
    cfg: &AgentConfig,
    episode: usize,
    rng: &mut R,
) -> Result<EpisodeLog> {
    let (mut state, _) = env.reset_with(rng);
    let mut tally = EpisodeTally::new();
    let (mut xs, mut acts, mut rewards) = (Vec::new(), Vec::new(), Vec::new());
    loop {
        let x = features(&state);
        let probs = softmax(&forward_cached(params, &x).output);
        let a = ActionId::ALL[sample_categorical(&probs, rng)];
        let out = env.step(a)?;
        xs.push(x);
        acts.push(a);
        rewards.push(out.reward * cfg.learner.reward_scale);
        tally.record(out.fidelity, out.reward);
        state = out.next_state;
        if out.done {
            break;
        }
    }
    let returns = discounted_returns(&rewards, cfg.gamma);
    let grad = policy_gradient(params, &xs, &acts, &returns);
    params.tensors.add_scaled(&grad, cfg.learner.beta);
    Ok(tally.finish(episode, env.config().success_fidelity))
}
