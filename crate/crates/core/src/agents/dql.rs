//! Deep Q-learning baseline: an MLP over Bloch features trained from a
//! uniform-sampling replay ring buffer. The bootstrap target uses the
//! online network itself.

use rand::Rng;

use super::{select_action, AgentConfig, EpisodeLog, EpisodeTally, TerminalRule};
use crate::env::{ActionId, SpinEnv};
use crate::error::Result;
use crate::valuenet::{backward, features, forward, forward_cached, NetworkParameters, FEATURE_DIM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub state: [f64; FEATURE_DIM],
    pub action: ActionId,
    pub reward: f64,
    pub next_state: [f64; FEATURE_DIM],
    /// The transition reached the success threshold. Step-cap endings are not
    /// terminal and bootstrap as usual.
    pub done: bool,
}

/// Fixed-capacity ring buffer; once full, each push overwrites the oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<TransitionRecord>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity),
            capacity,
            next: 0,
        }
    }

    pub fn push(&mut self, t: TransitionRecord) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Uniform sample with replacement.
    pub fn sample<'a, R: Rng + ?Sized>(&'a self, n: usize, rng: &mut R) -> Vec<&'a TransitionRecord> {
        (0..n)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect()
    }
}

/// Regression target `r + γ max_a' Q(s', a')`, with the continuation of
/// terminal transitions replaced according to `rule`.
pub fn dqn_target(params: &NetworkParameters, t: &TransitionRecord, gamma: f64, rule: TerminalRule) -> f64 {
    let next = match (t.done, rule) {
        (true, TerminalRule::Zero) => 0.0,
        (true, TerminalRule::Absorbing) if gamma < 1.0 => t.reward / (1.0 - gamma),
        _ => forward(params, &t.next_state)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max),
    };
    t.reward + gamma * next
}

/// One SGD step on a minibatch. Returns `false` during warm-up, when the
/// buffer holds fewer transitions than the batch size.
pub fn train_minibatch<R: Rng + ?Sized>(
    params: &mut NetworkParameters,
    replay: &ReplayBuffer,
    cfg: &AgentConfig,
    rng: &mut R,
) -> bool {
    if replay.len() < cfg.batch_size {
        return false;
    }
    let batch = replay.sample(cfg.batch_size, rng);
    let mut grad = params.tensors.zeros_like();
    for t in &batch {
        let target = dqn_target(params, t, cfg.learner.gamma, cfg.terminal);
        let cache = forward_cached(params, &t.state);
        let mut err = cache.output[t.action.index()] - target;
        if let Some(c) = cfg.learner.td_clip {
            err = err.clamp(-c, c);
        }
        let mut d = vec![0.0; cache.output.len()];
        d[t.action.index()] = err;
        grad.add_scaled(&backward(params, &cache, &d), 1.0);
    }
    params
        .tensors
        .add_scaled(&grad, -cfg.learner.beta / batch.len() as f64);
    true
}

/// One training episode of the deep Q baseline. `episode` is 1-based.
pub fn run_episode_dql<R: Rng + ?Sized>(
    env: &mut SpinEnv,
    replay: &mut ReplayBuffer,
    params: &mut NetworkParameters,
    cfg: &AgentConfig,
    episode: usize,
    rng: &mut R,
) -> Result<EpisodeLog> {
    let epsilon = cfg.epsilon_at(episode.saturating_sub(1));
    let (mut state, _) = env.reset_with(rng);
    let mut tally = EpisodeTally::new();
    loop {
        let x = features(&state);
        let q = forward(params, &x);
        let (a, _) = select_action(&q, epsilon, rng);
        let out = env.step(a)?;
        replay.push(TransitionRecord {
            state: x,
            action: a,
            reward: out.reward * cfg.learner.reward_scale,
            next_state: features(&out.next_state),
            done: out.fidelity >= env.config().success_fidelity,
        });
        train_minibatch(params, replay, cfg, rng);
        tally.record(out.fidelity, out.reward);
        state = out.next_state;
        if out.done {
            break;
        }
    }
    Ok(tally.finish(episode, env.config().success_fidelity))
}
