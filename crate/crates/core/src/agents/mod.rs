//! Learning agents for the three-switch control task.
//!
//! - [`tql`]: tabular Q-learning.
//! - [`erl`]: Q-table guided by a value network through a potential-based
//!   shaping term, with eligibility-trace network updates.
//! - [`dql`]: deep Q-learning from a replay ring buffer.
//! - [`pg`]: episodic softmax policy gradient.
//! - [`oracle`]: exhaustive/beam search over control sequences.

pub mod dql;
pub mod erl;
pub mod oracle;
pub mod pg;
pub mod tql;

use rand::Rng;

use crate::env::{ActionId, StateIndex, NUM_ACTIONS};
use crate::error::{Error, Result};
use crate::valuenet::{argmax, LearnerConfig, NetworkSpec};

pub use dql::{run_episode_dql, ReplayBuffer, TransitionRecord};
pub use erl::run_episode_erl;
pub use oracle::{beam_search, brute_force_optimal};
pub use pg::{run_episode_pg, softmax};
pub use tql::run_episode_tql;

/// Dense `num_states × 3` table of action values.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize) -> Self {
        Self {
            num_states,
            values: vec![0.0; num_states * NUM_ACTIONS],
        }
    }

    /// Entries drawn uniformly from `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(num_states: usize, rng: &mut R) -> Self {
        Self {
            num_states,
            values: (0..num_states * NUM_ACTIONS).map(|_| rng.gen()).collect(),
        }
    }

    pub fn from_values(num_states: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_states * NUM_ACTIONS {
            return Err(Error::invalid(format!(
                "Q-table needs {} values, got {}",
                num_states * NUM_ACTIONS,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Q-table entries must be finite"));
        }
        Ok(Self { num_states, values })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, s: StateIndex) -> &[f64] {
        &self.values[s.0 * NUM_ACTIONS..(s.0 + 1) * NUM_ACTIONS]
    }

    pub fn get(&self, s: StateIndex, a: ActionId) -> f64 {
        self.values[s.0 * NUM_ACTIONS + a.index()]
    }

    pub fn set(&mut self, s: StateIndex, a: ActionId, v: f64) {
        self.values[s.0 * NUM_ACTIONS + a.index()] = v;
    }

    pub fn max_row(&self, s: StateIndex) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn greedy(&self, s: StateIndex) -> ActionId {
        ActionId::ALL[argmax(self.row(s))]
    }
}

/// Hyper-parameters shared by all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    /// Q-table learning rate α.
    pub alpha: f64,
    /// Discount γ of the Q-table target and of the shaping term.
    pub gamma: f64,
    /// Exploration probability ε₀: an action is greedy when the uniform
    /// draw satisfies `ε ≤ 1 − ε₀`.
    pub epsilon0: f64,
    /// When set, ε₀ is annealed linearly to this value over `episodes`.
    pub epsilon_final: Option<f64>,
    pub learner: LearnerConfig,
    pub network: NetworkSpec,
    pub episodes: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Initialize the Q-table uniformly in `[0, 1)` rather than zero.
    pub random_q_init: bool,
    /// Keep the enhanced agent's network fixed (no TD updates).
    pub freeze_network: bool,
    pub terminal: TerminalRule,
}

/// Value bootstrapped from the state that ends an episode by reaching the
/// success threshold. Hitting the step cap always bootstraps from the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalRule {
    /// `max Q(s', ·)` as for any other transition.
    Bootstrap,
    /// The target is held: the last reward repeats forever, `r / (1 − γ)`.
    Absorbing,
    /// Zero continuation value.
    Zero,
}

impl TerminalRule {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bootstrap" => Some(Self::Bootstrap),
            "absorbing" => Some(Self::Absorbing),
            "zero" => Some(Self::Zero),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Bootstrap => "bootstrap",
            Self::Absorbing => "absorbing",
            Self::Zero => "zero",
        }
    }
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.99,
            epsilon0: 0.05,
            epsilon_final: None,
            learner: LearnerConfig::default(),
            network: NetworkSpec::default(),
            episodes: 500,
            replay_capacity: 2000,
            batch_size: 32,
            random_q_init: false,
            freeze_network: false,
            terminal: TerminalRule::Absorbing,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.epsilon0) {
            return Err(Error::invalid(format!("epsilon0 {} outside [0, 1]", self.epsilon0)));
        }
        if let Some(e) = self.epsilon_final {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::invalid(format!("epsilon_final {e} outside [0, 1]")));
            }
        }
        if self.episodes == 0 || self.replay_capacity == 0 || self.batch_size == 0 {
            return Err(Error::invalid(
                "episodes, replay_capacity and batch_size must be positive",
            ));
        }
        self.learner.validate()?;
        self.network.validate()
    }

    /// Exploration probability during (0-based) episode `k`.
    pub fn epsilon_at(&self, k: usize) -> f64 {
        match self.epsilon_final {
            None => self.epsilon0,
            Some(end) => {
                let span = self.episodes.saturating_sub(1).max(1) as f64;
                let t = (k as f64 / span).min(1.0);
                self.epsilon0 + (end - self.epsilon0) * t
            }
        }
    }
}

/// Per-episode training record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLog {
    /// 1-based episode number.
    pub episode: usize,
    pub steps: usize,
    pub final_fidelity: f64,
    pub best_fidelity: f64,
    pub cumulative_reward: f64,
    pub success: bool,
}

/// Running statistics of one episode.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EpisodeTally {
    steps: usize,
    last: f64,
    best: f64,
    reward: f64,
}

impl EpisodeTally {
    pub(crate) fn new() -> Self {
        Self {
            steps: 0,
            last: 0.0,
            best: 0.0,
            reward: 0.0,
        }
    }

    pub(crate) fn record(&mut self, fidelity: f64, reward: f64) {
        self.steps += 1;
        self.last = fidelity;
        self.best = self.best.max(fidelity);
        self.reward += reward;
    }

    pub(crate) fn finish(self, episode: usize, success_fidelity: f64) -> EpisodeLog {
        EpisodeLog {
            episode,
            steps: self.steps,
            final_fidelity: self.last,
            best_fidelity: self.best,
            cumulative_reward: self.reward,
            success: self.best >= success_fidelity,
        }
    }
}

/// ε-greedy choice over a row of action values.
///
/// The uniform draw happens first; above `1 − ε₀` a uniformly random action
/// is taken instead of the argmax. `greedy` reports whether the chosen
/// action coincides with the argmax (ties → lowest id).
pub fn select_action<R: Rng + ?Sized>(q_row: &[f64], epsilon0: f64, rng: &mut R) -> (ActionId, bool) {
    let best = argmax(q_row);
    let draw: f64 = rng.gen();
    if draw <= 1.0 - epsilon0 {
        (ActionId::ALL[best], true)
    } else {
        let a = rng.gen_range(0..NUM_ACTIONS);
        (ActionId::ALL[a], a == best)
    }
}

/// `Q(s,a) += α (r + γ max Q(s',·) − Q(s,a))`.
pub fn tabular_q_update(
    q: &mut QTable,
    s: StateIndex,
    a: ActionId,
    r: f64,
    s_next: StateIndex,
    alpha: f64,
    gamma: f64,
) {
    enhanced_q_update(q, s, a, r, s_next, 0.0, alpha, gamma);
}

/// Continuation value `max Q(s', ·)`, replaced according to `rule` when the
/// transition reached the success threshold.
pub fn continuation_value(q: &QTable, s_next: StateIndex, reached: bool, r: f64, rule: TerminalRule, gamma: f64) -> f64 {
    match (reached, rule) {
        (false, _) | (true, TerminalRule::Bootstrap) => q.max_row(s_next),
        (true, TerminalRule::Absorbing) => {
            if gamma < 1.0 {
                r / (1.0 - gamma)
            } else {
                q.max_row(s_next)
            }
        }
        (true, TerminalRule::Zero) => 0.0,
    }
}

/// `Q(s,a) += α (r + F + γ next − Q(s,a))` with an explicit continuation value.
#[allow(clippy::too_many_arguments)]
pub fn q_update_toward(q: &mut QTable, s: StateIndex, a: ActionId, r: f64, f: f64, next: f64, alpha: f64, gamma: f64) {
    let current = q.get(s, a);
    let target = r + f + gamma * next;
    q.set(s, a, current + alpha * (target - current));
}

/// Potential difference `γ V(s') − V(s)`.
pub fn shaping_term(v_s: f64, v_s_next: f64, gamma: f64) -> f64 {
    gamma * v_s_next - v_s
}

/// `Q(s,a) += α (r + F + γ max Q(s',·) − Q(s,a))`.
#[allow(clippy::too_many_arguments)]
pub fn enhanced_q_update(
    q: &mut QTable,
    s: StateIndex,
    a: ActionId,
    r: f64,
    s_next: StateIndex,
    f: f64,
    alpha: f64,
    gamma: f64,
) {
    q_update_toward(q, s, a, r, f, q.max_row(s_next), alpha, gamma);
}

/// Bound on `|Q|` implied by rewards up to `r_max` and shaping up to `f_max`.
pub fn q_value_bound(r_max: f64, f_max: f64, gamma: f64) -> f64 {
    (r_max + f_max) / (1.0 - gamma)
}
