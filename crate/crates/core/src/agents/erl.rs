//! Q-table learning guided by a value network.
//!
//! Per step: ε-greedy choice on the table; the eligibility trace of the
//! network accumulates `∂V/∂w` on greedy choices and is cleared otherwise;
//! the network takes a TD(λ) step; the table update receives the shaping
//! bonus `F = γ Φ(s') − Φ(s)` where `Φ` is the network value expressed in
//! reward units.

use rand::Rng;

use super::{continuation_value, q_update_toward, select_action, shaping_term, AgentConfig, EpisodeLog, EpisodeTally, QTable};
use crate::env::SpinEnv;
use crate::error::Result;
use crate::valuenet::{
    features, td_update_in_place, trace_accumulate_in_place, v_gradient, v_value,
    EligibilityTrace, NetworkParameters,
};

/// One episode of the enhanced agent. The trace is cleared at the start of
/// the episode. `episode` is 1-based.
pub fn run_episode_erl<R: Rng + ?Sized>(
    env: &mut SpinEnv,
    q: &mut QTable,
    params: &mut NetworkParameters,
    trace: &mut EligibilityTrace,
    cfg: &AgentConfig,
    episode: usize,
    rng: &mut R,
) -> Result<EpisodeLog> {
    let learner = &cfg.learner;
    let decay = learner.gamma * learner.lambda;
    let to_reward_units = 1.0 / learner.reward_scale;
    let epsilon = cfg.epsilon_at(episode.saturating_sub(1));

    trace.0.set_zero();
    let (mut state, mut s) = env.reset_with(rng);
    let mut tally = EpisodeTally::new();
    loop {
        let x = features(&state);
        let (a, greedy) = select_action(q.row(s), epsilon, rng);
        let v_s = if greedy {
            let (v, g) = v_gradient(params, &x);
            trace_accumulate_in_place(trace, &g, decay)?;
            v
        } else {
            trace.0.set_zero();
            v_value(params, &x)
        };

        let out = env.step(a)?;
        let v_next = v_value(params, &features(&out.next_state));
        if !cfg.freeze_network {
            td_update_in_place(params, trace, out.reward * learner.reward_scale, v_s, v_next, learner)?;
        }
        let f = shaping_term(v_s * to_reward_units, v_next * to_reward_units, cfg.gamma);
        let reached = out.fidelity >= env.config().success_fidelity;
        let next = continuation_value(q, out.next_index, reached, out.reward, cfg.terminal, cfg.gamma);
        q_update_toward(q, s, a, out.reward, f, next, cfg.alpha, cfg.gamma);

        tally.record(out.fidelity, out.reward);
        state = out.next_state;
        s = out.next_index;
        if out.done {
            break;
        }
    }
    Ok(tally.finish(episode, env.config().success_fidelity))
}
