use rand::Rng;

use super::{continuation_value, q_update_toward, select_action, AgentConfig, EpisodeLog, EpisodeTally, QTable};
use crate::env::SpinEnv;
use crate::error::Result;

/// One episode of tabular Q-learning. `episode` is 1-based.
pub fn run_episode_tql<R: Rng + ?Sized>(
    env: &mut SpinEnv,
    q: &mut QTable,
    cfg: &AgentConfig,
    episode: usize,
    rng: &mut R,
) -> Result<EpisodeLog> {
    let epsilon = cfg.epsilon_at(episode.saturating_sub(1));
    let (_, mut s) = env.reset_with(rng);
    let mut tally = EpisodeTally::new();
    loop {
        let (a, _) = select_action(q.row(s), epsilon, rng);
        let out = env.step(a)?;
        let reached = out.fidelity >= env.config().success_fidelity;
        let next = continuation_value(q, out.next_index, reached, out.reward, cfg.terminal, cfg.gamma);
        q_update_toward(q, s, a, out.reward, 0.0, next, cfg.alpha, cfg.gamma);
        tally.record(out.fidelity, out.reward);
        s = out.next_index;
        if out.done {
            break;
        }
    }
    Ok(tally.finish(episode, env.config().success_fidelity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_threshold_ends_after_one_step() {
        let cfg = EnvConfig {
            success_fidelity: 0.0,
            ..EnvConfig::default()
        };
        let mut env = SpinEnv::new(cfg.clone()).unwrap();
        let mut q = QTable::zeros(cfg.num_states());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let log = run_episode_tql(&mut env, &mut q, &AgentConfig::default(), 1, &mut rng).unwrap();
        assert_eq!(log.steps, 1);
        assert!(log.success);
    }

    #[test]
    fn rewards_are_at_least_ten_per_step() {
        let cfg = EnvConfig::default();
        let mut env = SpinEnv::new(cfg.clone()).unwrap();
        let mut q = QTable::zeros(cfg.num_states());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let agent = AgentConfig {
            epsilon0: 0.5,
            ..AgentConfig::default()
        };
        for k in 1..=5 {
            let log = run_episode_tql(&mut env, &mut q, &agent, k, &mut rng).unwrap();
            assert!(log.cumulative_reward >= 10.0 * log.steps as f64);
            assert!(log.steps <= cfg.max_steps);
            assert!(log.best_fidelity >= log.final_fidelity);
        }
    }
}
