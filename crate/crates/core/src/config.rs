//! Plain-text `key = value` experiment configuration.
//!
//! Keys carry a section prefix (`env.`, `agent.`, `run.`); environment keys
//! may also be given bare. `#` starts a comment. Angles accept expressions
//! such as `41*pi/60`, `pi/30`, `-pi/2` or a plain number of radians.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::agents::TerminalRule;
use crate::error::{Error, Result};
use crate::harness::{AgentKind, ExperimentConfig};
use crate::quantum::BlochPoint;

/// Evaluates a product/quotient of numbers and `pi`, with an optional
/// leading sign: `a*pi/b`, `pi/b`, `-pi`, `2.5`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let bad = || Error::Config(format!("bad angle expression {text:?}"));
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    if body.is_empty() {
        return Err(bad());
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = body;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let factor = match &rest[..end] {
            "pi" | "PI" | "π" => std::f64::consts::PI,
            t if t.starts_with(|c: char| c.is_ascii_digit() || c == '.') => t.parse::<f64>().map_err(|_| bad())?,
            _ => return Err(bad()),
        };
        if op == '*' {
            value *= factor;
        } else {
            if factor == 0.0 {
                return Err(Error::Config(format!("division by zero in {text:?}")));
            }
            value /= factor;
        }
        if end == rest.len() {
            break;
        }
        op = rest[end..].chars().next().unwrap();
        rest = &rest[end + 1..];
    }
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(sign * value)
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

/// `N` (seeds 1..=N), `a..b` (inclusive) or a comma list `3,5,8`.
pub fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    let key = "run.seeds";
    let seeds: Vec<u64> = if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (parse_num(key, a.trim())?, parse_num(key, b.trim())?);
        if a > b {
            return Err(Error::Config(format!("{key}: empty range {v:?}")));
        }
        (a..=b).collect()
    } else if v.contains(',') {
        v.split(',')
            .map(|s| parse_num(key, s.trim()))
            .collect::<Result<_>>()?
    } else {
        (1..=parse_num::<u64>(key, v)?).collect()
    };
    if seeds.is_empty() {
        return Err(Error::Config(format!("{key}: no seeds in {v:?}")));
    }
    Ok(seeds)
}

pub const ENV_KEYS: [&str; 9] = [
    "initial_theta",
    "initial_phi",
    "target_theta",
    "target_phi",
    "theta_bins",
    "phi_bins",
    "max_steps",
    "success_fidelity",
    "random_start",
];

/// Parses config text on top of `base`.
pub fn parse_config(text: &str, base: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = base;
    let mut seen = HashSet::new();
    let (mut init, mut target) = (
        (cfg.env.initial.theta(), cfg.env.initial.phi()),
        (cfg.env.target.theta(), cfg.env.target.phi()),
    );
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        let key = if ENV_KEYS.contains(&k) { format!("env.{k}") } else { k.to_string() };
        if !seen.insert(key.clone()) {
            return Err(Error::Config(format!("line {}: duplicate key {key}", i + 1)));
        }
        let (env, agent) = (&mut cfg.env, &mut cfg.agent);
        match key.as_str() {
            "env.initial_theta" => init.0 = parse_angle(v)?,
            "env.initial_phi" => init.1 = parse_angle(v)?,
            "env.target_theta" => target.0 = parse_angle(v)?,
            "env.target_phi" => target.1 = parse_angle(v)?,
            "env.theta_bins" => env.theta_bins = parse_num(&key, v)?,
            "env.phi_bins" => env.phi_bins = parse_num(&key, v)?,
            "env.max_steps" => env.max_steps = parse_num(&key, v)?,
            "env.success_fidelity" => env.success_fidelity = parse_num(&key, v)?,
            "env.random_start" => env.random_start = parse_bool(&key, v)?,

            "agent.kind" => {
                cfg.agent_kind = AgentKind::parse(v)
                    .ok_or_else(|| Error::Config(format!("agent.kind: unknown agent {v:?}")))?
            }
            "agent.alpha" => agent.alpha = parse_num(&key, v)?,
            "agent.gamma" => agent.gamma = parse_num(&key, v)?,
            "agent.epsilon0" => agent.epsilon0 = parse_num(&key, v)?,
            "agent.epsilon_final" => agent.epsilon_final = Some(parse_num(&key, v)?),
            "agent.random_q_init" => agent.random_q_init = parse_bool(&key, v)?,
            "agent.freeze_network" => agent.freeze_network = parse_bool(&key, v)?,
            "agent.terminal" => {
                agent.terminal = TerminalRule::parse(v)
                    .ok_or_else(|| Error::Config(format!("agent.terminal: unknown rule {v:?}")))?
            }
            "agent.replay_capacity" => agent.replay_capacity = parse_num(&key, v)?,
            "agent.batch_size" => agent.batch_size = parse_num(&key, v)?,
            "agent.beta" => agent.learner.beta = parse_num(&key, v)?,
            "agent.lambda" => agent.learner.lambda = parse_num(&key, v)?,
            "agent.td_gamma" => agent.learner.gamma = parse_num(&key, v)?,
            "agent.reward_scale" => agent.learner.reward_scale = parse_num(&key, v)?,
            "agent.td_clip" => {
                agent.learner.td_clip = if v == "none" { None } else { Some(parse_num(&key, v)?) }
            }
            "agent.hidden" => {
                agent.network.hidden_layers = v
                    .split(',')
                    .map(|w| parse_num(&key, w.trim()))
                    .collect::<Result<_>>()?
            }
            "agent.leaky_slope" => agent.network.leaky_slope = parse_num(&key, v)?,
            "agent.residual" => agent.network.residual = parse_bool(&key, v)?,

            "run.seeds" => cfg.seeds = parse_seeds(v)?,
            "run.episodes" => cfg.max_episodes = parse_num(&key, v)?,
            "run.out" => cfg.output_dir = Some(PathBuf::from(v)),
            "run.checkpoints" => cfg.save_checkpoints = parse_bool(&key, v)?,
            "run.parallel" => cfg.parallel = parse_bool(&key, v)?,
            _ => return Err(Error::Config(format!("line {}: unknown key {k}", i + 1))),
        }
    }
    if !(0.0..=std::f64::consts::PI).contains(&init.0) || !(0.0..=std::f64::consts::PI).contains(&target.0) {
        return Err(Error::Config("polar angles must lie in [0, pi]".into()));
    }
    let as_config = |e: Error| Error::Config(e.to_string());
    cfg.env.initial = BlochPoint::new(init.0, init.1).map_err(as_config)?;
    cfg.env.target = BlochPoint::new(target.0, target.1).map_err(as_config)?;
    cfg.env.validate_strict().map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text, ExperimentConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        assert_abs_diff_eq!(parse_angle("41*pi/60").unwrap(), 41.0 * PI / 60.0, epsilon = 1e-15);
        assert_abs_diff_eq!(parse_angle("pi/30").unwrap(), PI / 30.0, epsilon = 1e-15);
        assert_abs_diff_eq!(parse_angle("-pi/2").unwrap(), -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(parse_angle(" 2 * pi ").unwrap(), 2.0 * PI, epsilon = 1e-15);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        for bad in ["", "-", "pi/", "*pi", "tau", "pi/0", "1e400", "pi pi"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seeds("3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("5..7").unwrap(), vec![5, 6, 7]);
        assert_eq!(parse_seeds("9, 2,4").unwrap(), vec![9, 2, 4]);
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("7..5").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let text = "
            # paper task
            env.initial_theta = pi/60
            env.initial_phi = pi/30
            target_theta = 41*pi/60
            target_phi = 29*pi/30
            run.seeds = 4
        ";
        let cfg = parse_config(text, ExperimentConfig::default()).unwrap();
        let d = EnvConfig::default();
        assert_abs_diff_eq!(cfg.env.initial.theta(), d.initial.theta(), epsilon = 1e-15);
        assert_abs_diff_eq!(cfg.env.target.phi(), d.target.phi(), epsilon = 1e-15);
        assert_eq!(cfg.seeds, vec![1, 2, 3, 4]);
    }

    #[test]
    fn all_sections() {
        let text = "agent.kind = dql\nagent.alpha = 0.2\nagent.hidden = 16, 16\nagent.td_clip = none\n\
                    agent.terminal = zero\nrun.episodes = 12\nrun.out = /tmp/x\nmax_steps = 50";
        let cfg = parse_config(text, ExperimentConfig::default()).unwrap();
        assert_eq!(cfg.agent_kind, AgentKind::Dql);
        assert_eq!(cfg.agent.alpha, 0.2);
        assert_eq!(cfg.agent.network.hidden_layers, vec![16, 16]);
        assert_eq!(cfg.agent.learner.td_clip, None);
        assert_eq!(cfg.agent.terminal, TerminalRule::Zero);
        assert_eq!(cfg.max_episodes, 12);
        assert_eq!(cfg.output_dir, Some(PathBuf::from("/tmp/x")));
        assert_eq!(cfg.env.max_steps, 50);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "nonsense",
            "env.bogus = 1",
            "env.max_steps = 0",
            "env.max_steps = ten",
            "env.success_fidelity = 0.6",
            "env.initial_theta = 2*pi",
            "agent.kind = sarsa",
            "run.episodes = 0",
            "env.theta_bins = 10\ntheta_bins = 12",
            "agent.alpha = 1.5",
        ] {
            assert!(
                matches!(parse_config(text, ExperimentConfig::default()), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn missing_file_is_config_error() {
        assert!(matches!(load_config(Path::new("/nonexistent/missing.cfg")), Err(Error::Config(_))));
    }
}
