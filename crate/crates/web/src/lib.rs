//! Browser bindings for the static demo page in `www/`.

use spinrl::agents::brute_force_optimal;
use spinrl::env::{format_sequence, ActionId, ControlSequence, EnvConfig};
use spinrl::harness::{AgentKind, Learner};
use spinrl::quantum::{apply, build_control_set, fidelity_pure, state_to_bloch};
use wasm_bindgen::prelude::*;

/// Longest oracle horizon the page may request.
pub const MAX_HORIZON: usize = 400;
/// Widest oracle beam the page may request.
pub const MAX_BEAM: usize = 256;

/// Parses "U1 U3, U2" or "132" into actions.
pub fn parse_sequence(text: &str) -> Result<ControlSequence, String> {
    let mut seq = Vec::new();
    for token in text.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
        let digits = token.strip_prefix('U').or_else(|| token.strip_prefix('u'));
        match digits {
            Some(d) => seq.push(action_from_digit(d)?),
            None => {
                for c in token.chars() {
                    seq.push(action_from_digit(&c.to_string())?);
                }
            }
        }
    }
    Ok(seq)
}

fn action_from_digit(d: &str) -> Result<ActionId, String> {
    match d {
        "1" => Ok(ActionId::ALL[0]),
        "2" => Ok(ActionId::ALL[1]),
        "3" => Ok(ActionId::ALL[2]),
        _ => Err(format!("unknown control {d:?}, expected U1, U2 or U3")),
    }
}

/// Bloch vector of the target state as `[x, y, z]`.
#[wasm_bindgen]
pub fn target_bloch() -> Vec<f64> {
    let cfg = EnvConfig::default();
    state_to_bloch(&cfg.target_state()).map(|p| p.to_cartesian().to_vec()).unwrap_or_default()
}

/// Applies a sequence from the initial state. Flat `[x, y, z, fidelity]` per
/// step, starting with the initial state itself.
#[wasm_bindgen]
pub fn trajectory(sequence: &str) -> Result<Vec<f64>, String> {
    let seq = parse_sequence(sequence)?;
    let cfg = EnvConfig::default();
    let controls = build_control_set();
    let target = cfg.target_state();
    let mut s = cfg.initial_state();
    let mut out = Vec::with_capacity(4 * (seq.len() + 1));
    for k in 0..=seq.len() {
        let p = state_to_bloch(&s).map_err(|e| e.to_string())?;
        out.extend(p.to_cartesian());
        out.push(fidelity_pure(&s, &target));
        if let Some(a) = seq.get(k) {
            s = apply(controls.get(a.index()).expect("three controls"), &s);
        }
    }
    Ok(out)
}

/// A control sequence with its final fidelity.
#[wasm_bindgen]
pub struct Found {
    sequence: String,
    fidelity: f64,
}

#[wasm_bindgen]
impl Found {
    #[wasm_bindgen(getter)]
    pub fn sequence(&self) -> String {
        self.sequence.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }
}

fn found(seq: &[ActionId], fidelity: f64) -> Found {
    Found {
        sequence: format_sequence(seq),
        fidelity,
    }
}

/// Best sequence of at most `horizon` steps found by the oracle search.
#[wasm_bindgen]
pub fn oracle(horizon: usize, beam: usize) -> Result<Found, String> {
    if horizon > MAX_HORIZON {
        return Err(format!("horizon is limited to {MAX_HORIZON}"));
    }
    if beam == 0 || beam > MAX_BEAM {
        return Err(format!("beam must be between 1 and {MAX_BEAM}"));
    }
    let (seq, j) = brute_force_optimal(&EnvConfig::default(), horizon, beam);
    Ok(found(&seq, j))
}

/// One learner on the default task, trained a batch of episodes at a time.
#[wasm_bindgen]
pub struct Trainer {
    learner: Learner,
}

#[wasm_bindgen]
impl Trainer {
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, seed: u32) -> Result<Trainer, String> {
        let kind = AgentKind::parse(kind).ok_or_else(|| format!("unknown agent {kind:?}"))?;
        let learner = Learner::new(kind, &EnvConfig::default(), &Default::default(), seed as u64)
            .map_err(|e| e.to_string())?;
        Ok(Trainer { learner })
    }

    /// Runs `episodes` more episodes and returns each one's best fidelity.
    pub fn train(&mut self, episodes: usize) -> Result<Vec<f64>, String> {
        (0..episodes)
            .map(|_| self.learner.next_episode().map(|log| log.best_fidelity).map_err(|e| e.to_string()))
            .collect()
    }

    #[wasm_bindgen(getter)]
    pub fn episodes(&self) -> usize {
        self.learner.episodes()
    }

    /// Current greedy policy rolled out from the initial state.
    pub fn greedy(&self) -> Result<Found, String> {
        let (seq, f) = self.learner.greedy_rollout().map_err(|e| e.to_string())?;
        Ok(found(&seq, f))
    }
}
