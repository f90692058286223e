//! Search over control sequences, independent of any learning.
//!
//! Up to `exhaustive_depth` every sequence is expanded; deeper levels keep
//! only the `beam` highest-fidelity nodes. The result is the best node seen
//! at any depth, so it never gets worse as the horizon grows.
//!
//! A single beam search is not monotone in its width: a wider beam can crowd
//! out the prefix of the eventual best sequence. [`brute_force_optimal`]
//! therefore widens iteratively through the powers of two up to `beam` and
//! keeps the best result, which is monotone in both arguments.

use crate::env::{ActionId, ControlSequence, EnvConfig};
use crate::quantum::{apply, build_control_set, fidelity_pure, PureState};

/// Depth up to which [`brute_force_optimal`] enumerates all 3^d sequences.
pub const EXHAUSTIVE_DEPTH: usize = 8;
/// Largest accepted horizon.
pub const MAX_HORIZON: usize = 256;

#[derive(Clone, Copy)]
struct Node {
    parent: u32,
    action: ActionId,
}

struct Frontier {
    states: Vec<PureState>,
    fidelity: Vec<f64>,
    node: Vec<u32>,
}

/// Exhaustive expansion to depth 8, then beam searches of widths 1, 2, 4, …
/// up to the largest power of two not above `beam`; the best result wins,
/// ties going to the narrower search.
pub fn brute_force_optimal(cfg: &EnvConfig, horizon: usize, beam: usize) -> (ControlSequence, f64) {
    if horizon <= EXHAUSTIVE_DEPTH {
        return beam_search(cfg, horizon, 1, EXHAUSTIVE_DEPTH);
    }
    let mut best = beam_search(cfg, horizon, 1, EXHAUSTIVE_DEPTH);
    let mut width = 2;
    while width <= beam {
        let found = beam_search(cfg, horizon, width, EXHAUSTIVE_DEPTH);
        if found.1 > best.1 {
            best = found;
        }
        width *= 2;
    }
    best
}

/// Best sequence of length ≤ `horizon` and its fidelity with the target.
pub fn beam_search(
    cfg: &EnvConfig,
    horizon: usize,
    beam: usize,
    exhaustive_depth: usize,
) -> (ControlSequence, f64) {
    let horizon = horizon.min(MAX_HORIZON);
    let beam = beam.max(1);
    let controls = build_control_set();
    let target = cfg.target_state();
    let start = cfg.initial_state();

    // Node 0 is the root (empty sequence).
    let mut arena = vec![Node {
        parent: u32::MAX,
        action: ActionId::ALL[0],
    }];
    let mut frontier = Frontier {
        states: vec![start],
        fidelity: vec![fidelity_pure(&start, &target)],
        node: vec![0],
    };
    let mut best_node = 0u32;
    let mut best = frontier.fidelity[0];

    for depth in 1..=horizon {
        let mut next = Frontier {
            states: Vec::with_capacity(frontier.states.len() * 3),
            fidelity: Vec::with_capacity(frontier.states.len() * 3),
            node: Vec::with_capacity(frontier.states.len() * 3),
        };
        for (state, &parent) in frontier.states.iter().zip(&frontier.node) {
            for a in ActionId::ALL {
                let s = apply(controls.get(a.index()).expect("action in range"), state);
                arena.push(Node { parent, action: a });
                next.states.push(s);
                next.fidelity.push(fidelity_pure(&s, &target));
                next.node.push((arena.len() - 1) as u32);
            }
        }
        if depth > exhaustive_depth && next.states.len() > beam {
            let mut order: Vec<usize> = (0..next.states.len()).collect();
            // Stable sort: equal fidelities keep expansion order.
            order.sort_by(|&i, &j| next.fidelity[j].total_cmp(&next.fidelity[i]));
            order.truncate(beam);
            next = Frontier {
                states: order.iter().map(|&i| next.states[i]).collect(),
                fidelity: order.iter().map(|&i| next.fidelity[i]).collect(),
                node: order.iter().map(|&i| next.node[i]).collect(),
            };
        }
        for (f, &n) in next.fidelity.iter().zip(&next.node) {
            if *f > best {
                best = *f;
                best_node = n;
            }
        }
        frontier = next;
    }

    let mut seq = Vec::new();
    let mut n = best_node;
    while n != 0 {
        let node = arena[n as usize];
        seq.push(node.action);
        n = node.parent;
    }
    seq.reverse();
    (seq, best)
}
