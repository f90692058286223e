//! Reinforcement-learning control of a spin-1/2 system.
//!
//! The spin evolves under one of three fixed unitaries per step (free
//! evolution, positive impulse, negative impulse). Agents learn a switch
//! sequence that carries a fixed initial state to a target state.
//!
//! - [`quantum`]: closed-form 2×2 linear algebra, Bloch coordinates, fidelity.
//! - [`env`]: the discretized control task and sequence evaluation.
//! - [`valuenet`]: residual MLP value network with eligibility traces.
//! - [`agents`]: tabular Q, enhanced Q (table + network shaping), deep Q,
//!   policy gradient, and a search oracle.
//! - [`harness`]: multi-seed experiments, CSV/SVG output and summaries.

pub mod agents;
pub mod checkpoint;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod quantum;
pub mod valuenet;

pub use error::{Error, Result};
