//! Coexistence of an age optimizing network (AON) and a throughput
//! optimizing network (TON) sharing a slotted CSMA/CA medium, modeled as a
//! repeated game whose stage game is parameterized by the AON's average age.
//!
//! - [`slot_model`]: idle / success / collision probabilities.
//! - [`metrics`]: per-slot throughput and age random variables.
//! - [`stage_game`]: stage payoffs and closed-form equilibria.
//! - [`oracle`]: brute-force payoffs, grid best responses and KKT checks.
//! - [`sim`]: Monte Carlo simulation of the repeated game.
//! - [`scenarios`]: AON-TON, AON-AON and TON-TON builders and figure sweeps.
//! - [`report`]: CSV / JSON output and the configuration file.

pub mod error;
pub mod metrics;
pub mod oracle;
pub mod report;
pub mod scenarios;
pub mod sim;
pub mod slot_model;
pub mod stage_game;

pub use error::{Error, Result};
pub use slot_model::{slot_probabilities, AccessVector, SlotLengths, SlotProbabilities, SlotType};
pub use stage_game::{msne, stage_payoffs, EquilibriumResult, StageGameParams, StagePayoffs, StrategyProfile};
