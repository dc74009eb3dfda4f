//! Exact solver for finitely nested interactive POMDPs.
//!
//! The crate is layered bottom-up:
//!
//! - [`pomdp`]: single-agent POMDP models, flat Bayes updates and exact
//!   alpha-vector value iteration. This is also the level-0 base of the
//!   nesting.
//! - [`model`]: frames, intentional and no-information models of the other
//!   agent, noise folding and the nested model hierarchy.
//! - [`belief`]: beliefs over interactive states (physical state, model of
//!   the other agent) and their prediction/correction update.
//! - [`solver`]: recursive value computation, belief sweeps, action
//!   forecasts and policy graphs, with a shared cache of nested solutions.
//! - [`tiger`]: the single-agent, noisy and two-agent tiger games.
//! - [`domain`]: the plain-text domain file format.
//! - [`report`]: CSV and DOT writers.

pub mod belief;
pub mod domain;
pub mod error;
pub mod model;
pub mod pomdp;
pub mod report;
pub mod solver;
pub mod tiger;

pub use error::{Error, Result};

/// Absolute tolerance used when collecting tied optimal actions.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Tolerance for stochasticity checks on model tables.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;
