//! Steady-state analysis and optimization of a synthetic algal-bacterial
//! consortium grown in a chemostat.
//!
//! An engineered E. coli strain consumes glucose and, under optogenetic
//! control, diverts a fraction `alpha` of its uptake to synthesizing a
//! vitamin that an auxotrophic green alga needs to grow. Both populations
//! share a continuous-flow vessel with dilution rate `d` and glucose feed
//! `s_in`. The crate provides:
//!
//! - the five-state dynamics and their analytic Jacobian ([`model`]),
//! - closed-form steady states, existence thresholds, and stability
//!   classification ([`equilibria`]),
//! - the steady-state criteria: productivity, feed rate, yield, and the
//!   weighted net profit ([`objectives`]),
//! - feasible-set-aware maximizers with brute-force grid oracles
//!   ([`optimizer`]),
//! - Pareto front sweeps, dominance checks, and reachable-set analysis
//!   ([`pareto`]),
//! - adaptive Runge-Kutta simulation to corroborate the stability
//!   classification empirically ([`sim`]).
//!
//! All routines are pure functions of an immutable [`ModelParams`] and are
//! safe to call concurrently.

pub mod equilibria;
mod error;
pub mod model;
pub mod objectives;
pub mod optimizer;
pub(crate) mod parallel;
pub mod params;
pub mod pareto;
pub mod sim;

pub use error::{Error, Result};
pub use model::{Control, State};
pub use params::ModelParams;
