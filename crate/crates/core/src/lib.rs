//! Currency-arbitrage cycle search formulated as a binary quadratic program.
//!
//! The crate builds a position-indexed QUBO whose penalty terms keep the
//! selected trades on a simple cycle of fixed length, and solves it with:
//!
//! * an exhaustive cycle enumerator and a brute-force QUBO scan ([`oracle`]),
//! * simulated annealing and tabu search ([`solvers`]),
//! * a statevector simulation of the minimal-encoding variational circuit
//!   followed by local search ([`quantum`]).
//!
//! [`bench`] runs the solver suite over a grid of cycle lengths and writes
//! profit and timing reports.

pub mod bench;
pub mod error;
pub mod market;
pub mod model;
pub mod oracle;
pub mod quantum;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use market::{ArbitrageInstance, ExchangeMatrix, RateFormat};
pub use model::{CycleSolution, PenaltyWeights, Penalties, QuboModel, VariableLayout};

/// The 14-currency rate table shipped under `data/rates_14.csv`.
pub const RATES_14_CSV: &str = include_str!("../../../data/rates_14.csv");
