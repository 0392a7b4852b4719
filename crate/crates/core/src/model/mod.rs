//! Binary model of the arbitrage problem.
//!
//! Variable `x[i, k]` is set when currency `i` occupies position `k` of the
//! cycle, for positions `0..=K`. Position `K` repeats position `0` and closes
//! the loop.

mod builder;
mod cycle;
mod layout;
mod qubo;

pub use builder::{
    build_bqp_objective, build_qubo, calibrate_penalties, constraint_violations, BqpObjective,
    Penalties, PenaltyWeights,
};
pub use cycle::{decode, encode, is_feasible, profit_pips, CycleSolution};
pub use layout::VariableLayout;
pub use qubo::QuboModel;
