//! Statevector simulation of the minimal-encoding variational circuit.
//!
//! `n` QUBO variables are carried by `ceil(log2 n)` register qubits and one
//! ancilla: register state `i` indexes variable `i` and the ancilla, read
//! conditionally on it, gives the variable's value. Circuit angles are
//! trained with differential evolution against the QUBO energy of the
//! decoded bitstring, and execution finishes with local search.

mod ace;
mod circuit;
mod de;
mod measure;

pub use ace::{ace_execute, ace_ls, ace_train, sample_bitstring, AceConfig, TrainedParams};
pub use circuit::{qubit_count, run_circuit, Ansatz, CircuitSpec, Statevector};
pub use de::{differential_evolution, DeConfig, DeOutcome};
pub use measure::{decode_distribution, measure, AceDistribution, Shots, DEFAULT_SHOTS};
