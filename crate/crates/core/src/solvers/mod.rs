//! Stochastic QUBO solvers and the local-search post-processor.
//!
//! Every solver is deterministic for a fixed [`SolverConfig`]: randomness
//! comes from ChaCha streams derived from `seed`, one per restart.

mod anneal;
mod local_search;
mod tabu;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use anneal::simulated_annealing;
pub use local_search::{local_search, local_search_traced, LocalSearchTrace, DEFAULT_ROUND_CAP};
pub use tabu::tabu_search;

use crate::error::Result;
use crate::market::ArbitrageInstance;
use crate::model::{decode, CycleSolution, QuboModel};

/// Strict-improvement threshold used when comparing energies that were
/// accumulated incrementally.
pub(crate) const IMPROVEMENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub beta_start: f64,
    pub beta_end: f64,
    pub restarts: usize,
    /// Run [`local_search`] on the final state of every restart.
    pub polish: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TabuParams {
    /// Minimum number of moves a flipped variable stays tabu.
    pub tenure: usize,
    /// Extra tenure drawn uniformly from `0..=tenure_spread` per move.
    pub tenure_spread: usize,
    /// Consecutive non-improving moves before a restart ends; `None` means `5n`.
    pub stall_limit: Option<usize>,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub seed: u64,
    /// Annealing sweeps per restart.
    pub sweeps: usize,
    /// Tabu moves per restart; `None` means `20n`.
    pub iterations: Option<usize>,
    pub sa: AnnealParams,
    pub tabu: TabuParams,
    /// Overrides the per-solver restart counts when set.
    pub restarts: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sweeps: 500,
            iterations: None,
            sa: AnnealParams {
                beta_start: 0.05,
                beta_end: 10.0,
                restarts: 40,
                polish: true,
            },
            tabu: TabuParams {
                tenure: 7,
                tenure_spread: 7,
                stall_limit: None,
                restarts: 64,
            },
            restarts: None,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = Some(restarts);
        self
    }

    pub(crate) fn sa_restarts(&self) -> usize {
        self.restarts.unwrap_or(self.sa.restarts)
    }

    pub(crate) fn tabu_restarts(&self) -> usize {
        self.restarts.unwrap_or(self.tabu.restarts)
    }

    pub(crate) fn tabu_iterations(&self, n: usize) -> usize {
        self.iterations.unwrap_or(20 * n)
    }

    pub(crate) fn tabu_stall_limit(&self, n: usize) -> usize {
        self.tabu.stall_limit.unwrap_or(5 * n)
    }
}

/// Outcome of one solver run.
///
/// Serialises with the stable field names `solver`, `energy`,
/// `profit_pips`, `feasible`, `elapsed_ms`, `seed` and `iterations`, plus
/// the decoded `cycle` (currency codes) and the raw `bitstring`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solver: String,
    pub seed: u64,
    pub feasible: bool,
    pub profit_pips: f64,
    pub energy: f64,
    pub elapsed_ms: f64,
    pub iterations: u64,
    pub cycle: Vec<String>,
    #[serde(with = "bits")]
    pub bitstring: Vec<bool>,
    #[serde(skip, default = "CycleSolution::infeasible")]
    pub solution: CycleSolution,
}

impl SolverReport {
    pub fn new(
        solver: &str,
        bitstring: Vec<bool>,
        model: &QuboModel,
        inst: &ArbitrageInstance,
        elapsed: Duration,
        iterations: u64,
        seed: u64,
    ) -> Result<Self> {
        let energy = model.checked_energy(&bitstring)?;
        let solution = decode(&bitstring, inst)?;
        Ok(Self {
            solver: solver.to_string(),
            seed,
            feasible: solution.feasible,
            profit_pips: solution.profit_pips,
            energy,
            elapsed_ms: elapsed.as_secs_f64() * 1e3,
            iterations,
            cycle: solution.codes(inst).into_iter().map(str::to_string).collect(),
            bitstring,
            solution,
        })
    }

    /// Same report with the wall-clock field zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        Self {
            elapsed_ms: 0.0,
            ..self.clone()
        }
    }
}

pub(crate) mod bits {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &[bool], s: S) -> Result<S::Ok, S::Error> {
        let text: String = x.iter().map(|&b| if b { '1' } else { '0' }).collect();
        s.serialize_str(&text)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let text = String::deserialize(d)?;
        text.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(serde::de::Error::custom(format!("bad bit {other:?}"))),
            })
            .collect()
    }
}

/// Local fields `h[a] = linear[a] + Σ_b Q[a,b] x[b]`, kept in sync with `x`.
pub(crate) struct FieldState {
    pub x: Vec<bool>,
    pub field: Vec<f64>,
    pub energy: f64,
}

impl FieldState {
    pub fn new(model: &QuboModel, x: Vec<bool>) -> Self {
        let field = (0..model.len()).map(|a| model.local_field(&x, a)).collect();
        let energy = model.energy(&x);
        Self { x, field, energy }
    }

    #[inline]
    pub fn delta(&self, var: usize) -> f64 {
        if self.x[var] {
            -self.field[var]
        } else {
            self.field[var]
        }
    }

    #[inline]
    pub fn flip(&mut self, model: &QuboModel, var: usize) {
        self.energy += self.delta(var);
        let sign = if self.x[var] { -1.0 } else { 1.0 };
        self.x[var] = !self.x[var];
        for &(b, c) in model.neighbors(var) {
            self.field[b] += sign * c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_state_tracks_energy() {
        let m = QuboModel::from_terms(
            4,
            vec![1.0, -1.0, 0.5, -0.25],
            vec![((0, 1), 2.0), ((1, 2), -3.0), ((0, 3), 1.5), ((2, 3), 0.75)],
            0.1,
        )
        .unwrap();
        let mut st = FieldState::new(&m, vec![false; 4]);
        for &v in &[0, 2, 1, 3, 0, 2] {
            st.flip(&m, v);
            assert!((st.energy - m.energy(&st.x)).abs() < 1e-12);
            for a in 0..4 {
                assert!((st.field[a] - m.local_field(&st.x, a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn report_serialises_stable_names() {
        let inst = ArbitrageInstance::new(crate::ExchangeMatrix::table_one(), 2).unwrap();
        let model = crate::model::build_qubo(&inst, crate::Penalties::Auto).unwrap();
        let x = crate::model::encode(&[4, 5], model.layout().unwrap()).unwrap();
        let r = SolverReport::new("oracle", x, &model, &inst, Duration::from_millis(3), 1, 9).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["solver", "energy", "profit_pips", "feasible", "elapsed_ms", "seed", "iterations"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["cycle"], serde_json::json!(["CHF", "JPY", "CHF"]));
        let back: SolverReport = serde_json::from_value(v).unwrap();
        assert_eq!(back.bitstring, r.bitstring);
    }
}
