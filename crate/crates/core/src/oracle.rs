//! Exact reference solvers.
//!
//! [`best_cycle`] enumerates every simple cycle with exactly `K` currencies.
//! [`brute_force_qubo`] scans all `2^n` assignments of a small QUBO. Both are
//! ground truth for the stochastic solvers.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::ArbitrageInstance;
use crate::model::{CycleSolution, QuboModel};

pub const MAX_BRUTE_FORCE_VARS: usize = 24;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    /// Best cycle, or the infeasible sentinel when no cycle of length K exists.
    pub best: CycleSolution,
    /// Number of canonical cycles enumerated.
    pub explored: u64,
    pub elapsed_ms: f64,
}

impl OracleResult {
    pub fn found(&self) -> bool {
        self.best.feasible
    }
}

struct Search<'a> {
    inst: &'a ArbitrageInstance,
    adjacency: Vec<Vec<(usize, f64)>>,
    path: Vec<usize>,
    on_path: Vec<bool>,
    explored: u64,
    best: Option<(f64, Vec<usize>)>,
}

impl<'a> Search<'a> {
    fn new(inst: &'a ArbitrageInstance) -> Self {
        let n = inst.num_currencies();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in inst.edges() {
            adjacency[i].push((j, inst.weight(i, j).unwrap()));
        }
        Self {
            inst,
            adjacency,
            path: Vec::with_capacity(inst.cycle_len()),
            on_path: vec![false; n],
            explored: 0,
            best: None,
        }
    }

    fn run_from(&mut self, start: usize) {
        self.path.clear();
        self.path.push(start);
        self.on_path[start] = true;
        self.extend(start, 0.0);
        self.on_path[start] = false;
    }

    fn extend(&mut self, start: usize, cost: f64) {
        let last = *self.path.last().unwrap();
        let k = self.inst.cycle_len();
        if self.path.len() == k {
            if let Some(w) = self.inst.weight(last, start) {
                self.explored += 1;
                let total = cost + w;
                // Enumeration is in lexicographic order, so strict improvement
                // keeps the lexicographically smallest among equal objectives.
                if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
                    self.best = Some((total, self.path.clone()));
                }
            }
            return;
        }
        let closing = self.path.len() + 1 == k;
        for idx in 0..self.adjacency[last].len() {
            let (next, w) = self.adjacency[last][idx];
            if next <= start || self.on_path[next] {
                continue;
            }
            if closing && !self.inst.has_edge(next, start) {
                continue;
            }
            self.on_path[next] = true;
            self.path.push(next);
            self.extend(start, cost + w);
            self.path.pop();
            self.on_path[next] = false;
        }
    }
}

/// Finds the most profitable simple cycle of exactly `K` currencies.
///
/// Cycles are enumerated once each, rotated to start at their smallest
/// currency index. Start vertices are searched in parallel and merged by
/// (objective, canonical order), so the result does not depend on the
/// thread count.
pub fn best_cycle(inst: &ArbitrageInstance) -> OracleResult {
    let started = Instant::now();
    let per_start: Vec<(u64, Option<(f64, Vec<usize>)>)> = (0..inst.num_currencies())
        .into_par_iter()
        .map(|s| {
            let mut search = Search::new(inst);
            search.run_from(s);
            (search.explored, search.best)
        })
        .collect();

    let mut explored = 0;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for (count, candidate) in per_start {
        explored += count;
        if let Some((obj, order)) = candidate {
            let better = match &best {
                None => true,
                Some((b, bo)) => obj < *b || (obj == *b && order < *bo),
            };
            if better {
                best = Some((obj, order));
            }
        }
    }
    let best = match best {
        Some((_, order)) => CycleSolution::from_cycle(&order, inst),
        None => CycleSolution::infeasible(),
    };
    OracleResult {
        best,
        explored,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    }
}

/// Global minimum of a QUBO with at most [`MAX_BRUTE_FORCE_VARS`] variables.
/// Ties go to the smallest assignment read as an integer with variable 0 as
/// the least significant bit.
pub fn brute_force_qubo(model: &QuboModel) -> Result<(Vec<bool>, f64)> {
    let n = model.len();
    if n > MAX_BRUTE_FORCE_VARS {
        return Err(Error::TooManyVariables {
            n,
            max: MAX_BRUTE_FORCE_VARS,
        });
    }
    // Gray-code walk: one flip per step, so each energy is an O(degree) update.
    let mut x = vec![false; n];
    let mut energy = model.energy(&x);
    let mut best_e = energy;
    let mut best_code: u64 = 0;
    let mut code: u64 = 0;
    for step in 1u64..(1u64 << n) {
        let var = step.trailing_zeros() as usize;
        energy += model.flip_delta(&x, var);
        x[var] = !x[var];
        code ^= 1 << var;
        let tol = 1e-12 * best_e.abs().max(1.0);
        if energy < best_e - tol || (energy <= best_e + tol && code < best_code) {
            best_e = energy;
            best_code = code;
        }
    }
    let best: Vec<bool> = (0..n).map(|i| best_code >> i & 1 == 1).collect();
    // Report the directly evaluated energy of the winner.
    let e = model.energy(&best);
    Ok((best, e))
}
