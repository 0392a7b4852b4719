use std::time::Instant;

use rand::Rng;

use super::{FieldState, SolverConfig, SolverReport, IMPROVEMENT_EPS};
use crate::error::{Error, Result};
use crate::market::ArbitrageInstance;
use crate::model::QuboModel;
use crate::rng::{derive_seed, rng_from};

/// Steepest-descent single-flip tabu search.
///
/// Each move takes the best non-tabu flip (ties broken uniformly at random
/// from the seeded stream); a tabu flip is allowed when it would beat the
/// best energy seen so far. Each move draws its tenure from
/// `tenure..=tenure + spread`, which breaks the short limit cycles a fixed
/// tenure falls into on this penalty landscape. A restart ends after its
/// move budget or after `stall_limit` consecutive moves without a new best.
pub fn tabu_search(
    model: &QuboModel,
    inst: &ArbitrageInstance,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    let n = model.len();
    let budget = cfg.tabu_iterations(n);
    let restarts = cfg.tabu_restarts();
    if budget == 0 || restarts == 0 {
        return Err(Error::ZeroBudget);
    }
    let (tenure, spread) = (cfg.tabu.tenure, cfg.tabu.tenure_spread);
    let stall_limit = cfg.tabu_stall_limit(n).max(1);
    let started = Instant::now();

    let mut best_x = vec![false; n];
    let mut best_e = f64::INFINITY;
    let mut moves = 0u64;
    for restart in 0..restarts {
        let mut rng = rng_from(derive_seed(cfg.seed, restart as u64));
        let init: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let mut state = FieldState::new(model, init);
        let mut run_best = state.energy;
        if state.energy < best_e - IMPROVEMENT_EPS {
            best_e = state.energy;
            best_x.clone_from(&state.x);
        }
        let mut tabu_until = vec![0usize; n];
        let mut stall = 0usize;
        for iter in 1..=budget {
            let mut chosen = None;
            let mut chosen_delta = f64::INFINITY;
            let mut ties = 0u32;
            for var in 0..n {
                let d = state.delta(var);
                let allowed = tabu_until[var] < iter || state.energy + d < run_best - IMPROVEMENT_EPS;
                if !allowed {
                    continue;
                }
                if d < chosen_delta - IMPROVEMENT_EPS {
                    chosen = Some(var);
                    chosen_delta = d;
                    ties = 1;
                } else if d <= chosen_delta + IMPROVEMENT_EPS {
                    ties += 1;
                    if rng.gen_range(0..ties) == 0 {
                        chosen = Some(var);
                    }
                }
            }
            // Everything tabu with no aspiration: nothing left to do.
            let Some(var) = chosen else { break };
            state.flip(model, var);
            let extra = if spread > 0 { rng.gen_range(0..=spread) } else { 0 };
            tabu_until[var] = iter + tenure + extra;
            moves += 1;
            if state.energy < run_best - IMPROVEMENT_EPS {
                run_best = state.energy;
                stall = 0;
                if state.energy < best_e - IMPROVEMENT_EPS {
                    best_e = state.energy;
                    best_x.clone_from(&state.x);
                }
            } else {
                stall += 1;
                if stall >= stall_limit {
                    break;
                }
            }
        }
    }
    SolverReport::new("tabu", best_x, model, inst, started.elapsed(), moves, cfg.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::ExchangeMatrix;
    use crate::model::{build_qubo, Penalties};

    #[test]
    fn matches_brute_force_on_nine_variables() {
        let m = ExchangeMatrix::from_csv_str(
            ",A,B,C\nA,1,1.02,0.97\nB,0.985,1,1.01\nC,1.04,0.99,1\n",
        )
        .unwrap();
        let inst = ArbitrageInstance::new(m, 2).unwrap();
        let q = build_qubo(&inst, Penalties::Auto).unwrap();
        let (_, e) = crate::oracle::brute_force_qubo(&q).unwrap();
        for seed in 0..10 {
            let r = tabu_search(&q, &inst, &SolverConfig::default().with_seed(seed)).unwrap();
            assert!((r.energy - e).abs() < 1e-9, "seed {seed}: {} vs {e}", r.energy);
            assert!(r.feasible);
        }
    }

    #[test]
    fn flat_model_stops_at_stall_limit() {
        let inst =
            ArbitrageInstance::new(ExchangeMatrix::from_csv_str(",A,B\nA,1,1\nB,1,1\n").unwrap(), 2)
                .unwrap();
        let q = QuboModel::from_terms(6, vec![0.0; 6], Vec::new(), 0.0).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.restarts = Some(1);
        cfg.tabu.stall_limit = Some(4);
        cfg.iterations = Some(1000);
        let r = tabu_search(&q, &inst, &cfg).unwrap();
        assert_eq!(r.iterations, 4);
        assert_eq!(r.energy, 0.0);
    }

    #[test]
    fn zero_budget_is_rejected() {
        let inst = ArbitrageInstance::new(ExchangeMatrix::table_one(), 2).unwrap();
        let q = build_qubo(&inst, Penalties::Auto).unwrap();
        let cfg = SolverConfig {
            iterations: Some(0),
            ..SolverConfig::default()
        };
        assert!(matches!(tabu_search(&q, &inst, &cfg), Err(Error::ZeroBudget)));
    }
}
