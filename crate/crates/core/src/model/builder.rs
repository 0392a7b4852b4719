use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::layout::VariableLayout;
use super::qubo::QuboModel;
use crate::error::{Error, Result};
use crate::market::ArbitrageInstance;

/// The unpenalised objective: `Σ_k Σ_(i,j)∈E -ln(w_ij) x[i,k] x[j,k+1]`.
#[derive(Debug, Clone)]
pub struct BqpObjective {
    layout: VariableLayout,
    terms: Vec<((usize, usize), f64)>,
}

impl BqpObjective {
    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn terms(&self) -> &[((usize, usize), f64)] {
        &self.terms
    }

    pub fn coefficient(&self, a: usize, b: usize) -> Option<f64> {
        let key = (a.min(b), a.max(b));
        self.terms
            .binary_search_by(|(k, _)| k.cmp(&key))
            .ok()
            .map(|i| self.terms[i].1)
    }

    pub fn value(&self, x: &[bool]) -> f64 {
        self.terms
            .iter()
            .filter(|&&((a, b), _)| x[a] && x[b])
            .map(|(_, c)| c)
            .sum()
    }
}

pub fn build_bqp_objective(inst: &ArbitrageInstance) -> BqpObjective {
    let layout = VariableLayout::new(inst.num_currencies(), inst.cycle_len());
    let mut terms = Vec::with_capacity(inst.edges().len() * inst.cycle_len());
    for k in 0..inst.cycle_len() {
        for &(i, j) in inst.edges() {
            let w = inst.weight(i, j).expect("edge has a weight");
            terms.push(((layout.index(i, k), layout.index(j, k + 1)), w));
        }
    }
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    BqpObjective { layout, terms }
}

/// Penalty multipliers for the four constraint families:
/// one currency per position, no repeated currency, no untradable hop,
/// and a closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub one_hot: f64,
    pub no_repeat: f64,
    pub tradable: f64,
    pub closure: f64,
}

impl PenaltyWeights {
    pub fn uniform(value: f64) -> Result<Self> {
        Self::new([value; 4])
    }

    pub fn new(values: [f64; 4]) -> Result<Self> {
        for v in values {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositivePenalty(v));
            }
        }
        Ok(Self {
            one_hot: values[0],
            no_repeat: values[1],
            tradable: values[2],
            closure: values[3],
        })
    }

    /// Rescales a calibrated bound per family. Factors below 1 are refused
    /// because they would undercut the bound.
    pub fn scaled(bound: f64, factors: [f64; 4]) -> Result<Self> {
        for f in factors {
            if !(f >= 1.0) {
                return Err(Error::PenaltyBelowBound(f));
            }
        }
        Self::new(factors.map(|f| f * bound))
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.one_hot, self.no_repeat, self.tradable, self.closure]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalties {
    Auto,
    Manual(PenaltyWeights),
}

/// Verma–Lewis bound: the largest one-sided sum of objective coefficients
/// incident to any single variable, floored at 1. Returned for all four
/// families.
pub fn calibrate_penalties(objective: &BqpObjective) -> PenaltyWeights {
    let n = objective.layout().len();
    let mut pos = vec![0.0f64; n];
    let mut neg = vec![0.0f64; n];
    for &((a, b), c) in objective.terms() {
        for v in [a, b] {
            if c > 0.0 {
                pos[v] += c;
            } else {
                neg[v] += c;
            }
        }
    }
    let rho = pos
        .iter()
        .zip(&neg)
        .fold(1.0f64, |m, (&p, &q)| m.max(p).max(-q));
    PenaltyWeights::uniform(rho).expect("bound is at least 1")
}

pub fn build_qubo(inst: &ArbitrageInstance, penalties: Penalties) -> Result<QuboModel> {
    let objective = build_bqp_objective(inst);
    let lambda = match penalties {
        Penalties::Auto => calibrate_penalties(&objective),
        Penalties::Manual(w) => PenaltyWeights::new(w.as_array())?,
    };
    let layout = *objective.layout();
    let n_cur = layout.num_currencies();
    let k_len = layout.cycle_len();

    let mut linear = vec![0.0; layout.len()];
    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add = |a: usize, b: usize, c: f64| {
        *pairs.entry((a.min(b), a.max(b))).or_insert(0.0) += c;
    };
    let mut offset = 0.0;

    for &((a, b), c) in objective.terms() {
        add(a, b, c);
    }

    // (Σ_i x[i,k] - 1)² for positions 0..K; position K follows from closure.
    for k in 0..k_len {
        offset += lambda.one_hot;
        for i in 0..n_cur {
            linear[layout.index(i, k)] -= lambda.one_hot;
            for j in i + 1..n_cur {
                add(layout.index(i, k), layout.index(j, k), 2.0 * lambda.one_hot);
            }
        }
    }

    // x[i,k] x[i,l] for k < l < K.
    for i in 0..n_cur {
        for k in 0..k_len {
            for l in k + 1..k_len {
                add(layout.index(i, k), layout.index(i, l), lambda.no_repeat);
            }
        }
    }

    // Consecutive placements along a missing edge; self-pairs are not edges.
    for i in 0..n_cur {
        for j in 0..n_cur {
            if inst.has_edge(i, j) {
                continue;
            }
            for k in 0..k_len {
                add(layout.index(i, k), layout.index(j, k + 1), lambda.tradable);
            }
        }
    }

    // (x[i,0] - x[i,K])².
    for i in 0..n_cur {
        let first = layout.index(i, 0);
        let last = layout.index(i, k_len);
        linear[first] += lambda.closure;
        linear[last] += lambda.closure;
        add(first, last, -2.0 * lambda.closure);
    }

    Ok(QuboModel::assemble(linear, pairs, offset).with_structure(layout, lambda))
}

/// Unweighted violation of each constraint family at `x`, in the order
/// one-hot, no-repeat, tradable, closure. All zero iff `x` is a valid cycle.
pub fn constraint_violations(x: &[bool], inst: &ArbitrageInstance) -> [f64; 4] {
    let layout = VariableLayout::new(inst.num_currencies(), inst.cycle_len());
    let n_cur = layout.num_currencies();
    let k_len = layout.cycle_len();
    let on = |i: usize, k: usize| x[layout.index(i, k)];

    let one_hot = (0..k_len)
        .map(|k| {
            let s = (0..n_cur).filter(|&i| on(i, k)).count() as f64;
            (s - 1.0) * (s - 1.0)
        })
        .sum();
    let no_repeat = (0..n_cur)
        .map(|i| {
            let c = (0..k_len).filter(|&k| on(i, k)).count();
            (c * c.saturating_sub(1) / 2) as f64
        })
        .sum();
    let mut tradable = 0.0;
    for k in 0..k_len {
        for i in (0..n_cur).filter(|&i| on(i, k)) {
            for j in (0..n_cur).filter(|&j| on(j, k + 1)) {
                if !inst.has_edge(i, j) {
                    tradable += 1.0;
                }
            }
        }
    }
    let closure = (0..n_cur).filter(|&i| on(i, 0) != on(i, k_len)).count() as f64;
    [one_hot, no_repeat, tradable, closure]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::ExchangeMatrix;
    use crate::model::encode;

    fn instance(csv: &str, k: usize) -> ArbitrageInstance {
        ArbitrageInstance::new(ExchangeMatrix::from_csv_str(csv).unwrap(), k).unwrap()
    }

    fn table(k: usize) -> ArbitrageInstance {
        ArbitrageInstance::new(ExchangeMatrix::table_one(), k).unwrap()
    }

    #[test]
    fn single_edge_objective() {
        let inst = instance(",EUR,USD\nEUR,1,1.1245\nUSD,0,1\n", 2);
        let obj = build_bqp_objective(&inst);
        let layout = obj.layout();
        let w = -(1.1245f64).ln();
        assert_eq!(obj.terms().len(), 2);
        assert_eq!(obj.coefficient(layout.index(0, 0), layout.index(1, 1)), Some(w));
        assert_eq!(obj.coefficient(layout.index(0, 1), layout.index(1, 2)), Some(w));
    }

    #[test]
    fn unit_rates_give_zero_objective() {
        let inst = instance(",A,B,C\nA,1,1,1\nB,1,1,1\nC,1,1,1\n", 3);
        let obj = build_bqp_objective(&inst);
        assert!(obj.terms().iter().all(|&(_, c)| c == 0.0));
        assert_eq!(calibrate_penalties(&obj), PenaltyWeights::uniform(1.0).unwrap());
    }

    #[test]
    fn table_term_count() {
        assert_eq!(build_bqp_objective(&table(2)).terms().len(), 172);
    }

    #[test]
    fn qubo_size_for_fourteen_five() {
        let q = build_qubo(&table(5), Penalties::Auto).unwrap();
        assert_eq!(q.len(), 84);
    }

    #[test]
    fn single_negative_coefficient_bounds_penalties() {
        // One edge with -ln(w) = -2.5, K = 2 gives two terms, on disjoint variables.
        let rate = (2.5f64).exp();
        let inst = instance(&format!(",A,B\nA,1,{rate}\nB,0,1\n"), 2);
        let lam = calibrate_penalties(&build_bqp_objective(&inst));
        approx::assert_relative_eq!(lam.one_hot, 2.5, max_relative = 1e-12);
        assert_eq!(lam.one_hot, lam.closure);
    }

    #[test]
    fn all_zero_bitstring_pays_one_hot_per_position() {
        let inst = table(2);
        let w = PenaltyWeights::uniform(10.0).unwrap();
        let q = build_qubo(&inst, Penalties::Manual(w)).unwrap();
        assert_eq!(q.energy(&vec![false; q.len()]), 20.0);
    }

    #[test]
    fn feasible_energy_equals_objective() {
        let inst = table(2);
        let m = inst.matrix();
        let (eur, usd) = (m.index_of("EUR").unwrap(), m.index_of("USD").unwrap());
        let q = build_qubo(&inst, Penalties::Auto).unwrap();
        let obj = build_bqp_objective(&inst);
        let x = encode(&[eur, usd], q.layout().unwrap()).unwrap();
        assert!((q.energy(&x) - obj.value(&x)).abs() < 1e-12);
        assert_eq!(constraint_violations(&x, &inst), [0.0; 4]);
    }

    #[test]
    fn rejects_nonpositive_penalty() {
        assert!(PenaltyWeights::uniform(0.0).is_err());
        assert!(PenaltyWeights::new([1.0, 1.0, -1.0, 1.0]).is_err());
        assert!(PenaltyWeights::new([1.0, f64::NAN, 1.0, 1.0]).is_err());
        assert!(PenaltyWeights::scaled(3.0, [1.0, 0.5, 1.0, 1.0]).is_err());
        let w = PenaltyWeights::scaled(3.0, [1.0, 2.0, 1.0, 1.5]).unwrap();
        assert_eq!(w.as_array(), [3.0, 6.0, 3.0, 4.5]);
    }

    #[test]
    fn qubo_energy_is_penalised_objective_everywhere() {
        // Random bitstrings on a small instance; compare against a direct
        // evaluation of the penalty families.
        use rand::Rng;
        let inst = instance(",A,B,C\nA,1,1.1,0\nB,0.8,1,1.3\nC,0.9,0.7,1\n", 2);
        let w = PenaltyWeights::new([1.5, 2.0, 2.5, 3.0]).unwrap();
        let q = build_qubo(&inst, Penalties::Manual(w)).unwrap();
        let obj = build_bqp_objective(&inst);
        let mut rng = crate::rng::rng_from(11);
        for _ in 0..2000 {
            let x: Vec<bool> = (0..q.len()).map(|_| rng.gen_bool(0.4)).collect();
            let v = constraint_violations(&x, &inst);
            let expect = obj.value(&x)
                + w.one_hot * v[0]
                + w.no_repeat * v[1]
                + w.tradable * v[2]
                + w.closure * v[3];
            assert!((q.energy(&x) - expect).abs() < 1e-9);
        }
    }
}
