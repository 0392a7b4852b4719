use serde::{Deserialize, Serialize};

use super::layout::VariableLayout;
use crate::error::{Error, Result};
use crate::market::ArbitrageInstance;

/// A decoded trading cycle, or the infeasible sentinel.
///
/// When feasible, `order` has `K + 1` entries with `order[K] == order[0]`,
/// `objective` is `Σ -ln(w)` along the cycle and `profit_pips` is
/// `(exp(-objective) - 1) * 1e4`. The infeasible sentinel has an empty
/// `order` and zero objective and profit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSolution {
    pub order: Vec<usize>,
    pub feasible: bool,
    pub objective: f64,
    pub profit_pips: f64,
}

impl CycleSolution {
    pub fn infeasible() -> Self {
        Self {
            order: Vec::new(),
            feasible: false,
            objective: 0.0,
            profit_pips: 0.0,
        }
    }

    /// Builds a solution from `K` distinct currencies, checking every hop.
    pub fn from_cycle(cycle: &[usize], inst: &ArbitrageInstance) -> Self {
        let k = cycle.len();
        if k != inst.cycle_len() {
            return Self::infeasible();
        }
        let mut seen = vec![false; inst.num_currencies()];
        for &c in cycle {
            if c >= seen.len() || seen[c] {
                return Self::infeasible();
            }
            seen[c] = true;
        }
        let mut objective = 0.0;
        for p in 0..k {
            match inst.weight(cycle[p], cycle[(p + 1) % k]) {
                Some(w) => objective += w,
                None => return Self::infeasible(),
            }
        }
        let mut order = cycle.to_vec();
        order.push(cycle[0]);
        Self {
            order,
            feasible: true,
            objective,
            profit_pips: pips_from_objective(objective),
        }
    }

    /// The distinct currencies, without the closing repeat.
    pub fn cycle(&self) -> &[usize] {
        if self.order.is_empty() {
            &[]
        } else {
            &self.order[..self.order.len() - 1]
        }
    }

    /// Rotation that starts at the smallest currency index.
    pub fn canonical(&self) -> Vec<usize> {
        let c = self.cycle();
        match c.iter().enumerate().min_by_key(|&(_, v)| v) {
            Some((start, _)) => c[start..].iter().chain(&c[..start]).copied().collect(),
            None => Vec::new(),
        }
    }

    pub fn codes<'a>(&self, inst: &'a ArbitrageInstance) -> Vec<&'a str> {
        self.order.iter().map(|&i| inst.matrix().code(i)).collect()
    }

    /// Product of the traded rates along the cycle.
    pub fn rate_product(&self, inst: &ArbitrageInstance) -> f64 {
        self.order
            .windows(2)
            .map(|w| inst.matrix().rate(w[0], w[1]))
            .product()
    }
}

pub(crate) fn pips_from_objective(objective: f64) -> f64 {
    ((-objective).exp() - 1.0) * 1e4
}

/// `(p - 1) * 1e4` for a rate product `p`.
pub fn profit_pips(product: f64) -> Result<f64> {
    if !(product > 0.0) {
        return Err(Error::NonPositiveProduct(product));
    }
    Ok((product - 1.0) * 1e4)
}

fn layout_of(inst: &ArbitrageInstance) -> VariableLayout {
    VariableLayout::new(inst.num_currencies(), inst.cycle_len())
}

/// Allocation-free feasibility test.
pub fn is_feasible(x: &[bool], inst: &ArbitrageInstance) -> bool {
    let layout = layout_of(inst);
    if x.len() != layout.len() {
        return false;
    }
    let n_cur = layout.num_currencies();
    let k_len = layout.cycle_len();
    // Currencies here are at most a few dozen; a u128 mask covers them.
    let mut used: u128 = 0;
    let mut first = usize::MAX;
    let mut prev = usize::MAX;
    for k in 0..k_len {
        let block = &x[layout.block(k)];
        let mut chosen = usize::MAX;
        for (i, &bit) in block.iter().enumerate() {
            if bit {
                if chosen != usize::MAX {
                    return false;
                }
                chosen = i;
            }
        }
        if chosen == usize::MAX {
            return false;
        }
        if n_cur <= 128 {
            if used >> chosen & 1 == 1 {
                return false;
            }
            used |= 1 << chosen;
        } else if (0..k).any(|p| x[layout.index(chosen, p)]) {
            return false;
        }
        if k == 0 {
            first = chosen;
        } else if !inst.has_edge(prev, chosen) {
            return false;
        }
        prev = chosen;
    }
    if !inst.has_edge(prev, first) {
        return false;
    }
    let closing = &x[layout.block(k_len)];
    closing.iter().enumerate().all(|(i, &b)| b == (i == first))
}

pub fn decode(x: &[bool], inst: &ArbitrageInstance) -> Result<CycleSolution> {
    let layout = layout_of(inst);
    if x.len() != layout.len() {
        return Err(Error::LengthMismatch {
            expected: layout.len(),
            found: x.len(),
        });
    }
    if !is_feasible(x, inst) {
        return Ok(CycleSolution::infeasible());
    }
    let cycle: Vec<usize> = (0..layout.cycle_len())
        .map(|k| x[layout.block(k)].iter().position(|&b| b).unwrap())
        .collect();
    Ok(CycleSolution::from_cycle(&cycle, inst))
}

/// Bitstring for a cycle of `K` distinct currencies.
pub fn encode(cycle: &[usize], layout: &VariableLayout) -> Result<Vec<bool>> {
    if cycle.len() != layout.cycle_len() {
        return Err(Error::InvalidCycle(format!(
            "expected {} currencies, got {}",
            layout.cycle_len(),
            cycle.len()
        )));
    }
    let mut x = vec![false; layout.len()];
    for (k, &c) in cycle.iter().enumerate() {
        if c >= layout.num_currencies() {
            return Err(Error::InvalidCycle(format!("currency index {c} out of range")));
        }
        let v = layout.index(c, k);
        if cycle[..k].contains(&c) {
            return Err(Error::InvalidCycle(format!("currency {c} repeated")));
        }
        x[v] = true;
    }
    x[layout.index(cycle[0], layout.cycle_len())] = true;
    Ok(x)
}
