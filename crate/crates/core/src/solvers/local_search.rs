//! Greedy flip-then-swap improvement of a candidate bitstring.
//!
//! A round first tries every single-bit flip in index order, then every
//! swap of a set bit with an unset bit inside each position block. Because
//! position `K` mirrors position `0`, the swap pass also tries moving the
//! start currency in both blocks at once. Two compound passes follow: every
//! pair of cyclically adjacent positions is rewritten to each currency pair
//! in turn, and every two positions exchange their contents. These repair
//! gaps that no single currency can bridge and let a feasible cycle change
//! two legs together. A move is kept only if it strictly lowers the
//! energy and does not turn a feasible assignment infeasible. Rounds repeat
//! until nothing changes or the round cap is reached.

use super::{FieldState, IMPROVEMENT_EPS};
use crate::error::{Error, Result};
use crate::market::ArbitrageInstance;
use crate::model::{is_feasible, QuboModel, VariableLayout};

pub const DEFAULT_ROUND_CAP: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchTrace {
    pub x: Vec<bool>,
    pub rounds: usize,
    /// Per round: coefficient reads plus `n` for every feasibility check.
    pub work: Vec<u64>,
    /// Per round: single-flip candidates examined in the flip pass.
    pub flip_evaluations: Vec<u64>,
}

pub fn local_search(x: &[bool], model: &QuboModel, inst: &ArbitrageInstance) -> Result<Vec<bool>> {
    Ok(local_search_traced(x, model, inst, DEFAULT_ROUND_CAP)?.x)
}

struct Searcher<'a> {
    model: &'a QuboModel,
    inst: &'a ArbitrageInstance,
    state: FieldState,
    feasible: bool,
    work: u64,
}

impl Searcher<'_> {
    /// Applies `vars` as a compound move, keeping it under the acceptance rule.
    fn try_move(&mut self, vars: &[usize]) -> bool {
        let before = self.state.energy;
        for &v in vars {
            self.work += self.model.neighbors(v).len() as u64 + 1;
            self.state.flip(self.model, v);
        }
        let improved = self.state.energy < before - IMPROVEMENT_EPS;
        let keep = improved && {
            self.work += self.state.x.len() as u64;
            let now = is_feasible(&self.state.x, self.inst);
            let ok = now || !self.feasible;
            if ok {
                self.feasible = now;
            }
            ok
        };
        if !keep {
            for &v in vars.iter().rev() {
                self.work += self.model.neighbors(v).len() as u64 + 1;
                self.state.flip(self.model, v);
            }
            // Undoing restores the exact energy the move started from.
            self.state.energy = before;
        }
        keep
    }

    fn flip_pass(&mut self) -> (bool, u64) {
        let mut changed = false;
        let n = self.state.x.len();
        for var in 0..n {
            // Non-improving flips are rejected from the cached field alone.
            self.work += 1;
            if self.state.delta(var) >= -IMPROVEMENT_EPS {
                continue;
            }
            changed |= self.try_move(&[var]);
        }
        (changed, n as u64)
    }

    fn swap_block(&mut self, layout: &VariableLayout, position: usize) -> bool {
        let mut changed = false;
        let block = layout.block(position);
        let set: Vec<usize> = block.clone().filter(|&v| self.state.x[v]).collect();
        for mut from in set {
            if !self.state.x[from] {
                continue;
            }
            for to in block.clone() {
                if self.state.x[to] {
                    continue;
                }
                if self.try_move(&[from, to]) {
                    changed = true;
                    from = to;
                }
            }
        }
        changed
    }

    /// Moves the start currency in blocks 0 and K together.
    fn swap_endpoints(&mut self, layout: &VariableLayout) -> bool {
        let k_len = layout.cycle_len();
        let mut changed = false;
        for c in 0..layout.num_currencies() {
            let (first, last) = (layout.index(c, 0), layout.index(c, k_len));
            if !(self.state.x[first] && self.state.x[last]) {
                continue;
            }
            let mut cur = c;
            for d in 0..layout.num_currencies() {
                let (to_first, to_last) = (layout.index(d, 0), layout.index(d, k_len));
                if self.state.x[to_first] || self.state.x[to_last] {
                    continue;
                }
                let from_first = layout.index(cur, 0);
                let from_last = layout.index(cur, k_len);
                if self.try_move(&[from_first, to_first, from_last, to_last]) {
                    changed = true;
                    cur = d;
                }
            }
        }
        changed
    }

    /// Exchanges the contents of two position blocks; block K follows block 0.
    fn exchange_positions(&mut self, layout: &VariableLayout) -> bool {
        let (n_cur, k_len) = (layout.num_currencies(), layout.cycle_len());
        let mut changed = false;
        let mut moves = Vec::new();
        for p in 0..k_len {
            for q in p + 1..k_len {
                moves.clear();
                for c in 0..n_cur {
                    let (vp, vq) = (layout.index(c, p), layout.index(c, q));
                    let (bp, bq) = (self.state.x[vp], self.state.x[vq]);
                    if bp != bq {
                        moves.extend([vp, vq]);
                    }
                    if p == 0 {
                        let vk = layout.index(c, k_len);
                        if self.state.x[vk] != bq {
                            moves.push(vk);
                        }
                    }
                }
                self.work += (3 * n_cur) as u64;
                if !moves.is_empty() {
                    changed |= self.try_move(&moves);
                }
            }
        }
        changed
    }

    /// Set bits of `position`'s block, plus block K when `position` is 0.
    fn clear_list(&mut self, layout: &VariableLayout, position: usize, out: &mut Vec<usize>) {
        let x = &self.state.x;
        let mut scanned = 0;
        let mut push = |p: usize| {
            scanned += layout.num_currencies();
            out.extend(layout.block(p).filter(|&v| x[v]));
        };
        push(position);
        if position == 0 {
            push(layout.cycle_len());
        }
        self.work += scanned as u64;
    }

    /// Rewrites cyclically adjacent positions `p` and `p + 1` to every
    /// currency pair `(a, b)` at once.
    fn reassign_pairs(&mut self, layout: &VariableLayout) -> bool {
        let (n_cur, k_len) = (layout.num_currencies(), layout.cycle_len());
        let pairs = if k_len == 2 { 1 } else { k_len };
        let mut changed = false;
        let mut flips = Vec::new();
        for p in 0..pairs {
            let q = (p + 1) % k_len;
            for a in 0..n_cur {
                for b in 0..n_cur {
                    if a == b {
                        continue;
                    }
                    flips.clear();
                    self.clear_list(layout, p, &mut flips);
                    self.clear_list(layout, q, &mut flips);
                    let mut set = vec![layout.index(a, p), layout.index(b, q)];
                    if p == 0 {
                        set.push(layout.index(a, k_len));
                    }
                    if q == 0 {
                        set.push(layout.index(b, k_len));
                    }
                    // Bits that stay set cancel out of the move.
                    let mut moves: Vec<usize> = flips
                        .iter()
                        .copied()
                        .filter(|v| !set.contains(v))
                        .collect();
                    moves.extend(set.into_iter().filter(|&v| !self.state.x[v]));
                    if moves.is_empty() {
                        continue;
                    }
                    changed |= self.try_move(&moves);
                }
            }
        }
        changed
    }
}

/// Local search with per-round work accounting and an explicit round cap.
pub fn local_search_traced(
    x: &[bool],
    model: &QuboModel,
    inst: &ArbitrageInstance,
    round_cap: usize,
) -> Result<LocalSearchTrace> {
    if x.len() != model.len() {
        return Err(Error::LengthMismatch {
            expected: model.len(),
            found: x.len(),
        });
    }
    let layout = VariableLayout::new(inst.num_currencies(), inst.cycle_len());
    if layout.len() != model.len() {
        return Err(Error::LengthMismatch {
            expected: layout.len(),
            found: model.len(),
        });
    }
    let start_energy = model.energy(x);
    let mut s = Searcher {
        model,
        inst,
        state: FieldState::new(model, x.to_vec()),
        feasible: is_feasible(x, inst),
        work: 0,
    };
    let mut trace = LocalSearchTrace {
        x: Vec::new(),
        rounds: 0,
        work: Vec::new(),
        flip_evaluations: Vec::new(),
    };
    for _ in 0..round_cap {
        s.work = 0;
        let (mut changed, evaluations) = s.flip_pass();
        for position in 0..=layout.cycle_len() {
            changed |= s.swap_block(&layout, position);
        }
        changed |= s.swap_endpoints(&layout);
        changed |= s.reassign_pairs(&layout);
        changed |= s.exchange_positions(&layout);
        trace.rounds += 1;
        trace.work.push(s.work);
        trace.flip_evaluations.push(evaluations);
        if !changed {
            break;
        }
    }
    let out = s.state.x;
    // Incremental bookkeeping drifts by rounding only; never hand back a worse point.
    if model.energy(&out) > start_energy {
        trace.x = x.to_vec();
    } else {
        trace.x = out;
    }
    Ok(trace)
}
