use serde::{Deserialize, Serialize};

/// Position-major indexing of the `N(K+1)` placement variables:
/// `index(i, k) = k * N + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariableLayout {
    num_currencies: usize,
    cycle_len: usize,
}

impl VariableLayout {
    pub fn new(num_currencies: usize, cycle_len: usize) -> Self {
        Self {
            num_currencies,
            cycle_len,
        }
    }

    pub fn num_currencies(&self) -> usize {
        self.num_currencies
    }

    pub fn cycle_len(&self) -> usize {
        self.cycle_len
    }

    /// Number of positions, `K + 1`.
    pub fn positions(&self) -> usize {
        self.cycle_len + 1
    }

    /// Total variable count `N(K+1)`.
    pub fn len(&self) -> usize {
        self.num_currencies * self.positions()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, currency: usize, position: usize) -> usize {
        debug_assert!(currency < self.num_currencies && position <= self.cycle_len);
        position * self.num_currencies + currency
    }

    /// Inverse of [`index`](Self::index): `(currency, position)`.
    #[inline]
    pub fn locate(&self, var: usize) -> (usize, usize) {
        (var % self.num_currencies, var / self.num_currencies)
    }

    /// Variable range of one position block.
    pub fn block(&self, position: usize) -> std::ops::Range<usize> {
        let start = position * self.num_currencies;
        start..start + self.num_currencies
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_a_bijection() {
        for n in 2..6 {
            for k in 2..=n {
                let layout = VariableLayout::new(n, k);
                assert_eq!(layout.len(), n * (k + 1));
                let mut seen = vec![false; layout.len()];
                for pos in 0..=k {
                    for c in 0..n {
                        let v = layout.index(c, pos);
                        assert!(!seen[v]);
                        seen[v] = true;
                        assert_eq!(layout.locate(v), (c, pos));
                    }
                }
                assert!(seen.into_iter().all(|s| s));
            }
        }
    }

    #[test]
    fn variable_counts_for_fourteen_currencies() {
        let counts: Vec<usize> = (2..=10).map(|k| VariableLayout::new(14, k).len()).collect();
        assert_eq!(counts, vec![42, 56, 70, 84, 98, 112, 126, 140, 154]);
    }
}
