use rand::Rng;
use serde::{Deserialize, Serialize};

use super::circuit::Statevector;
use crate::error::{Error, Result};
use crate::rng::rng_from;

pub const DEFAULT_SHOTS: u64 = 4096;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shots {
    #[default]
    Exact,
    Sampled(u64),
}

/// Outcome probabilities split by register index and ancilla bit.
///
/// The ancilla is the last qubit; the register is the other `q - 1` qubits
/// read big-endian, so basis index `b` maps to `(b >> 1, b & 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AceDistribution {
    /// `probs[r] = [P(r, a = 0), P(r, a = 1)]`.
    pub probs: Vec<[f64; 2]>,
    pub shots: Shots,
    /// Raw outcome counts in sampled mode.
    pub counts: Option<Vec<[u64; 2]>>,
}

impl AceDistribution {
    pub fn from_probs(probs: Vec<[f64; 2]>) -> Self {
        Self {
            probs,
            shots: Shots::Exact,
            counts: None,
        }
    }

    pub fn registers(&self) -> usize {
        self.probs.len()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().map(|p| p[0] + p[1]).sum()
    }
}

pub fn measure(state: &Statevector, shots: Shots, seed: u64) -> Result<AceDistribution> {
    let probs = state.probabilities();
    let registers = probs.len() / 2;
    let cell = |b: usize| (b >> 1, b & 1);
    match shots {
        Shots::Exact => {
            let mut out = vec![[0.0; 2]; registers];
            for (b, &p) in probs.iter().enumerate() {
                let (r, a) = cell(b);
                out[r][a] += p;
            }
            Ok(AceDistribution::from_probs(out))
        }
        Shots::Sampled(0) => Err(Error::ZeroShots),
        Shots::Sampled(count) => {
            let mut cumulative = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for &p in &probs {
                acc += p;
                cumulative.push(acc);
            }
            let mut rng = rng_from(seed);
            let mut counts = vec![[0u64; 2]; registers];
            for _ in 0..count {
                let u = rng.gen::<f64>() * acc;
                let b = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
                let (r, a) = cell(b);
                counts[r][a] += 1;
            }
            let probs = counts
                .iter()
                .map(|c| [c[0] as f64 / count as f64, c[1] as f64 / count as f64])
                .collect();
            Ok(AceDistribution {
                probs,
                shots,
                counts: Some(counts),
            })
        }
    }
}

/// Reads variable `i` from register state `i`: 1 when the ancilla is at
/// least as likely to be 1 as 0, 0 when the register state never occurs.
/// Register states at or beyond `n` are ignored.
pub fn decode_distribution(dist: &AceDistribution, n: usize) -> Vec<bool> {
    (0..n)
        .map(|i| match dist.probs.get(i) {
            Some(&[p0, p1]) => {
                let total = p0 + p1;
                total > 0.0 && p1 >= p0
            }
            None => false,
        })
        .collect()
}
