use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hardware-efficient layer templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ansatz {
    /// RY and RZ on every qubit, then CZ on each neighbouring pair `(i, i + 1)`.
    Circuit1,
    /// RY on every qubit, then a CNOT ring `i -> (i + 1) mod q` applied
    /// from `i = q - 1` down to `i = 0`.
    Circuit2,
}

impl Ansatz {
    pub fn params_per_layer(self, qubits: usize) -> usize {
        match self {
            Ansatz::Circuit1 => 2 * qubits,
            Ansatz::Circuit2 => qubits,
        }
    }
}

impl fmt::Display for Ansatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ansatz::Circuit1 => "circuit1",
            Ansatz::Circuit2 => "circuit2",
        })
    }
}

impl FromStr for Ansatz {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circuit1" => Ok(Ansatz::Circuit1),
            "circuit2" => Ok(Ansatz::Circuit2),
            other => Err(Error::Config(format!("unknown ansatz {other:?}"))),
        }
    }
}

/// Register plus ancilla qubits needed to encode `n` variables:
/// `ceil(log2 n) + 1`.
pub fn qubit_count(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Config("at least one variable is required".into()));
    }
    let register = (usize::BITS - (n - 1).leading_zeros()) as usize;
    Ok(register + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub qubits: usize,
    pub ansatz: Ansatz,
    pub layers: usize,
    pub params: Vec<f64>,
}

impl CircuitSpec {
    pub fn new(qubits: usize, ansatz: Ansatz, layers: usize, params: Vec<f64>) -> Result<Self> {
        if qubits == 0 || qubits > 24 {
            return Err(Error::Config(format!("qubit count {qubits} outside 1..=24")));
        }
        if layers == 0 {
            return Err(Error::Config("at least one layer is required".into()));
        }
        let expected = Self::param_count(ansatz, layers, qubits);
        if params.len() != expected {
            return Err(Error::ParamLength {
                expected,
                found: params.len(),
            });
        }
        Ok(Self {
            qubits,
            ansatz,
            layers,
            params,
        })
    }

    /// Spec sized for a model with `n` variables, all angles zero.
    pub fn for_variables(n: usize, ansatz: Ansatz, layers: usize) -> Result<Self> {
        let qubits = qubit_count(n)?;
        let params = vec![0.0; Self::param_count(ansatz, layers, qubits)];
        Self::new(qubits, ansatz, layers, params)
    }

    pub fn param_count(ansatz: Ansatz, layers: usize, qubits: usize) -> usize {
        layers * ansatz.params_per_layer(qubits)
    }

    pub fn num_params(&self) -> usize {
        Self::param_count(self.ansatz, self.layers, self.qubits)
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        Self::new(self.qubits, self.ansatz, self.layers, params)
    }
}

/// Amplitudes over `2^q` basis states. Qubit 0 is the most significant bit
/// of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn zero(qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { qubits, amps }
    }

    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut s = Self {
            qubits,
            amps: vec![Complex64::new(0.0, 0.0); 1 << qubits],
        };
        s.amps[index] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn mask(&self, qubit: usize) -> usize {
        assert!(qubit < self.qubits, "qubit {qubit} out of range");
        1 << (self.qubits - 1 - qubit)
    }

    /// Applies the 2x2 matrix `[[m00, m01], [m10, m11]]` to `qubit`.
    pub fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let bit = self.mask(qubit);
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                continue;
            }
            let (a0, a1) = (self.amps[i], self.amps[i | bit]);
            self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    pub fn h(&mut self, qubit: usize) {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_single(qubit, [[s, s], [s, -s]]);
    }

    pub fn ry(&mut self, qubit: usize, theta: f64) {
        let (sin, cos) = (theta / 2.0).sin_cos();
        let (c, s) = (Complex64::new(cos, 0.0), Complex64::new(sin, 0.0));
        self.apply_single(qubit, [[c, -s], [s, c]]);
    }

    pub fn rz(&mut self, qubit: usize, theta: f64) {
        let zero = Complex64::new(0.0, 0.0);
        let half = theta / 2.0;
        self.apply_single(
            qubit,
            [
                [Complex64::from_polar(1.0, -half), zero],
                [zero, Complex64::from_polar(1.0, half)],
            ],
        );
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        assert_ne!(control, target);
        let (c, t) = (self.mask(control), self.mask(target));
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        assert_ne!(a, b);
        let both = self.mask(a) | self.mask(b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & both == both {
                *amp = -*amp;
            }
        }
    }
}

/// Hadamard on every qubit, then `layers` copies of the ansatz layer.
pub fn run_circuit(spec: &CircuitSpec) -> Result<Statevector> {
    let q = spec.qubits;
    if spec.params.len() != spec.num_params() {
        return Err(Error::ParamLength {
            expected: spec.num_params(),
            found: spec.params.len(),
        });
    }
    let mut state = Statevector::zero(q);
    for j in 0..q {
        state.h(j);
    }
    let per_layer = spec.ansatz.params_per_layer(q);
    for layer in spec.params.chunks(per_layer) {
        match spec.ansatz {
            Ansatz::Circuit1 => {
                for j in 0..q {
                    state.ry(j, layer[j]);
                    state.rz(j, layer[q + j]);
                }
                for j in 0..q.saturating_sub(1) {
                    state.cz(j, j + 1);
                }
            }
            Ansatz::Circuit2 => {
                for j in 0..q {
                    state.ry(j, layer[j]);
                }
                if q > 1 {
                    // Ring closes first: (q-1 -> 0), then (q-2 -> q-1) down to (0 -> 1).
                    for j in (0..q).rev() {
                        state.cnot(j, (j + 1) % q);
                    }
                }
            }
        }
    }
    Ok(state)
}
