use std::io::{Read, Write};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::circuit::{qubit_count, run_circuit, Ansatz, CircuitSpec};
use super::de::{differential_evolution, DeConfig};
use super::measure::{decode_distribution, measure, Shots};
use crate::error::{Error, Result};
use crate::market::ArbitrageInstance;
use crate::model::QuboModel;
use crate::rng::derive_seed;
use crate::solvers::{local_search_traced, SolverReport, DEFAULT_ROUND_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AceConfig {
    pub ansatz: Ansatz,
    pub layers: usize,
    pub de: DeConfig,
    pub shots: Shots,
}

impl Default for AceConfig {
    fn default() -> Self {
        Self {
            ansatz: Ansatz::Circuit2,
            layers: 2,
            de: DeConfig::default(),
            shots: Shots::Exact,
        }
    }
}

/// Result of a training run, persisted as JSON between training and
/// execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedParams {
    pub ansatz: Ansatz,
    pub layers: usize,
    pub qubits: usize,
    pub num_variables: usize,
    pub params: Vec<f64>,
    pub seed: u64,
    pub shots: Shots,
    /// [`QuboModel::fingerprint`] of the training model.
    pub model_fingerprint: String,
    #[serde(with = "crate::solvers::bits")]
    pub best_bitstring: Vec<bool>,
    pub best_energy: f64,
    /// Best energy after initialisation and after each generation.
    pub trace: Vec<f64>,
    pub evaluations: u64,
}

impl TrainedParams {
    pub fn spec(&self) -> Result<CircuitSpec> {
        CircuitSpec::new(self.qubits, self.ansatz, self.layers, self.params.clone())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self> {
        let p: Self = serde_json::from_reader(input)?;
        p.spec()?;
        Ok(p)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_json(std::io::BufWriter::new(file))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read_json(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn check_compatible(&self, model: &QuboModel) -> Result<()> {
        if self.num_variables != model.len() {
            return Err(Error::ModelMismatch(format!(
                "trained for {} variables, model has {}",
                self.num_variables,
                model.len()
            )));
        }
        let q = qubit_count(model.len())?;
        if self.qubits != q {
            return Err(Error::ModelMismatch(format!(
                "trained on {} qubits, model needs {q}",
                self.qubits
            )));
        }
        let fp = model.fingerprint();
        if self.model_fingerprint != fp {
            return Err(Error::ModelMismatch(format!(
                "fingerprint {} differs from model {fp}",
                self.model_fingerprint
            )));
        }
        Ok(())
    }
}

/// Bitstring read off the circuit with parameters `spec`.
pub fn sample_bitstring(spec: &CircuitSpec, n: usize, shots: Shots, seed: u64) -> Result<Vec<bool>> {
    let state = run_circuit(spec)?;
    let dist = measure(&state, shots, seed)?;
    Ok(decode_distribution(&dist, n))
}

/// Trains the circuit angles with differential evolution on the energy of
/// the decoded bitstring.
pub fn ace_train(model: &QuboModel, cfg: &AceConfig, seed: u64) -> Result<TrainedParams> {
    let n = model.len();
    let skeleton = CircuitSpec::for_variables(n, cfg.ansatz, cfg.layers)?;
    if let Shots::Sampled(0) = cfg.shots {
        return Err(Error::ZeroShots);
    }
    let de_seed = derive_seed(seed, 0);
    let outcome = differential_evolution(skeleton.num_params(), &cfg.de, de_seed, |theta, idx| {
        let spec = CircuitSpec {
            params: theta.to_vec(),
            ..skeleton.clone()
        };
        // Only fails on a parameter-length mismatch, which the skeleton rules out.
        let x = sample_bitstring(&spec, n, cfg.shots, derive_seed(seed, idx + 1))
            .expect("skeleton-sized parameters");
        (model.energy(&x), x)
    })?;
    Ok(TrainedParams {
        ansatz: cfg.ansatz,
        layers: cfg.layers,
        qubits: skeleton.qubits,
        num_variables: n,
        params: outcome.params,
        seed,
        shots: cfg.shots,
        model_fingerprint: model.fingerprint(),
        best_bitstring: outcome.payload,
        best_energy: outcome.energy,
        trace: outcome.trace,
        evaluations: outcome.evaluations,
    })
}

/// Runs the trained circuit once, decodes it and polishes the result with
/// local search. Reported as solver `ace-ls`.
pub fn ace_execute(
    trained: &TrainedParams,
    model: &QuboModel,
    inst: &ArbitrageInstance,
    shots: Shots,
    seed: u64,
) -> Result<SolverReport> {
    execute_inner(trained, model, inst, shots, seed, Duration::ZERO)
}

fn execute_inner(
    trained: &TrainedParams,
    model: &QuboModel,
    inst: &ArbitrageInstance,
    shots: Shots,
    seed: u64,
    already: Duration,
) -> Result<SolverReport> {
    let started = Instant::now();
    trained.check_compatible(model)?;
    let spec = trained.spec()?;
    let raw = sample_bitstring(&spec, model.len(), shots, seed)?;
    let trace = local_search_traced(&raw, model, inst, DEFAULT_ROUND_CAP)?;
    SolverReport::new(
        "ace-ls",
        trace.x,
        model,
        inst,
        already + started.elapsed(),
        trace.rounds as u64,
        seed,
    )
}

/// Train then execute with the same seed; the elapsed time covers both.
pub fn ace_ls(
    model: &QuboModel,
    inst: &ArbitrageInstance,
    cfg: &AceConfig,
    seed: u64,
) -> Result<(TrainedParams, SolverReport)> {
    let started = Instant::now();
    let trained = ace_train(model, cfg, seed)?;
    let report = execute_inner(&trained, model, inst, cfg.shots, seed, started.elapsed())?;
    Ok((trained, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::ExchangeMatrix;
    use crate::model::{build_qubo, Penalties};

    #[test]
    fn reload_reproduces_best_energy() {
        let inst = ArbitrageInstance::new(ExchangeMatrix::table_one(), 2).unwrap();
        let q = build_qubo(&inst, Penalties::Auto).unwrap();
        let cfg = AceConfig {
            de: DeConfig {
                generations: 10,
                ..DeConfig::default()
            },
            ..AceConfig::default()
        };
        let trained = ace_train(&q, &cfg, 3).unwrap();
        assert_eq!(trained.qubits, 7);
        assert_eq!(trained.params.len(), 14);
        assert_eq!(trained.trace.len(), 11);

        let mut buf = Vec::new();
        trained.write_json(&mut buf).unwrap();
        let back = TrainedParams::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, trained);
        let x = sample_bitstring(&back.spec().unwrap(), q.len(), Shots::Exact, 0).unwrap();
        assert_eq!(x, trained.best_bitstring);
        assert!((q.energy(&x) - trained.best_energy).abs() < 1e-9);

        let report = ace_execute(&back, &q, &inst, Shots::Exact, 0).unwrap();
        assert!(report.energy <= trained.best_energy + 1e-9);
        assert_eq!(report.solver, "ace-ls");
    }

    #[test]
    fn mismatched_model_is_rejected() {
        let inst2 = ArbitrageInstance::new(ExchangeMatrix::table_one(), 2).unwrap();
        let inst3 = inst2.with_cycle_len(3).unwrap();
        let q2 = build_qubo(&inst2, Penalties::Auto).unwrap();
        let q3 = build_qubo(&inst3, Penalties::Auto).unwrap();
        let cfg = AceConfig {
            de: DeConfig {
                generations: 1,
                ..DeConfig::default()
            },
            ..AceConfig::default()
        };
        let trained = ace_train(&q2, &cfg, 0).unwrap();
        assert!(matches!(
            ace_execute(&trained, &q3, &inst3, Shots::Exact, 0),
            Err(Error::ModelMismatch(_))
        ));
        let heavier = build_qubo(
            &inst2,
            Penalties::Manual(crate::PenaltyWeights::uniform(100.0).unwrap()),
        )
        .unwrap();
        assert!(matches!(
            ace_execute(&trained, &heavier, &inst2, Shots::Exact, 0),
            Err(Error::ModelMismatch(_))
        ));
    }
}
