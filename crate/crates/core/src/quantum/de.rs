use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

/// rand/1/bin differential evolution settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population: usize,
    /// Differential weight F.
    pub weight: f64,
    /// Crossover probability CR.
    pub crossover: f64,
    pub generations: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population: 30,
            weight: 0.7,
            crossover: 0.9,
            generations: 150,
            lower: 0.0,
            upper: TAU,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::Config(format!(
                "population must be at least 4, got {}",
                self.population
            )));
        }
        if !(self.weight > 0.0 && self.weight <= 2.0) {
            return Err(Error::Config(format!("weight F must be in (0, 2], got {}", self.weight)));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::Config(format!(
                "crossover CR must be in [0, 1], got {}",
                self.crossover
            )));
        }
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::Config(format!(
                "bounds [{}, {}] are not a finite interval",
                self.lower, self.upper
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DeOutcome<T> {
    pub params: Vec<f64>,
    pub energy: f64,
    pub payload: T,
    /// Best energy after initialisation and after every generation.
    pub trace: Vec<f64>,
    pub evaluations: u64,
}

/// Minimises `eval` over the box `[lower, upper]^dim`.
///
/// `eval` receives a candidate and its evaluation index (0-based, in
/// creation order) and returns the energy plus a payload kept for the best
/// candidate. Candidates of one generation are evaluated in parallel; all
/// random draws happen on the calling thread, so results do not depend on
/// the thread count.
pub fn differential_evolution<T, F>(
    dim: usize,
    cfg: &DeConfig,
    seed: u64,
    eval: F,
) -> Result<DeOutcome<T>>
where
    T: Send + Clone,
    F: Fn(&[f64], u64) -> (f64, T) + Sync,
{
    cfg.validate()?;
    if dim == 0 {
        return Err(Error::Config("nothing to optimise: zero parameters".into()));
    }
    let p = cfg.population;
    let mut rng = rng_from(seed);
    let mut pop: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..dim).map(|_| rng.gen_range(cfg.lower..cfg.upper)).collect())
        .collect();
    let mut evaluations = 0u64;
    let evaluate = |cands: &[Vec<f64>], first: u64| -> Vec<(f64, T)> {
        cands
            .par_iter()
            .enumerate()
            .map(|(i, c)| eval(c, first + i as u64))
            .collect()
    };
    let scored = evaluate(&pop, evaluations);
    evaluations += p as u64;
    let mut fitness: Vec<f64> = scored.iter().map(|s| s.0).collect();

    let (best_i, _) = fitness
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &f)| if f < acc.1 { (i, f) } else { acc });
    let mut best = (fitness[best_i], pop[best_i].clone(), scored[best_i].1.clone());
    let mut trace = Vec::with_capacity(cfg.generations + 1);
    trace.push(best.0);

    for _ in 0..cfg.generations {
        let trials: Vec<Vec<f64>> = (0..p)
            .map(|i| {
                let pick = |rng: &mut crate::rng::SolverRng, taken: &[usize]| loop {
                    let r = rng.gen_range(0..p);
                    if !taken.contains(&r) {
                        break r;
                    }
                };
                let r1 = pick(&mut rng, &[i]);
                let r2 = pick(&mut rng, &[i, r1]);
                let r3 = pick(&mut rng, &[i, r1, r2]);
                let forced = rng.gen_range(0..dim);
                (0..dim)
                    .map(|d| {
                        if d == forced || rng.gen::<f64>() < cfg.crossover {
                            let v = pop[r1][d] + cfg.weight * (pop[r2][d] - pop[r3][d]);
                            v.clamp(cfg.lower, cfg.upper)
                        } else {
                            pop[i][d]
                        }
                    })
                    .collect()
            })
            .collect();
        let scored = evaluate(&trials, evaluations);
        evaluations += p as u64;
        for (i, (trial, (f, payload))) in trials.into_iter().zip(scored).enumerate() {
            if f <= fitness[i] {
                if f < best.0 {
                    best = (f, trial.clone(), payload);
                }
                fitness[i] = f;
                pop[i] = trial;
            }
        }
        trace.push(best.0);
    }
    Ok(DeOutcome {
        params: best.1,
        energy: best.0,
        payload: best.2,
        trace,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64], _: u64) -> (f64, ()) {
        (x.iter().map(|v| (v - 1.0).powi(2)).sum(), ())
    }

    #[test]
    fn minimises_a_sphere() {
        let cfg = DeConfig {
            generations: 200,
            ..DeConfig::default()
        };
        let out = differential_evolution(3, &cfg, 1, sphere).unwrap();
        assert!(out.energy < 1e-6, "{}", out.energy);
        assert_eq!(out.trace.len(), 201);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.evaluations, 30 * 201);
    }

    #[test]
    fn zero_generations_keeps_the_initial_best() {
        let cfg = DeConfig {
            generations: 0,
            ..DeConfig::default()
        };
        let out = differential_evolution(2, &cfg, 4, sphere).unwrap();
        assert_eq!(out.trace, vec![out.energy]);
        assert_eq!(out.evaluations, 30);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            DeConfig { population: 3, ..DeConfig::default() },
            DeConfig { weight: 0.0, ..DeConfig::default() },
            DeConfig { crossover: 1.5, ..DeConfig::default() },
            DeConfig { lower: 1.0, upper: 1.0, ..DeConfig::default() },
        ];
        for cfg in bad {
            assert!(differential_evolution(2, &cfg, 0, sphere).is_err());
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let cfg = DeConfig {
            generations: 20,
            ..DeConfig::default()
        };
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| differential_evolution(4, &cfg, 7, sphere).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.params, b.params);
        assert_eq!(a.trace, b.trace);
    }
}
