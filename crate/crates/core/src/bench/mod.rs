//! Solver suite runner and report writer.
//!
//! A run covers every `(K, solver, seed)` cell of a grid. Cells execute on a
//! bounded rayon pool and are collected in cell order, so outputs other
//! than wall-clock timings do not depend on the pool size.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{ArbitrageInstance, ExchangeMatrix};
use crate::model::{build_qubo, encode, Penalties, QuboModel};
use crate::oracle::{best_cycle, OracleResult};
use crate::quantum::{ace_ls, qubit_count, AceConfig};
use crate::solvers::{simulated_annealing, tabu_search, SolverConfig, SolverReport};

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "ARBIQ_THREADS";

/// Profit tolerance when checking solver results against the oracle.
const ORACLE_SLACK_PIPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "sa")]
    Sa,
    #[serde(rename = "tabu")]
    Tabu,
    #[serde(rename = "ace-ls")]
    AceLs,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Oracle, SolverKind::Sa, SolverKind::Tabu, SolverKind::AceLs];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Oracle => "oracle",
            SolverKind::Sa => "sa",
            SolverKind::Tabu => "tabu",
            SolverKind::AceLs => "ace-ls",
        }
    }

    /// Column heading used in CSV and markdown reports.
    pub fn label(self) -> &'static str {
        match self {
            SolverKind::Oracle => "Oracle (exact)",
            SolverKind::Sa => "SA (QA surrogate)",
            SolverKind::Tabu => "TS",
            SolverKind::AceLs => "ACE-LS",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver {s:?} (expected oracle, sa, tabu or ace-ls)")))
    }
}

/// Parses a comma-separated solver list, dropping duplicates.
pub fn parse_solver_list(text: &str) -> Result<Vec<SolverKind>> {
    let mut out: Vec<SolverKind> = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let kind: SolverKind = part.parse()?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("solver list is empty".into()));
    }
    Ok(out)
}

/// Builds the oracle's answer as a solver report, using the all-zero
/// bitstring when no cycle exists.
pub fn oracle_report(inst: &ArbitrageInstance, model: &QuboModel) -> Result<(OracleResult, SolverReport)> {
    let result = best_cycle(inst);
    let x = match (result.found(), model.layout()) {
        (true, Some(layout)) => encode(result.best.cycle(), layout)?,
        _ => vec![false; model.len()],
    };
    let elapsed = Duration::from_secs_f64(result.elapsed_ms / 1e3);
    let report = SolverReport::new("oracle", x, model, inst, elapsed, result.explored, 0)?;
    Ok((result, report))
}

/// Runs one solver with the given seed.
pub fn run_solver(
    kind: SolverKind,
    inst: &ArbitrageInstance,
    model: &QuboModel,
    solver: &SolverConfig,
    ace: &AceConfig,
    seed: u64,
) -> Result<SolverReport> {
    match kind {
        SolverKind::Oracle => oracle_report(inst, model).map(|(_, r)| r),
        SolverKind::Sa => simulated_annealing(model, inst, &solver.clone().with_seed(seed)),
        SolverKind::Tabu => tabu_search(model, inst, &solver.clone().with_seed(seed)),
        SolverKind::AceLs => ace_ls(model, inst, ace, seed).map(|(_, r)| r),
    }
}

/// Reads `ARBIQ_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Recorded in the run; the matrix itself is passed separately.
    pub dataset: String,
    pub k_min: usize,
    pub k_max: usize,
    pub solvers: Vec<SolverKind>,
    /// Seeds `seed .. seed + seeds` are run for every stochastic solver.
    pub seeds: u64,
    pub seed: u64,
    pub penalties: Penalties,
    pub solver: SolverConfig,
    pub ace: AceConfig,
    /// Worker pool size; `None` defers to `ARBIQ_THREADS`, then to rayon.
    pub threads: Option<usize>,
}

impl BenchConfig {
    pub fn new(dataset: impl Into<String>, k_min: usize, k_max: usize, solvers: Vec<SolverKind>) -> Self {
        Self {
            dataset: dataset.into(),
            k_min,
            k_max,
            solvers,
            seeds: 5,
            seed: 0,
            penalties: Penalties::Auto,
            solver: SolverConfig::default(),
            ace: AceConfig::default(),
            threads: None,
        }
    }

    fn validate(&self, matrix: &ExchangeMatrix) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::Config("solver list is empty".into()));
        }
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(Error::Config(format!(
                "invalid K range {}..={}",
                self.k_min, self.k_max
            )));
        }
        if self.k_max > matrix.len() {
            return Err(Error::KOutOfRange {
                k: self.k_max,
                n: matrix.len(),
            });
        }
        if self.seeds == 0 {
            return Err(Error::Config("at least one seed is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub k: usize,
    pub num_variables: usize,
    pub qubits: usize,
    pub model_fingerprint: String,
    pub oracle_feasible: bool,
    pub oracle_cycle: Vec<String>,
    pub oracle_profit_pips: f64,
    pub oracle_cycles_explored: u64,
    pub oracle_elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub k: usize,
    pub solver: SolverKind,
    /// Oracle optimum for this K, carried on every row.
    pub oracle_profit_pips: f64,
    pub report: SolverReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub schema_version: u32,
    pub dataset: String,
    pub k_min: usize,
    pub k_max: usize,
    pub solvers: Vec<SolverKind>,
    pub seeds: u64,
    pub global_seed: u64,
    pub emitted_at_unix: u64,
    pub instances: Vec<InstanceSummary>,
    pub reports: Vec<CellReport>,
    pub warnings: Vec<String>,
}

/// Summary value of one (K, solver) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfitCell {
    Profit(f64),
    Infeasible,
}

impl fmt::Display for ProfitCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfitCell::Profit(p) => write!(f, "{p:.4}"),
            ProfitCell::Infeasible => f.write_str("infeasible"),
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 0 {
        (values[m - 1] + values[m]) / 2.0
    } else {
        values[m]
    }
}

struct Instance {
    inst: ArbitrageInstance,
    model: QuboModel,
}

pub fn run_benchmark(matrix: &ExchangeMatrix, cfg: &BenchConfig) -> Result<BenchmarkRun> {
    cfg.validate(matrix)?;
    let threads = match cfg.threads {
        Some(t) => Some(t),
        None => threads_from_env()?,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Bench(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_in_pool(matrix, cfg))
}

fn run_in_pool(matrix: &ExchangeMatrix, cfg: &BenchConfig) -> Result<BenchmarkRun> {
    let ks: Vec<usize> = (cfg.k_min..=cfg.k_max).collect();
    let instances: Vec<Instance> = ks
        .iter()
        .map(|&k| {
            let inst = ArbitrageInstance::new(matrix.clone(), k)?;
            let model = build_qubo(&inst, cfg.penalties)?;
            Ok(Instance { inst, model })
        })
        .collect::<Result<_>>()?;

    let mut summaries = Vec::with_capacity(ks.len());
    let mut oracle_rows = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let Instance { inst, model } = &instances[i];
        let (result, report) = oracle_report(inst, model)?;
        summaries.push(InstanceSummary {
            k,
            num_variables: model.len(),
            qubits: qubit_count(model.len())?,
            model_fingerprint: model.fingerprint(),
            oracle_feasible: result.found(),
            oracle_cycle: report.cycle.clone(),
            oracle_profit_pips: result.best.profit_pips,
            oracle_cycles_explored: result.explored,
            oracle_elapsed_ms: result.elapsed_ms,
        });
        oracle_rows.push(report);
    }

    // Sorted cell keys: K, then solver in the requested order, then seed.
    let mut cells = Vec::new();
    for i in 0..ks.len() {
        for &kind in cfg.solvers.iter().filter(|&&k| k != SolverKind::Oracle) {
            for s in 0..cfg.seeds {
                cells.push((i, kind, cfg.seed + s));
            }
        }
    }
    let results: Vec<Result<SolverReport>> = cells
        .par_iter()
        .map(|&(i, kind, seed)| {
            let Instance { inst, model } = &instances[i];
            run_solver(kind, inst, model, &cfg.solver, &cfg.ace, seed)
        })
        .collect();

    let mut reports = Vec::new();
    let mut cell_results = cells.into_iter().zip(results).peekable();
    for (i, &k) in ks.iter().enumerate() {
        let oracle_profit = summaries[i].oracle_profit_pips;
        for &kind in &cfg.solvers {
            if kind == SolverKind::Oracle {
                reports.push(CellReport {
                    k,
                    solver: kind,
                    oracle_profit_pips: oracle_profit,
                    report: oracle_rows[i].clone(),
                });
                continue;
            }
            while let Some(((ci, ckind, _), _)) = cell_results.peek() {
                if *ci != i || *ckind != kind {
                    break;
                }
                let (_, result) = cell_results.next().unwrap();
                reports.push(CellReport {
                    k,
                    solver: kind,
                    oracle_profit_pips: oracle_profit,
                    report: result?,
                });
            }
        }
    }

    let mut run = BenchmarkRun {
        schema_version: SCHEMA_VERSION,
        dataset: cfg.dataset.clone(),
        k_min: cfg.k_min,
        k_max: cfg.k_max,
        solvers: cfg.solvers.clone(),
        seeds: cfg.seeds,
        global_seed: cfg.seed,
        emitted_at_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        instances: summaries,
        reports,
        warnings: Vec::new(),
    };
    run.validate()?;
    run.warnings = run.timing_warnings();
    Ok(run)
}

impl BenchmarkRun {
    /// Every feasible solver result must be a real cycle no better than the
    /// oracle optimum.
    pub fn validate(&self) -> Result<()> {
        for row in &self.reports {
            let summary = self
                .instances
                .iter()
                .find(|s| s.k == row.k)
                .ok_or_else(|| Error::Bench(format!("no instance for K = {}", row.k)))?;
            if !row.report.feasible {
                continue;
            }
            if !summary.oracle_feasible {
                return Err(Error::Bench(format!(
                    "{} reports a cycle at K = {} where the oracle found none",
                    row.solver, row.k
                )));
            }
            if row.report.profit_pips > summary.oracle_profit_pips + ORACLE_SLACK_PIPS {
                return Err(Error::Bench(format!(
                    "{} beats the oracle at K = {}: {} > {} pips",
                    row.solver, row.k, row.report.profit_pips, summary.oracle_profit_pips
                )));
            }
        }
        Ok(())
    }

    fn ks(&self) -> Vec<usize> {
        self.instances.iter().map(|s| s.k).collect()
    }

    fn rows(&self, k: usize, kind: SolverKind) -> impl Iterator<Item = &SolverReport> {
        self.reports
            .iter()
            .filter(move |r| r.k == k && r.solver == kind)
            .map(|r| &r.report)
    }

    /// Best profit across seeds.
    pub fn profit(&self, k: usize, kind: SolverKind) -> ProfitCell {
        self.rows(k, kind)
            .filter(|r| r.feasible)
            .map(|r| r.profit_pips)
            .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))))
            .map_or(ProfitCell::Infeasible, ProfitCell::Profit)
    }

    /// Median wall time across seeds.
    pub fn timing(&self, k: usize, kind: SolverKind) -> f64 {
        let mut t: Vec<f64> = self.rows(k, kind).map(|r| r.elapsed_ms).collect();
        if t.is_empty() {
            0.0
        } else {
            median(&mut t)
        }
    }

    fn timing_warnings(&self) -> Vec<String> {
        let ks = self.ks();
        let (Some(&first), Some(&last)) = (ks.first(), ks.last()) else {
            return Vec::new();
        };
        if first == last {
            return Vec::new();
        }
        self.solvers
            .iter()
            .filter(|&&kind| kind != SolverKind::AceLs)
            .filter_map(|&kind| {
                let (a, b) = (self.timing(first, kind), self.timing(last, kind));
                (b <= a).then(|| {
                    format!(
                        "{} median time did not grow from K = {first} ({a:.3} ms) to K = {last} ({b:.3} ms)",
                        kind.label()
                    )
                })
            })
            .collect()
    }

    fn table<F: Fn(usize, SolverKind) -> String>(&self, cell: F) -> (Vec<String>, Vec<Vec<String>>) {
        let mut header = vec!["K".to_string(), "n".to_string()];
        header.extend(self.solvers.iter().map(|s| s.label().to_string()));
        let rows = self
            .instances
            .iter()
            .map(|inst| {
                let mut row = vec![inst.k.to_string(), inst.num_variables.to_string()];
                row.extend(self.solvers.iter().map(|&s| cell(inst.k, s)));
                row
            })
            .collect();
        (header, rows)
    }

    fn profit_table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        self.table(|k, s| self.profit(k, s).to_string())
    }

    fn timing_table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        self.table(|k, s| format!("{:.3}", self.timing(k, s)))
    }

    fn csv_of((header, rows): (Vec<String>, Vec<Vec<String>>)) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Bench(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Bench(e.to_string()))
    }

    pub fn profits_csv(&self) -> Result<String> {
        Self::csv_of(self.profit_table())
    }

    pub fn timings_csv(&self) -> Result<String> {
        Self::csv_of(self.timing_table())
    }

    pub fn report_md(&self) -> String {
        fn md((header, rows): (Vec<String>, Vec<Vec<String>>)) -> String {
            let mut out = format!("| {} |\n", header.join(" | "));
            out += &format!("|{}\n", "---|".repeat(header.len()));
            for row in rows {
                out += &format!("| {} |\n", row.join(" | "));
            }
            out
        }
        let mut out = String::new();
        out += "# Arbitrage benchmark\n\n";
        out += &format!(
            "Dataset `{}`, K = {}..={}, {} seed(s) from {}.\n\n",
            self.dataset, self.k_min, self.k_max, self.seeds, self.global_seed
        );
        out += "## Profit (pips)\n\nBest profit across seeds. `infeasible` means no seed produced a valid cycle.\n\n";
        out += &md(self.profit_table());
        out += "\n## Execution time (ms)\n\nMedian wall time across seeds.\n\n";
        out += &md(self.timing_table());
        out += "\nThe oracle is exhaustive enumeration. The SA column is classical \
                simulated annealing standing in for an annealer, and ACE-LS runs on \
                a statevector simulator; neither is a hardware result.\n";
        if !self.warnings.is_empty() {
            out += "\n## Warnings\n\n";
            for w in &self.warnings {
                out += &format!("- {w}\n");
            }
        }
        out
    }

    /// Writes `profits.csv`, `timings.csv`, `run.json` and `report.md`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("profits.csv"), self.profits_csv()?)?;
        std::fs::write(dir.join("timings.csv"), self.timings_csv()?)?;
        std::fs::write(dir.join("run.json"), serde_json::to_string_pretty(self)?)?;
        std::fs::write(dir.join("report.md"), self.report_md())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_run(solvers: Vec<SolverKind>, threads: usize) -> BenchmarkRun {
        let mut cfg = BenchConfig::new("table", 2, 3, solvers);
        cfg.seeds = 2;
        cfg.threads = Some(threads);
        cfg.solver.sweeps = 50;
        cfg.solver.restarts = Some(2);
        run_benchmark(&ExchangeMatrix::table_one(), &cfg).unwrap()
    }

    #[test]
    fn solver_names() {
        for kind in SolverKind::ALL {
            assert_eq!(kind.name().parse::<SolverKind>().unwrap(), kind);
            assert_eq!(serde_json::to_string(&kind).unwrap(), format!("\"{kind}\""));
        }
        assert!("gurobi".parse::<SolverKind>().is_err());
        assert_eq!(
            parse_solver_list("tabu, oracle,tabu").unwrap(),
            vec![SolverKind::Tabu, SolverKind::Oracle]
        );
        assert!(parse_solver_list(" , ").is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn rows_carry_the_oracle_and_stay_below_it() {
        let run = small_run(vec![SolverKind::Oracle, SolverKind::Tabu, SolverKind::Sa], 2);
        assert_eq!(run.schema_version, 1);
        assert_eq!(run.reports.len(), 2 * (1 + 2 + 2));
        for row in &run.reports {
            let s = run.instances.iter().find(|s| s.k == row.k).unwrap();
            assert_eq!(row.oracle_profit_pips, s.oracle_profit_pips);
        }
        let csv = run.profits_csv().unwrap();
        assert!(csv.starts_with("K,n,Oracle (exact),TS,SA (QA surrogate)\n"));
        assert!(csv.contains("\n2,42,67.4080,"));
    }

    #[test]
    fn pool_size_does_not_change_results() {
        let strip = |run: BenchmarkRun| -> Vec<SolverReport> {
            run.reports.into_iter().map(|r| r.report.without_timing()).collect()
        };
        let a = small_run(vec![SolverKind::Sa, SolverKind::Tabu], 1);
        let b = small_run(vec![SolverKind::Sa, SolverKind::Tabu], 4);
        assert_eq!(a.profits_csv().unwrap(), b.profits_csv().unwrap());
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn invalid_configs() {
        let m = ExchangeMatrix::table_one();
        let bad = [
            BenchConfig::new("t", 3, 2, vec![SolverKind::Oracle]),
            BenchConfig::new("t", 1, 2, vec![SolverKind::Oracle]),
            BenchConfig::new("t", 2, 15, vec![SolverKind::Oracle]),
            BenchConfig::new("t", 2, 3, vec![]),
        ];
        for cfg in bad {
            assert!(run_benchmark(&m, &cfg).is_err());
        }
    }

    #[test]
    fn validation_rejects_a_profit_above_the_oracle() {
        let mut run = small_run(vec![SolverKind::Oracle, SolverKind::Tabu], 1);
        let row = run
            .reports
            .iter_mut()
            .find(|r| r.solver == SolverKind::Tabu && r.report.feasible)
            .unwrap();
        row.report.profit_pips = row.oracle_profit_pips + 1.0;
        assert!(matches!(run.validate(), Err(Error::Bench(_))));
    }

    #[test]
    fn markdown_matches_csv_values() {
        let run = small_run(vec![SolverKind::Oracle, SolverKind::Tabu], 1);
        let md = run.report_md();
        for line in run.profits_csv().unwrap().lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            assert!(md.contains(&format!("| {} |", cells.join(" | "))), "{line}");
        }
    }
}
