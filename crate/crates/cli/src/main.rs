use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arbiq::bench::{parse_solver_list, run_benchmark, run_solver, BenchConfig, SolverKind};
use arbiq::model::build_qubo;
use arbiq::quantum::{ace_execute, ace_ls, AceConfig, TrainedParams};
use arbiq::solvers::{SolverConfig, SolverReport};
use arbiq::{ArbitrageInstance, ExchangeMatrix, Penalties, PenaltyWeights};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_ERROR: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

/// Currency-arbitrage cycle search over a penalised QUBO.
#[derive(Parser, Debug)]
#[command(name = "arbiq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance with one solver and print a report row.
    Solve(SolveArgs),
    /// Run the solver suite over a range of cycle lengths.
    Bench(BenchArgs),
    /// Write the QUBO for one instance in `a b coeff` text form.
    ExportQubo(ExportArgs),
}

#[derive(clap::Args, Debug)]
struct SolveArgs {
    /// Rate matrix, CSV or JSON.
    #[arg(long)]
    data: PathBuf,
    /// Number of currencies in the cycle.
    #[arg(long)]
    k: usize,
    /// oracle, sa, tabu or ace-ls.
    #[arg(long)]
    solver: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Uniform penalty weight instead of the calibrated bound.
    #[arg(long)]
    penalty: Option<f64>,
    /// Runs with seeds seed..seed+repeats and keeps the best.
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    /// Trained ACE parameters to execute instead of training (ace-ls only).
    #[arg(long)]
    params_in: Option<PathBuf>,
    /// Where to save the trained ACE parameters of the best run (ace-ls only).
    #[arg(long)]
    params_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(clap::Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    /// Comma-separated list of oracle, sa, tabu, ace-ls.
    #[arg(long, default_value = "oracle,sa,tabu,ace-ls")]
    solvers: String,
    /// Number of seeds per stochastic solver.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    penalty: Option<f64>,
    /// Output directory for profits.csv, timings.csv, run.json and report.md.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Md,
}

type CliResult<T> = Result<T, String>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => solve(&args),
        Command::Bench(args) => bench(&args).map(|()| 0),
        Command::ExportQubo(args) => export_qubo(&args).map(|()| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn load_matrix(path: &Path) -> CliResult<ExchangeMatrix> {
    ExchangeMatrix::from_path(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn penalties(value: Option<f64>) -> CliResult<Penalties> {
    match value {
        None => Ok(Penalties::Auto),
        Some(v) => PenaltyWeights::uniform(v)
            .map(Penalties::Manual)
            .map_err(|e| e.to_string()),
    }
}

fn instance(data: &Path, k: usize) -> CliResult<ArbitrageInstance> {
    let matrix = load_matrix(data)?;
    ArbitrageInstance::new(matrix, k).map_err(|e| e.to_string())
}

/// Lower is better: feasible before infeasible, then by energy.
fn better(a: &SolverReport, b: &SolverReport) -> bool {
    (a.feasible && !b.feasible) || (a.feasible == b.feasible && a.energy < b.energy)
}

fn solve(args: &SolveArgs) -> CliResult<u8> {
    let kind: SolverKind = args.solver.parse().map_err(|e: arbiq::Error| e.to_string())?;
    if args.repeats == 0 {
        return Err("--repeats must be at least 1".into());
    }
    let uses_params = args.params_in.is_some() || args.params_out.is_some();
    if uses_params && kind != SolverKind::AceLs {
        return Err("--params-in and --params-out apply to ace-ls only".into());
    }
    let inst = instance(&args.data, args.k)?;
    let model = build_qubo(&inst, penalties(args.penalty)?).map_err(|e| e.to_string())?;
    let solver_cfg = SolverConfig::default();
    let ace_cfg = AceConfig::default();

    let repeats = if kind == SolverKind::Oracle { 1 } else { args.repeats };
    let mut best: Option<(SolverReport, Option<TrainedParams>)> = None;
    let loaded = match &args.params_in {
        Some(path) => Some(TrainedParams::load(path).map_err(|e| format!("{}: {e}", path.display()))?),
        None => None,
    };
    for r in 0..repeats {
        let seed = args.seed + r;
        let (report, trained) = match (kind, &loaded) {
            (SolverKind::AceLs, Some(params)) => (
                ace_execute(params, &model, &inst, ace_cfg.shots, seed).map_err(|e| e.to_string())?,
                None,
            ),
            (SolverKind::AceLs, None) => {
                let (t, rep) = ace_ls(&model, &inst, &ace_cfg, seed).map_err(|e| e.to_string())?;
                (rep, Some(t))
            }
            _ => (
                run_solver(kind, &inst, &model, &solver_cfg, &ace_cfg, seed).map_err(|e| e.to_string())?,
                None,
            ),
        };
        if best.as_ref().is_none_or(|(b, _)| better(&report, b)) {
            best = Some((report, trained));
        }
    }
    let (report, trained) = best.expect("at least one repeat");
    if let (Some(path), Some(t)) = (&args.params_out, &trained) {
        t.save(path).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    print!("{}", render(&report, args.format)?);
    if report.feasible {
        Ok(0)
    } else {
        eprintln!("no cycle: no feasible cycle of length {} found", args.k);
        Ok(EXIT_INFEASIBLE)
    }
}

fn cycle_text(report: &SolverReport) -> String {
    if report.feasible {
        report.cycle.join("-")
    } else {
        "no cycle".to_string()
    }
}

fn render(report: &SolverReport, format: Format) -> CliResult<String> {
    let cols = [
        report.solver.clone(),
        report.feasible.to_string(),
        cycle_text(report),
        format!("{:.6}", report.profit_pips),
        format!("{:.9}", report.energy),
        format!("{:.3}", report.elapsed_ms),
    ];
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(report).map_err(|e| e.to_string())? + "\n",
        Format::Csv => format!(
            "solver,feasible,cycle,profit_pips,energy,elapsed_ms\n{}\n",
            cols.join(",")
        ),
        Format::Md => format!(
            "| solver | feasible | cycle | profit_pips | energy | elapsed_ms |\n|---|---|---|---|---|---|\n| {} |\n",
            cols.join(" | ")
        ),
    })
}

fn bench(args: &BenchArgs) -> CliResult<()> {
    let solvers = parse_solver_list(&args.solvers).map_err(|e| e.to_string())?;
    if args.k_min > args.k_max {
        return Err(format!("--k-min {} exceeds --k-max {}", args.k_min, args.k_max));
    }
    let matrix = load_matrix(&args.data)?;
    let mut cfg = BenchConfig::new(args.data.display().to_string(), args.k_min, args.k_max, solvers);
    cfg.seeds = args.seeds;
    cfg.seed = args.seed;
    cfg.penalties = penalties(args.penalty)?;
    let run = run_benchmark(&matrix, &cfg).map_err(|e| e.to_string())?;
    run.write_outputs(&args.out)
        .map_err(|e| format!("{}: {e}", args.out.display()))?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", run.profits_csv().map_err(|e| e.to_string())?);
    Ok(())
}

fn export_qubo(args: &ExportArgs) -> CliResult<()> {
    let inst = instance(&args.data, args.k)?;
    let model = build_qubo(&inst, penalties(args.penalty)?).map_err(|e| e.to_string())?;
    let file = std::fs::File::create(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    model
        .write_text(std::io::BufWriter::new(file))
        .map_err(|e| format!("{}: {e}", args.out.display()))?;
    Ok(())
}
