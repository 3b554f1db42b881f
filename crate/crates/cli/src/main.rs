use std::path::PathBuf;
use std::process::ExitCode;

use burgers_ocp::study::{Format, Reference, DEFAULT_LEVELS};
use burgers_ocp::{
    emit, h1_seminorm_error, l2_error, resolve_problem, run_eoc_control, run_eoc_state,
    run_grad_check, solve_ocp, EocTable, Error, FixedControl, Mesh, Method, OcpOptions,
    OcpProblem, OcpSolution,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

/// Finite element optimal control of the steady Burgers equation.
#[derive(Debug, Parser)]
#[command(name = "burgers-ocp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Catalog name (`example-e`) or path to a JSON problem file.
    #[arg(long, default_value = "example-e")]
    problem: String,

    /// Overrides the Tikhonov weight of the problem.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Gradient)]
    method: MethodArg,

    #[arg(long, default_value_t = 1e-7)]
    tol: f64,

    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Gradient,
    Bfgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReferenceArg {
    Exact,
    Fine,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the discrete control problem on one mesh.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write control, state and adjoint nodal values as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Control convergence study against the exact solution.
    EocControl {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEVELS)]
        levels: Vec<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format; inferred from the `--out` extension when omitted.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// State and adjoint convergence with the control fixed at the exact one.
    EocState {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEVELS)]
        levels: Vec<usize>,
        #[arg(long, value_enum, default_value_t = ReferenceArg::Exact)]
        reference: ReferenceArg,
        /// Elements of the fine reference mesh (default 16 x finest level).
        #[arg(long)]
        n_ref: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Compare the reduced gradient with central differences.
    GradCheck {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 21)]
        n: usize,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl SolverArgs {
    fn options(&self) -> OcpOptions {
        OcpOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            method: match self.method {
                MethodArg::Gradient => Method::Gradient,
                MethodArg::Bfgs => Method::Bfgs,
            },
            initial: None,
        }
    }
}

fn load(args: &ProblemArgs) -> Result<OcpProblem, Error> {
    resolve_problem(&args.problem, args.lambda)
}

fn exit_code(err: &Error) -> u8 {
    if err.is_nonconvergence() {
        2
    } else {
        1
    }
}

fn write_table(
    table: &EocTable,
    out: Option<&PathBuf>,
    format: Option<FormatArg>,
) -> Result<(), Error> {
    let format = match (format, out) {
        (Some(FormatArg::Csv), _) => Format::Csv,
        (Some(FormatArg::Json), _) => Format::Json,
        (None, Some(path)) => Format::from_path(path),
        (None, None) => Format::Csv,
    };
    match out {
        Some(path) => emit(table, format, path),
        None => {
            match format {
                Format::Csv => print!("{}", table.to_csv()),
                Format::Json => println!("{}", table.to_json()?),
            }
            Ok(())
        }
    }
}

fn solution_json(problem: &OcpProblem, mesh: &Mesh, sol: &OcpSolution) -> serde_json::Value {
    let mut summary = json!({
        "problem": problem.name,
        "n": mesh.n(),
        "h": mesh.h(),
        "lambda": problem.lambda,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "vi_residual": sol.vi_residual,
        "converged": sol.converged,
    });
    if let Some(exact) = &problem.exact {
        summary["err_u"] = json!(l2_error(&sol.control, &exact.u));
        summary["err_y_l2"] = json!(l2_error(&sol.state, &exact.y));
        summary["err_y_h1"] = json!(h1_seminorm_error(&sol.state, &exact.y));
        summary["err_p"] = json!(l2_error(&sol.adjoint_state, &exact.p));
    }
    json!({
        "summary": summary,
        "nodes": mesh.nodes(),
        "control": sol.control.values(),
        "state": sol.state.values(),
        "adjoint": sol.adjoint_state.values(),
        "step_history": sol.step_history,
    })
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve {
            problem,
            n,
            solver,
            out,
        } => {
            let problem = load(&problem)?;
            let mesh = Mesh::new(n)?;
            let (sol, code) = match solve_ocp(&problem, &mesh, &solver.options()) {
                Ok(sol) => (sol, 0),
                Err(Error::OcpNonconvergence(sol)) => (*sol, 2),
                Err(e) => return Err(e),
            };
            let doc = solution_json(&problem, &mesh, &sol);
            println!("{}", serde_json::to_string_pretty(&doc["summary"])?);
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
            }
            Ok(code)
        }
        Command::EocControl {
            problem,
            levels,
            solver,
            out,
            format,
        } => {
            let problem = load(&problem)?;
            let table = run_eoc_control(&problem, &levels, &solver.options())?;
            write_table(&table, out.as_ref(), format)?;
            Ok(if table.rows.iter().all(|r| r.converged) { 0 } else { 2 })
        }
        Command::EocState {
            problem,
            levels,
            reference,
            n_ref,
            out,
            format,
        } => {
            let problem = load(&problem)?;
            let reference = match (reference, n_ref) {
                (ReferenceArg::Exact, _) => Reference::Exact,
                (ReferenceArg::Fine, Some(n_ref)) => Reference::Fine { n_ref },
                (ReferenceArg::Fine, None) => Reference::fine_for(&levels),
            };
            let table = run_eoc_state(&problem, &levels, reference, FixedControl::Exact)?;
            write_table(&table, out.as_ref(), format)?;
            Ok(0)
        }
        Command::GradCheck {
            problem,
            n,
            eps,
            seed,
        } => {
            let problem = load(&problem)?;
            let report = run_grad_check(&problem, n, eps, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonconvergence_maps_to_two() {
        let report = burgers_ocp::NewtonReport {
            iterations: 50,
            residual_history: vec![1.0],
            damping_events: 0,
            converged: false,
            viscosity_ok: false,
        };
        assert_eq!(exit_code(&Error::NewtonNonconvergence(Box::new(report))), 2);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 1);
    }

    #[test]
    fn parses_level_lists() {
        let cli = Cli::try_parse_from(["burgers-ocp", "eoc-control", "--levels", "8,16"]).unwrap();
        match cli.command {
            Command::EocControl { levels, .. } => assert_eq!(levels, vec![8, 16]),
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["burgers-ocp", "solve"]).is_err());
    }
}
