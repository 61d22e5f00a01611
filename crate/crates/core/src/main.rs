//! Command-line front end: instance loading, solver dispatch, QUBO/Ising
//! export, solution reports and train diagrams.
//!
//! Exit codes: 0 feasible result, 1 usage error, 2 infeasible or failed.

use clap::{Args, Parser, Subcommand, ValueEnum};
use railqubo::io::{diagram::DiagramData, export, load_instance};
use railqubo::model::{RailwayInstance, Schedule};
use railqubo::qubo::build_qubo;
use railqubo::solvers::{
    self, EnumerationMode, Heuristic, OrderObjective, SaParams, SolverReport,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "railqubo",
    about = "Single-track railway rescheduling via QUBO and classical solvers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write a report, schedule table and diagram.
    Solve(SolveArgs),
    /// Export the compiled QUBO or its Ising form as coordinate text.
    Export(ExportArgs),
    /// Emit a train diagram (CSV + SVG) for a timetable or solution.
    Diagram(DiagramArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Instance file path or built-in fixture name
    /// (line216, line191-reconstructed, crossing).
    #[arg(long)]
    instance: String,
    /// Override the one-hot penalty weight.
    #[arg(long)]
    p_sum: Option<f64>,
    /// Override the pair penalty weight.
    #[arg(long)]
    p_pair: Option<f64>,
    /// Override the maximum secondary delay for every train.
    #[arg(long)]
    d_max: Option<i64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Enumerate,
    Sa,
    Order,
    Fcfs,
    Flfs,
    Amcc,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    method: Method,
    /// Seed for stochastic methods.
    #[arg(long, default_value_t = 0x5EED)]
    seed: u64,
    /// Annealing sweeps.
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    /// Annealing restarts.
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    /// Spectrum levels kept by the enumerate method.
    #[arg(long, default_value_t = 8)]
    levels: usize,
    /// Enumeration space.
    #[arg(long, value_enum, default_value_t = EnumSpace::Restricted)]
    space: EnumSpace,
    /// Output directory for report, schedule, diagram and spectrum files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnumSpace {
    Full,
    Restricted,
    SingleViolations,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    format: ExportFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Qubo,
    Ising,
}

#[derive(Args)]
struct DiagramArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which delays to draw: the plain timetable, the disturbance with
    /// unavoidable delays only, or a solved schedule.
    #[arg(long, value_enum, default_value_t = DiagramView::Timetable)]
    view: DiagramView,
    /// Solver used by `--view solved`.
    #[arg(long, value_enum, default_value_t = Method::Order)]
    method: Method,
    /// Seed for stochastic methods.
    #[arg(long, default_value_t = 0x5EED)]
    seed: u64,
    /// Output directory for diagram.csv and diagram.svg.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagramView {
    Timetable,
    Conflicted,
    Solved,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(feasible) => {
            if feasible {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(common: &CommonArgs) -> Result<RailwayInstance, Box<dyn std::error::Error>> {
    let mut inst = load_instance(&common.instance)?;
    if let Some(d) = common.d_max {
        inst.d_max = vec![d; inst.trains.len()];
    }
    if let Some(p) = common.p_sum {
        inst.p_sum = p;
    }
    if let Some(p) = common.p_pair {
        inst.p_pair = p;
    }
    Ok(inst)
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Export(args) => cmd_export(args),
        Command::Diagram(args) => cmd_diagram(args),
    }
}

fn write_or_print(out: &Option<PathBuf>, name: &str, content: &str) -> std::io::Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), content)
        }
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<bool, Box<dyn std::error::Error>> {
    let inst = load(&args.common)?;
    let (p_sum, p_pair) = (inst.p_sum, inst.p_pair);
    if !railqubo::qubo::penalties_dominate(&inst, p_sum, p_pair) {
        eprintln!(
            "warning: penalties ({p_sum}, {p_pair}) do not dominate the largest train weight; \
             infeasible configurations may win"
        );
    }
    let mut spectrum_file = None;
    let mut report: SolverReport = match args.method {
        Method::Enumerate => {
            let qubo = build_qubo(&inst, p_sum, p_pair)?;
            let mode = match args.space {
                EnumSpace::Full => EnumerationMode::Full,
                EnumSpace::Restricted => EnumerationMode::OneHotRestricted,
                EnumSpace::SingleViolations => EnumerationMode::OneHotPlusSingleViolations,
            };
            let spectrum = solvers::enumerate_spectrum(&qubo, mode, args.levels)?;
            let ground = spectrum.ground();
            let mut text = String::from("energy degeneracy feasible\n");
            for level in &spectrum.levels {
                text.push_str(&format!(
                    "{:.9} {} {}\n",
                    level.energy,
                    level.degeneracy,
                    level.feasible()
                ));
            }
            spectrum_file = Some(text);
            let bits = ground.representatives[0].clone();
            let mut report = SolverReport::from_bits(
                "enumerate",
                &qubo,
                bits,
                vec![
                    ("p_sum".into(), p_sum.to_string()),
                    ("p_pair".into(), p_pair.to_string()),
                    ("levels".into(), args.levels.to_string()),
                ],
            )?;
            report.ground_degeneracy = Some(ground.degeneracy);
            report
        }
        Method::Sa => {
            let qubo = build_qubo(&inst, p_sum, p_pair)?;
            let params = SaParams {
                sweeps: args.sweeps,
                restarts: args.restarts,
                seed: args.seed,
                ..Default::default()
            };
            let outcome = solvers::simulated_annealing(&qubo, &params);
            SolverReport::from_bits(
                "sa",
                &qubo,
                outcome.best_bits,
                vec![
                    ("p_sum".into(), p_sum.to_string()),
                    ("p_pair".into(), p_pair.to_string()),
                    ("sweeps".into(), params.sweeps.to_string()),
                    ("restarts".into(), params.restarts.to_string()),
                    ("seed".into(), params.seed.to_string()),
                ],
            )?
        }
        Method::Order => {
            let solution = solvers::exact_order_solver(&inst, OrderObjective::WeightedSum)?;
            schedule_report(&inst, "order", solution.schedule, p_sum, p_pair)?
        }
        Method::Fcfs | Method::Flfs | Method::Amcc => {
            let heuristic = match args.method {
                Method::Fcfs => Heuristic::Fcfs,
                Method::Flfs => Heuristic::Flfs,
                _ => Heuristic::Amcc,
            };
            let solution = solvers::dispatch(&inst, heuristic)?;
            schedule_report(&inst, heuristic.name(), solution.schedule, p_sum, p_pair)?
        }
    };
    report.attach_signature(&inst);

    write_or_print(&args.out, "report.txt", &report.render(&inst))?;
    if let Some(text) = spectrum_file {
        write_or_print(&args.out, "spectrum.txt", &text)?;
    }
    if let Some(schedule) = &report.schedule {
        let diagram = DiagramData::from_schedule(&inst, schedule)?;
        if let Some(dir) = &args.out {
            std::fs::write(dir.join("diagram.csv"), diagram.to_csv(&inst))?;
            std::fs::write(dir.join("diagram.svg"), diagram.to_svg(&inst))?;
        }
    }
    Ok(report.feasible)
}

fn schedule_report(
    inst: &RailwayInstance,
    method: &str,
    schedule: Schedule,
    p_sum: f64,
    p_pair: f64,
) -> Result<SolverReport, Box<dyn std::error::Error>> {
    let qubo = build_qubo(inst, p_sum, p_pair)?;
    let bits = qubo.encode(&schedule)?;
    Ok(SolverReport::from_bits(
        method,
        &qubo,
        bits,
        vec![
            ("p_sum".into(), p_sum.to_string()),
            ("p_pair".into(), p_pair.to_string()),
        ],
    )?)
}

fn cmd_export(args: ExportArgs) -> Result<bool, Box<dyn std::error::Error>> {
    let inst = load(&args.common)?;
    let qubo = build_qubo(&inst, inst.p_sum, inst.p_pair)?;
    let text = match args.format {
        ExportFormat::Qubo => export::write_qubo(&qubo),
        ExportFormat::Ising => export::write_ising(&qubo.to_ising()),
    };
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn cmd_diagram(args: DiagramArgs) -> Result<bool, Box<dyn std::error::Error>> {
    let inst = load(&args.common)?;
    let schedule = match args.view {
        DiagramView::Timetable => Schedule::undisturbed(&inst),
        DiagramView::Conflicted => {
            let d_u = inst.unavoidable_delays();
            Schedule::unavoidable(&inst, &d_u)
        }
        DiagramView::Solved => match args.method {
            Method::Order | Method::Enumerate => {
                solvers::exact_order_solver(&inst, OrderObjective::WeightedSum)?.schedule
            }
            Method::Sa => {
                let qubo = build_qubo(&inst, inst.p_sum, inst.p_pair)?;
                let outcome = solvers::simulated_annealing(
                    &qubo,
                    &SaParams {
                        seed: args.seed,
                        ..Default::default()
                    },
                );
                qubo.decode(&outcome.best_bits)?
            }
            Method::Fcfs => solvers::fcfs(&inst)?.schedule,
            Method::Flfs => solvers::flfs(&inst)?.schedule,
            Method::Amcc => solvers::amcc(&inst)?.schedule,
        },
    };
    let diagram = DiagramData::from_schedule(&inst, &schedule)?;
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("diagram.csv"), diagram.to_csv(&inst))?;
            std::fs::write(dir.join("diagram.svg"), diagram.to_svg(&inst))?;
        }
        None => print!("{}", diagram.to_csv(&inst)),
    }
    Ok(true)
}
