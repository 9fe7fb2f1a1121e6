use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use timeopt::commands::{self, PropsuiteOptions, SolveOptions};
use timeopt::problem_file::ToleranceOverrides;
use timeopt::CliError;

#[derive(Parser)]
#[command(name = "timeopt", version, about = "Time-optimal bang-bang control of linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and print or write the report.
    Solve {
        /// Problem file (JSON).
        input: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV with columns t,x1..xn,u1..um.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// CSV with the switching map norm and components.
        #[arg(long = "plot-data")]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Print one of the built-in examples as a problem file.
    Examples {
        /// a1, a2, a3, a4 or proper-subset.
        name: String,
        /// Amplitude of the a4 multiplier; may be negative.
        #[arg(long, allow_negative_numbers = true)]
        xi: Option<f64>,
    },
    /// Run the randomized property suite.
    Propsuite {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Largest state dimension, at most 12.
        #[arg(long = "nmax", default_value_t = 4)]
        n_max: usize,
        /// Directory for per-trial reports and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
}

#[derive(Args, Default)]
struct TolArgs {
    #[arg(long = "tol-rank")]
    rank: Option<f64>,
    #[arg(long = "tol-time")]
    time: Option<f64>,
    #[arg(long = "tol-zero")]
    zero: Option<f64>,
    #[arg(long = "tol-quad")]
    quad: Option<f64>,
    /// Random restarts of the sphere search.
    #[arg(long = "tol-restarts")]
    restarts: Option<usize>,
    #[arg(long = "tol-imag")]
    imag: Option<f64>,
    #[arg(long = "tol-order")]
    order: Option<f64>,
    #[arg(long = "tol-const")]
    constant: Option<f64>,
    /// Give up as inadmissible past this horizon.
    #[arg(long = "tol-horizon-cap")]
    horizon_cap: Option<f64>,
    #[arg(long = "tol-seed", id = "tol_seed")]
    optimizer_seed: Option<u64>,
}

impl TolArgs {
    fn overrides(&self) -> ToleranceOverrides {
        ToleranceOverrides {
            rank_tol: self.rank,
            time_tol: self.time,
            zero_tol: self.zero,
            quad_tol: self.quad,
            sphere_restarts: self.restarts,
            imag_tol: self.imag,
            order_tol: self.order,
            const_tol: self.constant,
            horizon_cap: self.horizon_cap,
            seed: self.optimizer_seed,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { input, out, trajectory, plot_data, tol } => {
            let opts = SolveOptions { out: out.clone(), trajectory, plot_data, overrides: tol.overrides() };
            let report = commands::solve(&input, &opts)?;
            if out.is_none() {
                println!("{}", report.to_json());
            }
            match commands::failures(&report) {
                Some(records) => Err(CliError::Inconsistency(format!("checks failed\n{records}"))),
                None => Ok(()),
            }
        }
        Command::Examples { name, xi } => {
            println!("{}", commands::examples(&name, xi)?.to_json());
            Ok(())
        }
        Command::Propsuite { seed, trials, n_max, out, tol } => {
            let summary =
                commands::propsuite(&PropsuiteOptions { seed, trials, n_max, out, overrides: tol.overrides() })?;
            print!("{}", commands::summary_text(&summary));
            if summary.passed == summary.trials {
                Ok(())
            } else {
                let records: Vec<String> = summary
                    .outcomes
                    .iter()
                    .flat_map(|o| o.discrepancies.iter())
                    .map(|d| serde_json::to_string(d).expect("discrepancies serialize"))
                    .collect();
                Err(CliError::Inconsistency(format!(
                    "{} of {} trials failed\n{}",
                    summary.trials - summary.passed,
                    summary.trials,
                    records.join("\n")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
