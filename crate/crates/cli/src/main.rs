use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elasticflow::io::fmt15;
use elasticflow::validation::DEFAULT_SEED;
use elasticflow_cli::commands::{self, SpecialFn, SweepParam};
use elasticflow_cli::config::CONFIG_HELP;
use elasticflow_cli::CliError;

#[derive(Parser)]
#[command(
    name = "elasticflow",
    version,
    about = "Obstacle-constrained elastic flow of graphs",
    after_help = "Exit codes: 0 success, 1 check failure, 2 usage or config error, 3 numerical nonconvergence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a minimizing-movement flow described by a JSON config.
    #[command(after_help = CONFIG_HELP)]
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Run obstacles that violate Assumption 1.
        #[arg(long)]
        allow_invalid_obstacle: bool,
        /// Continue from the checkpoint in --out up to the config's t_end.
        #[arg(long)]
        resume: bool,
    },
    /// Compute the symmetric critical point over a cone.
    Critical {
        #[arg(long)]
        height: f64,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write critical.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Rearrange a nonnegative `x,value` profile and solve the symmetric comparison problem.
    Rearrange {
        #[arg(long)]
        input: PathBuf,
        /// Output CSV with columns x,f,f_star,f_sym,v.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate special functions.
    Specialfn {
        #[command(subcommand)]
        action: SpecialfnAction,
    },
    /// Run the acceptance suite and write validation_report.json.
    Validate {
        /// Fewer random samples.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a config once per parameter value, in parallel, into --out/case_NNN.
    #[command(after_help = CONFIG_HELP)]
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        #[arg(long)]
        allow_invalid_obstacle: bool,
    },
}

#[derive(Subcommand)]
enum SpecialfnAction {
    /// Print one value per argument (`uc` takes c first, then the x values).
    Eval {
        #[arg(long = "fn", value_enum)]
        which: SpecialFn,
        #[arg(long, num_args = 0.., allow_negative_numbers = true)]
        args: Vec<f64>,
    },
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            allow_invalid_obstacle,
            resume,
        } => commands::cmd_simulate(&config, &out, allow_invalid_obstacle, resume).map(|_| 0),
        Command::Critical { height, n, out, plot } => commands::cmd_critical(height, n, &out, plot).map(|_| 0),
        Command::Rearrange { input, out } => commands::cmd_rearrange(&input, &out).map(|_| 0),
        Command::Specialfn {
            action: SpecialfnAction::Eval { which, args },
        } => {
            for v in commands::eval_specialfn(which, &args)? {
                println!("{}", fmt15(v));
            }
            Ok(0)
        }
        Command::Validate { quick, seed, out } => {
            let report = commands::cmd_validate(quick, seed, &out)?;
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Sweep {
            config,
            out,
            param,
            values,
            allow_invalid_obstacle,
        } => commands::cmd_sweep(&config, &out, param, &values, allow_invalid_obstacle)
            .map(|cases| commands::sweep_exit_code(&cases)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
