use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use expansive_lab_cli::{configure_threads, oracle, registry, runner, EXIT_OK, EXIT_VIOLATION};

#[derive(Parser)]
#[command(name = "expansive-lab", version, about = "Numerical experiments on measure-expansive flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Directory for the report files, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in systems and their parameters.
    ListSystems,
    /// Compare the flow-ball decision procedure with exhaustive enumeration.
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let code = match cli.command {
        Command::Run { config, out } => match runner::run(&config, out.as_deref()) {
            Ok(outcome) => {
                for c in &outcome.checks {
                    println!("{:<12} {:?}: {}", c.name, c.status, c.detail);
                }
                println!("verdict: {:?}", outcome.report.verdict);
                println!("report: {}", outcome.report_path.display());
                println!("csv: {}", outcome.csv_path.display());
                outcome.exit_code
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::ListSystems => {
            print!("{}", registry::list_systems());
            EXIT_OK
        }
        Command::OracleCheck { instances, seed } => match oracle::oracle_check(instances, seed) {
            Ok(s) => {
                for d in &s.disagreements {
                    println!("disagreement: {d}");
                }
                println!("agreement {}/{} ({} accepted)", s.agreements, s.instances, s.accepted);
                if s.all_agree() { EXIT_OK } else { EXIT_VIOLATION }
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Version => {
            println!("expansive-lab {}", env!("CARGO_PKG_VERSION"));
            EXIT_OK
        }
    };
    ExitCode::from(code as u8)
}
