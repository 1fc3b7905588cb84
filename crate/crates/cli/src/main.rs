use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nonfick_cli::{exit, presets, run_scenario, verify, CliError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "nonfick", version, about = "Non-Fickian penetrant diffusion solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a TOML file or a built-in preset name.
    Run {
        config: String,
        /// Output directory (overrides output.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// `section.key=value` override, repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Plant a known defect to confirm the suite detects it.
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// List built-in presets.
    Presets,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FaultArg {
    FlipStressFlux,
    FlipDiffusion,
}

fn load(config: &str, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    let path = std::path::Path::new(config);
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        ScenarioConfig::parse_with_overrides(&text, overrides)
    } else if presets::find(config).is_some() {
        presets::load_with_overrides(config, overrides)
    } else {
        Err(CliError::Config(format!("'{config}' is neither a readable file nor a preset name")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Presets => {
            for p in presets::PRESETS {
                println!("{:<18} {}", p.name, p.description);
            }
            exit::ACCEPTED
        }
        Command::Verify { inject_fault } => {
            let fault = inject_fault.map(|f| match f {
                FaultArg::FlipStressFlux => verify::Fault::FlipStressFlux,
                FaultArg::FlipDiffusion => verify::Fault::FlipDiffusion,
            });
            let results = verify::run_all(&verify::VerifyOptions { fault, ..Default::default() });
            for r in &results {
                println!("{}", r.line());
            }
            if results.iter().all(|r| r.passed) {
                exit::ACCEPTED
            } else {
                exit::VERIFY_FAILED
            }
        }
        Command::Run { config, out, overrides } => {
            match load(&config, &overrides).and_then(|cfg| run_scenario(&cfg, out.as_deref())) {
                Ok(outcome) => {
                    print!("{}", outcome.summary);
                    outcome.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
