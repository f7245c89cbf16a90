use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use seqvcg::mechanism::ValuationQuadruple;
use seqvcg::rational::parse_rational;
use seqvcg::Rational;
use seqvcg_cli::commands::{cmd_run, cmd_verify, cmd_witness, ClaimKind};
use seqvcg_cli::config::{parse_ordering_selection, parse_type_value, OrderingSelection, ScenarioConfig};
use seqvcg_cli::tables::{builtin_scenario, cmd_tables};
use seqvcg_cli::{CliError, CommandOutput, Format, Status};

/// Sequential Clarke mechanisms: simulate, verify, reproduce reference tables.
#[derive(Parser)]
#[command(name = "seqvcg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play the scenario in each selected ordering and report announcements, taxes and utilities.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Check a claim by exhaustive enumeration over the scenario grid.
    Verify {
        #[arg(value_enum)]
        claim: ClaimKind,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Spacing of generated grid points (overrides the grid in the file).
        #[arg(long, value_parser = rational_arg)]
        grid_step: Option<Rational>,
        /// Maximum number of grid profiles to enumerate.
        #[arg(long)]
        cap: Option<u128>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Recompute the reference tables and compare every cell.
    Tables {
        /// Only this table (1, 1a, 2, 2a, 3, 3a, 4, 4a).
        #[arg(long)]
        table: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Construct valuations of another player that make truth-telling strictly better.
    Witness {
        /// True type of the deviating player.
        #[arg(long, value_parser = type_arg)]
        theta: seqvcg::TypeValue,
        /// The deviation.
        #[arg(long, value_parser = type_arg)]
        theta_prime: seqvcg::TypeValue,
        /// v(d, θ): value of the truthful decision at the true type.
        #[arg(long, value_parser = rational_arg, allow_negative_numbers = true)]
        v_d_theta: Rational,
        /// v(d, θ'): value of the truthful decision at the deviation.
        #[arg(long, value_parser = rational_arg, allow_negative_numbers = true)]
        v_d_theta_prime: Rational,
        /// v(d', θ): value of the deviation's decision at the true type.
        #[arg(long, value_parser = rational_arg, allow_negative_numbers = true)]
        v_alt_theta: Rational,
        /// v(d', θ'): value of the deviation's decision at the deviation.
        #[arg(long, value_parser = rational_arg, allow_negative_numbers = true)]
        v_alt_theta_prime: Rational,
        #[arg(long, default_value_t = 2)]
        players: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario file, or `builtin:example1` .. `builtin:example4`.
    #[arg(long)]
    config: String,
    /// `all`, one ordering such as `A C B`, or several separated by `;`.
    #[arg(long)]
    ordering: Option<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<(ScenarioConfig, Option<OrderingSelection>), CliError> {
        let config = match self.config.strip_prefix("builtin:") {
            Some(name) => builtin_scenario(name)?,
            None => {
                let path = PathBuf::from(&self.config);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                ScenarioConfig::parse(&text).map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                    other => other,
                })?
            }
        };
        let orderings = self.ordering.as_deref().map(|o| parse_ordering_selection(o, &config.labels)).transpose()?;
        Ok((config, orderings))
    }
}

fn rational_arg(text: &str) -> Result<Rational, String> {
    parse_rational(text).map_err(|e| e.to_string())
}

fn type_arg(text: &str) -> Result<seqvcg::TypeValue, String> {
    parse_type_value(text).map_err(|e| e.to_string())
}

fn execute(cli: Cli) -> Result<CommandOutput, CliError> {
    match cli.command {
        Command::Run { scenario, format } => {
            let (config, orderings) = scenario.load()?;
            cmd_run(&config, orderings.as_ref(), format)
        }
        Command::Verify { claim, scenario, grid_step, cap, format } => {
            let (config, orderings) = scenario.load()?;
            cmd_verify(&config, claim, orderings.as_ref(), grid_step.as_ref(), cap, format)
        }
        Command::Tables { table, format } => cmd_tables(table.as_deref(), format),
        Command::Witness {
            theta,
            theta_prime,
            v_d_theta,
            v_d_theta_prime,
            v_alt_theta,
            v_alt_theta_prime,
            players,
            format,
        } => cmd_witness(
            players,
            theta,
            theta_prime,
            ValuationQuadruple {
                d_at_truth: v_d_theta,
                d_at_deviation: v_d_theta_prime,
                alt_at_truth: v_alt_theta,
                alt_at_deviation: v_alt_theta_prime,
            },
            format,
        ),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::from(out.status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::Usage as u8)
        }
    }
}
