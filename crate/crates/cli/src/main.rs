mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, Command, Format, RunConfig};
use error::Result;

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Classify { common, d, geometry } => {
            commands::cmd_classify(&RunConfig::new(common, &[Format::Json])?, d, geometry)
        }
        Command::Curve { common, d } => commands::cmd_curve(&RunConfig::new(common, &[Format::Csv])?, d),
        Command::Surface { common, d, cylinder } => {
            commands::cmd_surface(&RunConfig::new(common, &[Format::Obj, Format::Csv])?, d, cylinder)
        }
        Command::Phase { common, d, s_max } => commands::cmd_phase(&RunConfig::new(common, &[Format::Csv])?, d, s_max),
        Command::Sweep { common, d_min, d_max, d_step, geometry } => {
            commands::cmd_sweep(&RunConfig::new(common, &[Format::Csv])?, d_min, d_max, d_step, geometry)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("astig: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
