use std::env;
use std::process::ExitCode;

use clap::Parser;
use cornerclass_cli::config::{Cli, RunConfig, SEED_ENV};
use cornerclass_cli::run::execute;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let env_seed = env::var(SEED_ENV).ok();
    let result = RunConfig::resolve(cli.command, env_seed.as_deref()).and_then(|cfg| execute(&cfg));
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
