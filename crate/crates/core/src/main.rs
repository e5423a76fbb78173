use std::process::ExitCode;

use clap::Parser;
use heatlab::cli::{self, Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run(args) => {
            let env_jobs = std::env::var(cli::JOBS_ENV).ok();
            match cli::run(&args, env_jobs.as_deref()) {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("heatlab: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
