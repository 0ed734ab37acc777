mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use ncamon::ErrorClass;

use args::{Cli, Command};

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Argument => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numeric => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Monitor(a) => commands::monitor(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Synth(a) => commands::synth(a),
        Command::Inspect(a) => commands::inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
