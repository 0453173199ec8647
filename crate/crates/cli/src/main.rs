//! `prescience` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 a solver stopped at
//! a node or time limit (outputs are still written), 4 internal error or a
//! failed oracle check.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::{Failure, Run};
use prescience::Error;

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Usage(_) => 1,
        Failure::Limit(_) => 3,
        Failure::Check(_) => 4,
        Failure::Core(e) => match e {
            Error::Argument(_) | Error::Size(_) => 1,
            Error::Schema(_)
            | Error::Parse { .. }
            | Error::DegenerateColumn(_)
            | Error::NoUsableFolds
            | Error::Io { .. }
            | Error::Csv(_) => 2,
            _ => 4,
        },
    }
}

fn main() -> ExitCode {
    let mut argv: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let config = match config::take_config(&mut argv) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(path) = &config {
        let flags = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))
            .and_then(|t| config::to_flags(&t));
        match flags {
            Ok(f) => config::inject(&mut argv, f),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let level = if cli.quiet {
        log::LevelFilter::Warn
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Info,
            1 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot start the thread pool: {e}");
            return ExitCode::from(4);
        }
    }

    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let run = Run {
        argv: &argv,
        threads: cli.threads,
        clock: std::time::Instant::now(),
    };
    let result = match &cli.command {
        Command::Fit(a) => commands::fit_cmd(&run, a),
        Command::Cv(a) => commands::cv_cmd(&run, a),
        Command::Simulate(a) => commands::simulate_cmd(&run, a),
        Command::Bounds(a) => commands::bounds_cmd(&run, a),
        Command::OracleCheck(a) => commands::oracle_cmd(&run, a),
        Command::GenSynthetic(a) => commands::synth_cmd(&run, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Limit(m) | Failure::Check(m) => eprintln!("error: {m}"),
                Failure::Core(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
