use std::process::ExitCode;

use graddiv_cli::commands::{self, CliError};

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GRADDIV_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("GRADDIV_THREADS must be a non-negative integer, got `{raw}`")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = args.first() else {
        eprintln!("{}", commands::usage());
        return ExitCode::from(1);
    };
    if command == "--help" || command == "-h" {
        println!("{}", commands::usage());
        return ExitCode::SUCCESS;
    }
    match init_threads().and_then(|_| commands::dispatch(command, &args[1..])) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
