use std::process::ExitCode;

use clap::Parser;
use dualconv_cli::{emit, run, thread_cap, Args, ConfigError, RunConfig};

fn config_error(e: &ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cfg = match RunConfig::from_args(Args::parse()) {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    match thread_cap() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                eprintln!("error: cannot size the worker pool: {e}");
                return ExitCode::from(2);
            }
        }
        Ok(None) => {}
        Err(e) => return config_error(&e),
    }
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => return config_error(&e),
    };
    if let Err(e) = emit(&outcome.text, cfg.output_path.as_deref()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    if outcome.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
