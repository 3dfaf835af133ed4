//! Command-line driver for the repeat-until-success CZ simulations.
//!
//! [`run_cli`] parses flags and an optional config file, runs one experiment
//! and writes a [`envelope::ResultEnvelope`] as JSON or long-format CSV.

pub mod config;
pub mod envelope;
pub mod experiments;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use clap::Parser;

use config::{
    parse_config, thread_cap, CliArgs, ConfigError, ExperimentConfig, FileConfig, OutputFormat,
};
use envelope::ResultEnvelope;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VERDICT_FAILED: u8 = 1;
pub const EXIT_INVALID_CONFIG: u8 = 2;
pub const EXIT_OUTPUT_UNWRITABLE: u8 = 3;

/// Environment variable capping the worker count (`0` = automatic).
pub const THREADS_ENV: &str = "RUS_SIM_THREADS";

/// Reads the `--config` file, if any, and merges it with the flags.
pub fn config_from_args(cli: &CliArgs) -> Result<ExperimentConfig, ConfigError> {
    let file = cli.config.as_deref().map(FileConfig::load).transpose()?;
    parse_config(cli, file.as_ref())
}

fn write_envelope(env: &ResultEnvelope, format: OutputFormat, out: impl Write) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    match format {
        OutputFormat::Json => {
            out.write_all(env.to_json().as_bytes())?;
            out.write_all(b"\n")?;
        }
        OutputFormat::Csv => env.write_csv(&mut out).map_err(io::Error::other)?,
    }
    out.flush()
}

/// Full command-line behavior; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match CliArgs::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID_CONFIG
            } else {
                EXIT_PASS
            };
        }
    };
    let threads = std::env::var(THREADS_ENV).ok();
    let cfg = match thread_cap(threads.as_deref()).and_then(|t| Ok((t, config_from_args(&cli)?))) {
        Ok((t, cfg)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
            {
                eprintln!("warning: thread pool already configured: {e}");
            }
            cfg
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID_CONFIG;
        }
    };

    // Open the destination before the run so an unwritable path fails fast.
    let sink: Box<dyn Write> = match &cfg.output_path {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(f),
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_OUTPUT_UNWRITABLE;
            }
        },
        None => Box::new(io::stdout().lock()),
    };

    let env = match experiments::run_experiment(&cfg) {
        Ok(env) => env,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VERDICT_FAILED;
        }
    };
    if let Err(e) = write_envelope(&env, cfg.format, sink) {
        eprintln!("error: writing output: {e}");
        return EXIT_OUTPUT_UNWRITABLE;
    }
    for v in &env.verdicts {
        eprintln!(
            "{} {} = {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.observed
        );
    }
    if env.all_passed() {
        EXIT_PASS
    } else {
        EXIT_VERDICT_FAILED
    }
}
