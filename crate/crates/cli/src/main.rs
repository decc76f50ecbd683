//! Binary entry point: parse arguments, validate the configuration, dispatch
//! the subcommand, and map failures to exit codes (0 = all operations
//! succeeded, 1 = at least one failed, 2 = usage error).

mod args;
mod commands;
mod report;

use args::{Cli, Command};
use clap::Parser;

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    if let Err(message) = validate(&cli.command) {
        eprintln!("error: {message}");
        return 2;
    }
    let outcome = match &cli.command {
        Command::Compress(args) => commands::cmd_compress(args),
        Command::Decompress(args) => commands::cmd_decompress(args),
        Command::Segment(args) => commands::cmd_segment(args),
        Command::Metrics(args) => commands::cmd_metrics(args),
        Command::Bench(args) => commands::cmd_bench(args),
    };
    match outcome {
        Ok(0) => 0,
        Ok(_) => 1,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

/// Configuration checks beyond clap's structural parsing; violations are
/// usage errors (exit 2).
fn validate(command: &Command) -> Result<(), String> {
    fn classes(n: usize) -> Result<(), String> {
        if n >= 2 {
            Ok(())
        } else {
            Err(format!("--classes must be at least 2, got {n}"))
        }
    }
    fn workers(n: usize) -> Result<(), String> {
        if n >= 1 {
            Ok(())
        } else {
            Err("--workers must be at least 1".into())
        }
    }
    fn bound(e: f64) -> Result<(), String> {
        if e.is_finite() && e >= 0.0 {
            Ok(())
        } else {
            Err(format!("error bound must be finite and >= 0, got {e}"))
        }
    }
    fn fraction(f: Option<f64>) -> Result<(), String> {
        match f {
            Some(f) if !(f > 0.0 && f < 0.5) => Err(format!(
                "--estimate-background fraction must lie in (0, 0.5), got {f}"
            )),
            _ => Ok(()),
        }
    }
    fn embed_needs_source(embed: bool, has_source: bool) -> Result<(), String> {
        if embed && !has_source {
            Err("--embed-background requires --background or --estimate-background".into())
        } else {
            Ok(())
        }
    }

    match command {
        Command::Compress(a) => {
            classes(a.classes)?;
            workers(a.workers)?;
            bound(a.error_bound)?;
            fraction(a.estimate_background)?;
            embed_needs_source(
                a.embed_background,
                a.background.is_some() || a.estimate_background.is_some(),
            )
        }
        Command::Decompress(a) => workers(a.workers),
        Command::Segment(a) => {
            classes(a.classes)?;
            workers(a.workers)?;
            fraction(a.estimate_background)
        }
        Command::Metrics(_) => Ok(()),
        Command::Bench(a) => {
            classes(a.classes)?;
            workers(a.workers)?;
            fraction(a.estimate_background)?;
            if a.codecs.is_empty() {
                return Err("--codecs must list at least one codec".into());
            }
            if a.error_bounds.is_empty() {
                return Err("--error-bounds must list at least one bound".into());
            }
            for &e in &a.error_bounds {
                bound(e)?;
            }
            embed_needs_source(
                a.embed_background,
                a.background.is_some() || a.estimate_background.is_some(),
            )
        }
    }
}
