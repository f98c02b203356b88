use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use acx::commands;

/// Diagnostics and certified bounds for almost complex charts.
///
/// Exit codes: 0 success, 1 analytic or budget failure, 2 input error.
#[derive(Parser)]
#[command(name = "acx", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Structure validity, taming, and integrability summary for a spec.
    Check {
        #[arg(long)]
        spec: PathBuf,
        /// Sample points for the checks (default 500).
        #[arg(long)]
        samples: Option<usize>,
        /// Structure defect tolerance (default 1e-10).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for CSV reports (default current directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tensor values and general-position verdicts over a sample.
    Nijenhuis {
        #[arg(long)]
        spec: PathBuf,
        /// Sample points (default 16); ignored when --at is given.
        #[arg(long)]
        samples: Option<usize>,
        /// General-position threshold (default 1e-8).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Probe one point, comma-separated chart coordinates.
        #[arg(long)]
        at: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one local disk at a point and direction.
    Disk {
        #[arg(long)]
        spec: PathBuf,
        /// Base point, comma-separated chart coordinates.
        #[arg(long)]
        at: String,
        /// Center derivative direction, comma-separated.
        #[arg(long)]
        dir: String,
        /// Solver residual target (default from the spec's run table).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certified upper bound on the chain pseudodistance.
    Distance {
        #[arg(long)]
        spec: PathBuf,
        /// Start point, comma-separated chart coordinates.
        #[arg(long)]
        from: String,
        /// End point, comma-separated chart coordinates.
        #[arg(long)]
        to: String,
        /// Waypoints beyond the endpoints (default from the run table).
        #[arg(long)]
        samples: Option<usize>,
        /// Junction tolerance (default from the run table).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Upper bound on the infinitesimal pseudometric at a point.
    Fmetric {
        #[arg(long)]
        spec: PathBuf,
        /// Base point, comma-separated chart coordinates.
        #[arg(long)]
        at: String,
        /// Direction, comma-separated.
        #[arg(long)]
        dir: String,
        /// Solver residual target (default from the run table).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rescaling probe over a named disk generator.
    Brody {
        #[arg(long)]
        spec: PathBuf,
        /// Generator name: affine or s2.
        #[arg(long)]
        probe: String,
        /// Probe steps (default 5).
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every built-in gallery structure through its checks.
    Gallery {
        /// Sample points per structure check (default 500).
        #[arg(long)]
        samples: Option<usize>,
        /// Structure defect tolerance (default 1e-10).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Restores the default SIGPIPE disposition so piping into tools like
/// `head` terminates the process quietly instead of panicking on a
/// closed stdout.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Check {
            spec,
            samples,
            tol,
            seed,
            out,
        } => commands::check::run(&spec, samples, tol, seed, out),
        Cmd::Nijenhuis {
            spec,
            samples,
            tol,
            seed,
            at,
            out,
        } => commands::nijenhuis::run(&spec, samples, tol, seed, at.as_deref(), out),
        Cmd::Disk {
            spec,
            at,
            dir,
            tol,
            out,
        } => commands::disk::run(&spec, &at, &dir, tol, out),
        Cmd::Distance {
            spec,
            from,
            to,
            samples,
            tol,
            seed,
            out,
        } => commands::distance::run(&spec, &from, &to, samples, tol, seed, out),
        Cmd::Fmetric {
            spec,
            at,
            dir,
            tol,
            out,
        } => commands::fmetric::run(&spec, &at, &dir, tol, out),
        Cmd::Brody {
            spec,
            probe,
            steps,
            out,
        } => commands::brody::run(&spec, &probe, steps, out),
        Cmd::Gallery { samples, tol, out } => commands::gallery::run(samples, tol, out),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
