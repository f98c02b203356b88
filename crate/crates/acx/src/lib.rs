//! Batch front end for the chart diagnostics library.
//!
//! Loads manifold descriptions from TOML files, runs structure checks,
//! tensor diagnostics, disk solves, distance and metric estimates, and
//! rescaling probes, and writes the results as CSV tables. Identical
//! inputs (spec file, seed, flags) produce byte-identical output files.

pub mod commands;
pub mod csvout;
pub mod spec;
pub mod threads;
pub mod witness;

use std::fmt;

/// Failure classification that the process exit code reports.
///
/// `Input` covers everything the caller can fix by editing the command
/// line or the spec file. `Analytic` covers runs that were set up
/// correctly but whose computation failed a budget, a convergence
/// target, or a certified check.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Analytic(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Analytic(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Analytic(msg) => write!(f, "analytic failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<acx_core::Error> for CliError {
    fn from(e: acx_core::Error) -> Self {
        match &e {
            acx_core::Error::InvalidArgument(_)
            | acx_core::Error::Config(_)
            | acx_core::Error::OutsideDomain
            | acx_core::Error::MissingTamingForm => CliError::Input(e.to_string()),
            _ => CliError::Analytic(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parses a comma-separated coordinate list as given on the command
/// line, e.g. "0.5,0" for a point in a two-dimensional chart.
pub fn parse_vector(text: &str) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let trimmed = part.trim();
        let v: f64 = trimmed
            .parse()
            .map_err(|_| CliError::Input(format!("not a number in coordinate list: {trimmed:?}")))?;
        if !v.is_finite() {
            return Err(CliError::Input(format!(
                "coordinates must be finite, got {trimmed}"
            )));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Input(String::from("empty coordinate list")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_parsing_accepts_spaces_and_rejects_junk() {
        assert_eq!(parse_vector("0.5, -1, 2e-3").unwrap(), vec![0.5, -1.0, 2e-3]);
        assert!(parse_vector("0.5;1").is_err());
        assert!(parse_vector("nan").is_err());
        assert!(parse_vector("").is_err());
    }

    #[test]
    fn exit_codes_follow_the_classification() {
        assert_eq!(CliError::Input(String::new()).exit_code(), 2);
        assert_eq!(CliError::Analytic(String::new()).exit_code(), 1);
        let e: CliError = acx_core::Error::OutsideDomain.into();
        assert_eq!(e.exit_code(), 2);
        let e: CliError = acx_core::Error::Unreachable {
            attempted_edges: 3,
            connected_edges: 0,
        }
        .into();
        assert_eq!(e.exit_code(), 1);
    }
}
