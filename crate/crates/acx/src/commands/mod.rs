//! Subcommand implementations.
//!
//! Every command loads a spec, runs library calls, writes CSV tables
//! under the output directory, and returns a process exit code: 0 for
//! success, 1 for an analytic or budget failure, 2 for input errors
//! (the latter two usually travel as `CliError`). Commands that finish
//! their run but find failing checks write their tables first and then
//! report exit code 1.

pub mod brody;
pub mod check;
pub mod disk;
pub mod distance;
pub mod fmetric;
pub mod gallery;
pub mod nijenhuis;
pub mod suites;

use std::path::{Path, PathBuf};

use acx_core::manifold::{ChartManifold, Point};

use crate::spec::{ManifoldSpec, RunConfig};
use crate::{parse_vector, CliError, CliResult};

/// A spec file resolved into a manifold plus its run defaults.
pub struct Loaded {
    pub spec: ManifoldSpec,
    pub manifold: ChartManifold,
    pub run: RunConfig,
}

pub fn load(spec_path: &Path) -> CliResult<Loaded> {
    let (spec, base) = ManifoldSpec::load(spec_path)?;
    let manifold = spec.to_manifold(&base)?;
    let run = spec.run_config();
    Ok(Loaded {
        spec,
        manifold,
        run,
    })
}

/// Output directory precedence: flag, then the spec's run table, then
/// the working directory.
pub fn out_dir(flag: Option<PathBuf>, run: &RunConfig) -> PathBuf {
    flag.unwrap_or_else(|| {
        run.output_dir
            .as_ref()
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
    })
}

/// Parses a point flag and places it inside the chart.
pub fn point_in(m: &ChartManifold, text: &str, what: &str) -> CliResult<Point> {
    let coords = parse_vector(text)?;
    if coords.len() != m.dim() {
        return Err(CliError::Input(format!(
            "{what} has {} coordinates, the chart has dimension {}",
            coords.len(),
            m.dim()
        )));
    }
    let p = Point::new(coords)?;
    if !m.domain.contains(p.coords()) {
        return Err(CliError::Input(format!(
            "{what} lies outside the chart domain"
        )));
    }
    Ok(p)
}

/// Parses a direction flag; must match the chart dimension and be
/// nonzero.
pub fn direction_in(m: &ChartManifold, text: &str) -> CliResult<Vec<f64>> {
    let v = parse_vector(text)?;
    if v.len() != m.dim() {
        return Err(CliError::Input(format!(
            "direction has {} coordinates, the chart has dimension {}",
            v.len(),
            m.dim()
        )));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(CliError::Input(String::from("direction must be nonzero")));
    }
    Ok(v)
}
