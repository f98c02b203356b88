//! `acx nijenhuis`: tensor values and general-position verdicts over a
//! domain sample.

use std::path::{Path, PathBuf};

use acx_core::linalg;
use acx_core::manifold::Point;
use acx_core::nijenhuis::{nijenhuis, slightly_general_position};
use acx_core::Error;

use crate::commands::{load, out_dir, point_in};
use crate::csvout::{num, Table};
use crate::threads::map_indexed;
use crate::{CliError, CliResult};

/// Per-point outcome. Points too close to the boundary for the
/// derivative stencil are reported, not silently dropped.
enum Verdict {
    Interior { n_max: f64, general: bool },
    Boundary,
}

pub fn run(
    spec_path: &Path,
    samples: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    at: Option<&str>,
    out: Option<PathBuf>,
) -> CliResult<i32> {
    let loaded = load(spec_path)?;
    let m = &loaded.manifold;
    let samples = samples.unwrap_or(16).max(1);
    let tol = tol.unwrap_or(1e-8);
    let seed = loaded.spec.effective_seed(seed);
    let dir = out_dir(out, &loaded.run);
    let dim = m.dim();

    let points: Vec<Point> = match at {
        Some(text) => vec![point_in(m, text, "--at point")?],
        None => m.sample(seed, samples)?,
    };

    let results: Vec<CliResult<Verdict>> =
        map_indexed(points.len(), |i| probe(m, &points[i], tol));

    let mut header: Vec<String> = vec![String::from("sample")];
    for k in 0..dim {
        header.push(format!("x{k}"));
    }
    header.push(String::from("n_max"));
    header.push(String::from("general_position"));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::create(&dir, "nijenhuis.csv", &header_refs)?;

    let mut interior = 0usize;
    let mut generic = 0usize;
    for (i, (p, result)) in points.iter().zip(results).enumerate() {
        let verdict = result?;
        let mut row: Vec<String> = vec![i.to_string()];
        for &c in p.coords() {
            row.push(num(c));
        }
        match verdict {
            Verdict::Interior { n_max, general } => {
                interior += 1;
                generic += general as usize;
                row.push(num(n_max));
                row.push(String::from(if general { "true" } else { "false" }));
            }
            Verdict::Boundary => {
                row.push(String::new());
                row.push(String::from("boundary"));
            }
        }
        table.row(&row)?;
    }
    let path = table.finish()?;

    if interior == 0 {
        return Err(CliError::Analytic(String::from(
            "no sampled point had interior margin for the derivative stencil",
        )));
    }
    println!(
        "points: {} interior of {}, general position at {generic}",
        interior,
        points.len()
    );
    println!("report: {}", path.display());
    Ok(0)
}

/// Tensor maximum over all coordinate direction pairs plus the
/// general-position verdict at one point.
fn probe(m: &acx_core::manifold::ChartManifold, p: &Point, tol: f64) -> CliResult<Verdict> {
    let dim = m.dim();
    let mut n_max = 0.0f64;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut xi = vec![0.0; dim];
            let mut eta = vec![0.0; dim];
            xi[i] = 1.0;
            eta[j] = 1.0;
            match nijenhuis(m, p, &xi, &eta) {
                Ok(t) => n_max = n_max.max(linalg::norm2(&t)),
                Err(Error::BoundaryMargin { .. }) => return Ok(Verdict::Boundary),
                Err(e) => return Err(e.into()),
            }
        }
    }
    let general = match slightly_general_position(m, p, 2 * dim, 2 * dim, tol) {
        Ok(g) => g,
        Err(Error::BoundaryMargin { .. }) => return Ok(Verdict::Boundary),
        Err(e) => return Err(e.into()),
    };
    Ok(Verdict::Interior { n_max, general })
}
