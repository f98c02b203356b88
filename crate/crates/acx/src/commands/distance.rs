//! `acx distance`: certified upper bound on the chain pseudodistance
//! between two chart points, with a reloadable witness chain.

use std::path::{Path, PathBuf};

use acx_core::chain::validate_chain;
use acx_core::estimator::estimate_distance;

use crate::commands::{load, out_dir, point_in};
use crate::csvout::{num, Table};
use crate::witness::{read_witness, write_witness};
use crate::{CliError, CliResult};

const WITNESS_FILE: &str = "distance_witness.csv";

pub fn run(
    spec_path: &Path,
    from: &str,
    to: &str,
    samples: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> CliResult<i32> {
    let loaded = load(spec_path)?;
    let m = &loaded.manifold;
    let p = point_in(m, from, "--from point")?;
    let q = point_in(m, to, "--to point")?;
    let dir = out_dir(out, &loaded.run);

    let mut cfg = loaded
        .run
        .estimator(loaded.spec.effective_seed(seed));
    if let Some(w) = samples {
        cfg.waypoints = w;
    }
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(CliError::Input(String::from("--tol must be positive")));
        }
        cfg.junction_tol = t;
    }

    let est = estimate_distance(m, &p, &q, &cfg)?;
    if !validate_chain(&est.chain, p.coords(), q.coords()) {
        return Err(CliError::Analytic(String::from(
            "estimator returned a chain that fails validation",
        )));
    }

    write_witness(&dir, WITNESS_FILE, &est.chain)?;
    // The written file, not the in-memory chain, is the certificate;
    // prove it reloads into a chain that still validates.
    let reloaded = read_witness(&dir.join(WITNESS_FILE), est.chain.tolerance)?;
    if !validate_chain(&reloaded, p.coords(), q.coords()) {
        return Err(CliError::Analytic(String::from(
            "witness chain failed re-validation after reload",
        )));
    }

    let mut table = Table::create(
        &dir,
        "distance.csv",
        &[
            "upper_bound",
            "links",
            "waypoints",
            "solves",
            "edges_attempted",
            "edges_connected",
            "tolerance",
            "witness",
        ],
    )?;
    table.row([
        num(est.upper_bound),
        est.chain.links.len().to_string(),
        est.waypoints.len().to_string(),
        est.stats.solves.to_string(),
        est.stats.edges_attempted.to_string(),
        est.stats.edges_connected.to_string(),
        num(est.chain.tolerance),
        String::from(WITNESS_FILE),
    ])?;
    let summary_path = table.finish()?;

    let mut links = Table::create(
        &dir,
        "distance_links.csv",
        &[
            "link", "za_re", "za_im", "zb_re", "zb_im", "radius", "n", "length",
        ],
    )?;
    for (i, link) in est.chain.links.iter().enumerate() {
        links.row([
            i.to_string(),
            num(link.z.z().re),
            num(link.z.z().im),
            num(link.w.z().re),
            num(link.w.z().im),
            num(link.disk.radius()),
            link.disk.grid_resolution().to_string(),
            num(link.length()),
        ])?;
    }
    links.finish()?;

    println!(
        "upper_bound {} over {} links ({} solves)",
        est.upper_bound,
        est.chain.links.len(),
        est.stats.solves
    );
    println!("report: {}", summary_path.display());
    Ok(0)
}
