//! `acx fmetric`: upper bound on the infinitesimal pseudometric at a
//! point and direction, with the disk-width analog.

use std::path::{Path, PathBuf};

use acx_core::estimator::infinitesimal_metric_with;
use acx_core::solver::RadiusSearch;

use crate::commands::{direction_in, load, out_dir, point_in};
use crate::csvout::{flag, num, Table};
use crate::{CliError, CliResult};

pub fn run(
    spec_path: &Path,
    at: &str,
    dir_flag: &str,
    tol: Option<f64>,
    out: Option<PathBuf>,
) -> CliResult<i32> {
    let loaded = load(spec_path)?;
    let m = &loaded.manifold;
    let p = point_in(m, at, "--at point")?;
    let v = direction_in(m, dir_flag)?;
    let dir = out_dir(out, &loaded.run);

    let mut cfg = loaded.run.solver();
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(CliError::Input(String::from("--tol must be positive")));
        }
        cfg.tol = t;
    }
    let search = RadiusSearch {
        cap: loaded.run.radius_cap,
        ..RadiusSearch::default()
    };

    let est = infinitesimal_metric_with(m, &p, &v, &cfg, &search)?;

    let mut table = Table::create(
        &dir,
        "fmetric.csv",
        &[
            "value",
            "witness_radius",
            "width_analog",
            "solves",
            "cap_limited",
            "floored",
        ],
    )?;
    table.row([
        num(est.value),
        num(est.witness_radius),
        num(est.width_analog),
        est.search.solves.to_string(),
        flag(est.search.cap_limited),
        flag(est.search.floored),
    ])?;
    let path = table.finish()?;

    println!(
        "value {} (witness radius {}, width analog {})",
        est.value, est.witness_radius, est.width_analog
    );
    println!("report: {}", path.display());

    if est.search.floored {
        return Err(CliError::Analytic(format!(
            "no disk certified after {} solves; the reported value is not a \
             finite bound",
            est.search.solves
        )));
    }
    Ok(0)
}
