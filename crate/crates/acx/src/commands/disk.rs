//! `acx disk`: solve one local disk at a point and direction, growing
//! the radius as far as the solver certifies.

use std::path::{Path, PathBuf};

use acx_core::linalg;
use acx_core::solver::{max_disk_radius_with, solve_local_disk, RadiusSearch};

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

    let report = max_disk_radius_with(m, &p, &v, &cfg, &search)?;
    if report.floored || report.radius <= 0.0 {
        return Err(CliError::Analytic(format!(
            "no disk certified down to radius {} after {} solves; \
             loosen --tol or move the base point",
            search.floor, report.solves
        )));
    }
    let disk = solve_local_disk(m, &p, &v, report.radius, &cfg)?;

    let center_err = linalg::norm2(&linalg::sub(disk.center_value().coords(), p.coords()));
    let dir_err = linalg::norm2(&linalg::sub(&disk.center_velocity(), &v));
    let residual = disk.achieved_residual().unwrap_or(f64::NAN);

    let mut table = Table::create(
        &dir,
        "disk.csv",
        &[
            "radius",
            "residual",
            "iterations",
            "n",
            "dim",
            "center_err",
            "dir_err",
            "solves",
            "cap_limited",
        ],
    )?;
    table.row([
        num(disk.radius()),
        num(residual),
        disk.iterations().to_string(),
        disk.grid_resolution().to_string(),
        disk.dim().to_string(),
        num(center_err),
        num(dir_err),
        report.solves.to_string(),
        flag(report.cap_limited),
    ])?;
    let summary_path = table.finish()?;

    let dim = disk.dim();
    let mut header: Vec<String> = vec![
        String::from("iy"),
        String::from("ix"),
        String::from("x"),
        String::from("y"),
    ];
    for k in 0..dim {
        header.push(format!("c{k}"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut nodes = Table::create(&dir, "disk_nodes.csv", &header_refs)?;
    let side = disk.side();
    for iy in 0..side {
        for ix in 0..side {
            let mut row = vec![
                iy.to_string(),
                ix.to_string(),
                num(disk.node_coord(ix)),
                num(disk.node_coord(iy)),
            ];
            for &c in disk.value_at(ix, iy) {
                row.push(num(c));
            }
            nodes.row(&row)?;
        }
    }
    nodes.finish()?;

    println!(
        "radius {} residual {} ({} iterations, {} solves)",
        disk.radius(),
        residual,
        disk.iterations(),
        report.solves
    );
    println!("report: {}", summary_path.display());
    Ok(0)
}
