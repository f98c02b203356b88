//! `acx gallery`: run every built-in structure through its checks.
//!
//! The gallery is the fixed catalog of example structures: constant
//! charts, the perturbed and tamed boxes, the sphere chart, a
//! grid-sampled field, and a product. Each entry gets the structure
//! check at the shared tolerance plus a taming certificate where a form
//! is attached; the octonion and sphere identity suites run once at the
//! end. Entries run in parallel under the ACX_THREADS cap; the table is
//! written in catalog order either way.

use std::path::PathBuf;

use acx_core::gallery as lib;
use acx_core::linalg::Mat;
use acx_core::manifold::{
    self, check_structure, product_manifold, standard_structure_matrix, taming_defect,
    ChartManifold,
};
use acx_core::s6;

use crate::commands::suites::{octonion_suite, CheckRow, Criterion};
use crate::csvout::{flag, num, Table};
use crate::threads::map_indexed;
use crate::{CliError, CliResult};

type Builder = fn() -> acx_core::Result<ChartManifold>;

/// Grid entry: diagonal-conjugated structures per node so interpolation
/// and retraction both do real work.
fn grid_entry() -> acx_core::Result<ChartManifold> {
    let scales = [1.0, 1.15, 0.9, 1.05, 1.0, 0.85, 1.1, 0.95, 1.0];
    let values: Vec<Mat> = scales
        .iter()
        .map(|&a| {
            Mat::from_fn(2, 2, |i, j| match (i, j) {
                (0, 1) => -a * a,
                (1, 0) => 1.0 / (a * a),
                _ => 0.0,
            })
        })
        .collect();
    lib::grid_manifold(vec![-1.0, -1.0], vec![1.0, 1.0], vec![3, 3], values)
}

fn product_entry() -> acx_core::Result<ChartManifold> {
    let d = manifold::unit_disk();
    product_manifold(&d, &d)
}

const CATALOG: [(&str, Builder); 8] = [
    ("unit-disk", || Ok(manifold::unit_disk())),
    ("flat-box-r10", || manifold::flat_box(2, 10.0)),
    ("constant-r4", || {
        lib::constant_box(standard_structure_matrix(4), 1.0)
    }),
    ("perturbed-r4", || lib::perturbed_r4(&[0.05])),
    ("tame-r4", || lib::tame_r4(&[0.05], 1.0)),
    ("s6-chart", || s6::s6_chart(2.0)),
    ("grid-r2", grid_entry),
    ("product-disks", product_entry),
];

pub fn run(
    samples: Option<usize>,
    tol: Option<f64>,
    out: Option<PathBuf>,
) -> CliResult<i32> {
    let samples = samples.unwrap_or(500);
    let tol = tol.unwrap_or(1e-10);
    let dir = out.unwrap_or_else(|| PathBuf::from("."));

    let results: Vec<CliResult<Vec<CheckRow>>> = map_indexed(CATALOG.len(), |i| {
        entry_rows(CATALOG[i].1, samples, tol)
    });

    let mut table = Table::create(
        &dir,
        "gallery.csv",
        &["entry", "check", "samples", "value", "bound", "criterion", "pass"],
    )?;
    let mut all_pass = true;
    for ((name, _), result) in CATALOG.iter().zip(results) {
        let rows = result.map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{name}: {msg}")),
            CliError::Analytic(msg) => CliError::Analytic(format!("{name}: {msg}")),
        })?;
        for row in rows {
            write_entry_row(&mut table, name, &row)?;
            report_line(name, &row);
            all_pass &= row.pass();
        }
    }
    for row in octonion_suite(1000) {
        write_entry_row(&mut table, "octonion", &row)?;
        report_line("octonion", &row);
        all_pass &= row.pass();
    }
    let path = table.finish()?;

    println!("report: {}", path.display());
    Ok(if all_pass { 0 } else { 1 })
}

fn entry_rows(build: Builder, samples: usize, tol: f64) -> CliResult<Vec<CheckRow>> {
    let m = build()?;
    let mut rows = Vec::new();
    let report = check_structure(&m, samples, tol)?;
    rows.push(CheckRow::new(
        "structure_defect",
        report.samples,
        report.max_defect,
        report.tol,
        Criterion::AtMost,
    ));
    if m.taming.is_some() {
        let defect = taming_defect(&m, samples.min(200))?;
        rows.push(CheckRow::new(
            "taming_defect",
            samples.min(200),
            defect,
            0.0,
            Criterion::Above,
        ));
    }
    Ok(rows)
}

fn write_entry_row(table: &mut Table, entry: &str, row: &CheckRow) -> CliResult<()> {
    table.row([
        entry.to_string(),
        row.check.clone(),
        row.samples.to_string(),
        num(row.value),
        num(row.bound),
        String::from(row.criterion.label()),
        flag(row.pass()),
    ])
}

fn report_line(entry: &str, row: &CheckRow) {
    let verdict = if row.pass() { "pass" } else { "FAIL" };
    println!("{entry}/{}: {} ({verdict})", row.check, row.value);
}
