//! `acx check`: structure validity, taming, and integrability summary.

use std::path::{Path, PathBuf};

use acx_core::linalg;
use acx_core::manifold::{check_structure, taming_defect};
use acx_core::nijenhuis::nijenhuis;
use acx_core::Error;

use crate::commands::suites::{octonion_suite, write_check_row, CheckRow, Criterion, CHECK_HEADER};
use crate::commands::{load, out_dir};
use crate::csvout::Table;
use crate::CliResult;

/// Points probed for the tensor summary; kept small because each probe
/// differentiates the structure along several directions.
const TENSOR_POINTS: usize = 25;

pub fn run(
    spec_path: &Path,
    samples: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> CliResult<i32> {
    let loaded = load(spec_path)?;
    let m = &loaded.manifold;
    let samples = samples.unwrap_or(500);
    let tol = tol.unwrap_or(1e-10);
    let seed = loaded.spec.effective_seed(seed);
    let dir = out_dir(out, &loaded.run);

    let mut rows: Vec<CheckRow> = Vec::new();

    let report = check_structure(m, samples, tol)?;
    rows.push(CheckRow::new(
        "structure_defect",
        report.samples,
        report.max_defect,
        report.tol,
        Criterion::AtMost,
    ));

    if m.taming.is_some() {
        let defect = taming_defect(m, samples)?;
        rows.push(CheckRow::new(
            "taming_defect",
            samples,
            defect,
            0.0,
            Criterion::Above,
        ));
    }

    rows.push(tensor_summary(m, loaded.spec.kind, seed)?);

    if loaded.spec.kind.is_sphere() {
        rows.extend(octonion_suite(1000));
    }

    let mut table = Table::create(&dir, "check.csv", &CHECK_HEADER)?;
    for row in &rows {
        write_check_row(&mut table, row)?;
    }
    let path = table.finish()?;

    let mut all_pass = true;
    for row in &rows {
        let verdict = if row.pass() { "pass" } else { "FAIL" };
        println!("{}: {} ({verdict})", row.check, row.value);
        all_pass &= row.pass();
    }
    println!("report: {}", path.display());
    Ok(if all_pass { 0 } else { 1 })
}

/// Largest tensor norm over sampled points and coordinate direction
/// pairs. Constant structures must come out exactly integrable; the
/// sphere kinds must visibly not; for everything else the value is
/// informational.
fn tensor_summary(
    m: &acx_core::manifold::ChartManifold,
    kind: crate::spec::Kind,
    seed: u64,
) -> CliResult<CheckRow> {
    let dim = m.dim();
    let points = m.sample(seed, TENSOR_POINTS)?;
    let mut max_norm = 0.0f64;
    let mut evaluated = 0usize;
    for p in &points {
        let mut point_worst = 0.0f64;
        let mut inside = true;
        'pairs: for i in 0..dim {
            for j in (i + 1)..dim {
                let mut xi = vec![0.0; dim];
                let mut eta = vec![0.0; dim];
                xi[i] = 1.0;
                eta[j] = 1.0;
                match nijenhuis(m, p, &xi, &eta) {
                    Ok(t) => point_worst = point_worst.max(linalg::norm2(&t)),
                    Err(Error::BoundaryMargin { .. }) => {
                        inside = false;
                        break 'pairs;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        if inside {
            evaluated += 1;
            max_norm = max_norm.max(point_worst);
        }
    }
    if evaluated == 0 {
        return Err(crate::CliError::Analytic(String::from(
            "tensor probe found no points with interior margin",
        )));
    }
    let (bound, criterion) = match kind {
        crate::spec::Kind::Constant => (1e-8, Criterion::AtMost),
        k if k.is_sphere() => (1e-6, Criterion::Above),
        _ => (0.0, Criterion::Report),
    };
    Ok(CheckRow::new(
        "nijenhuis_max",
        evaluated,
        max_norm,
        bound,
        criterion,
    ))
}
