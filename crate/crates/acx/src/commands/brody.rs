//! `acx brody`: rescaling probe over a named disk generator.
//!
//! The generator feeds disks with growing center derivatives into the
//! reparametrization machinery; the probe reports how much consecutive
//! rescaled maps still move on a fixed grid. A generator that cannot
//! keep growing aborts the probe with the derivative bound fitted to
//! the disks seen, which is the expected outcome on a hyperbolic-like
//! domain and arrives as exit code 1.

use std::path::{Path, PathBuf};

use acx_core::brody::rescaling_probe;
use acx_core::linalg;
use acx_core::manifold::ChartManifold;
use acx_core::s6::{s2_parametrization, StereographicChart};
use acx_core::solver::DiskMap;
use acx_core::{Complex64, Error};

use crate::commands::{load, out_dir};
use crate::csvout::{num, Table};
use crate::spec::ManifoldSpec;
use crate::{CliError, CliResult};

/// Consecutive rescaled maps closer than this count as stabilized.
const STABLE_DIFF: f64 = 1e-3;

/// Rim directions tested for domain containment of generated disks.
const RIM_SAMPLES: usize = 64;

pub fn run(
    spec_path: &Path,
    probe: &str,
    steps: Option<usize>,
    out: Option<PathBuf>,
) -> CliResult<i32> {
    let loaded = load(spec_path)?;
    let m = &loaded.manifold;
    let steps = steps.unwrap_or(5);
    if steps == 0 {
        return Err(CliError::Input(String::from("--steps must be at least 1")));
    }
    let dir = out_dir(out, &loaded.run);
    let n_grid = loaded.run.grid_resolution;

    let mut generator: Box<dyn FnMut() -> Option<DiskMap>> = match probe {
        "affine" => affine_generator(m, n_grid)?,
        "s2" => s2_generator(&loaded.spec, m)?,
        other => {
            return Err(CliError::Input(format!(
                "unknown probe {other:?}, expected affine or s2"
            )))
        }
    };

    let mut table = Table::create(
        &dir,
        "brody.csv",
        &["step", "radius", "center_norm", "diff_from_previous"],
    )?;

    let report = match rescaling_probe(m, &mut generator, steps) {
        Ok(r) => r,
        Err(Error::BoundedDerivatives { schwarz_fit }) => {
            table.finish()?;
            println!("derivatives bounded: fitted derivative constant {schwarz_fit}");
            return Err(CliError::Analytic(format!(
                "generator derivatives stopped growing; fitted derivative \
                 constant {schwarz_fit}"
            )));
        }
        Err(e) => return Err(e.into()),
    };

    for entry in &report.entries {
        table.row([
            entry.step.to_string(),
            num(entry.radius),
            num(entry.center_norm),
            entry.diff_from_previous.map(num).unwrap_or_default(),
        ])?;
    }
    let path = table.finish()?;

    for entry in &report.entries {
        println!(
            "step {} radius {} center_norm {} diff {}",
            entry.step,
            entry.radius,
            entry.center_norm,
            entry
                .diff_from_previous
                .map(num)
                .unwrap_or_else(|| String::from("-"))
        );
    }
    println!("report: {}", path.display());

    if report.partial {
        return Err(CliError::Analytic(String::from(
            "generator ran out of disks before the requested steps",
        )));
    }
    let stabilized = report.trailing_diff.is_some_and(|d| d <= STABLE_DIFF);
    if stabilized {
        println!("stabilizing: trailing diff {}", report.trailing_diff.unwrap());
        if probe == "s2" {
            println!(
                "nonhyperbolicity evidence: sphere-aligned disks keep growing \
                 and their rescalings converge"
            );
        }
    } else if let Some(d) = report.trailing_diff {
        println!("not stabilized: trailing diff {d}");
    }
    Ok(0)
}

/// True when the structure field returns the same matrix at a point
/// sample; affine disks are pseudoholomorphic exactly in that case.
fn structure_is_constant(m: &ChartManifold) -> bool {
    let center = m.domain.center();
    let j0 = m.structure.eval(&center);
    match m.sample(3, 8) {
        Ok(points) => points
            .iter()
            .all(|p| m.structure.eval(p.coords()).sub(&j0).max_abs() == 0.0),
        Err(_) => false,
    }
}

/// Largest scale at which every rim sample of the affine disk stays in
/// the domain, found by doubling then bisection. Deterministic.
fn containment_cap(
    m: &ChartManifold,
    p: &[f64],
    v: &[f64],
    jv: &[f64],
) -> Option<f64> {
    let fits = |lambda: f64| -> bool {
        for k in 0..RIM_SAMPLES {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / RIM_SAMPLES as f64;
            let mut q = p.to_vec();
            for i in 0..q.len() {
                q[i] += lambda * (theta.cos() * v[i] + theta.sin() * jv[i]);
            }
            if !m.domain.contains(&q) {
                return false;
            }
        }
        true
    };
    let mut lo = 1e-9;
    if !fits(lo) {
        return None;
    }
    let mut hi = lo;
    for _ in 0..60 {
        if !fits(hi * 2.0) {
            break;
        }
        hi *= 2.0;
    }
    if fits(hi * 2.0) {
        // Unbounded in this direction; treat the bracket top as the cap.
        return Some(hi);
    }
    let mut top = hi * 2.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + top);
        if fits(mid) {
            lo = mid;
            hi = mid;
        } else {
            top = mid;
        }
    }
    Some(hi)
}

/// Affine disks z = x + iy -> p + t (x v + y Jv) on the unit parameter
/// radius, with target center derivative doubling per step and the
/// scale clamped to what the domain holds. On a domain that stops the
/// growth the probe aborts with the fitted derivative bound.
fn affine_generator(
    m: &ChartManifold,
    n_grid: usize,
) -> CliResult<Box<dyn FnMut() -> Option<DiskMap>>> {
    if !structure_is_constant(m) {
        return Err(CliError::Input(String::from(
            "the affine probe needs a constant structure; this spec's varies",
        )));
    }
    let p = m.domain.center();
    if !m.domain.contains(&p) {
        return Err(CliError::Input(String::from(
            "domain center is not a member; cannot seat the affine family",
        )));
    }
    let dim = m.dim();
    let mut v = vec![0.0; dim];
    v[0] = 1.0;
    let jv = m.structure.eval(&p).mul_vec(&v);
    let cap = containment_cap(m, &p, &v, &jv).ok_or_else(|| {
        CliError::Input(String::from(
            "no affine disk fits the domain at the center",
        ))
    })? * 0.999;
    let nu = m.norm_at(&p, &v).max(1e-300);
    let first_target = (0.5 / nu).min(cap / 2.0);

    let mut k = 0u32;
    let dim_v = v.clone();
    let gen = move || -> Option<DiskMap> {
        let target = first_target * f64::powi(2.0, k as i32);
        k += 1;
        let lambda = target.min(cap);
        let disk = DiskMap::from_fn(1.0, n_grid.max(4), dim, |x, y| {
            let mut q = p.clone();
            for i in 0..dim {
                q[i] += lambda * (x * dim_v[i] + y * jv[i]);
            }
            q
        })
        .ok()?;
        Some(disk)
    };
    Ok(Box::new(gen))
}

/// Base grid resolution of the first sphere-aligned disk. The stored
/// node pattern repeats exactly when lambda and the resolution double
/// together, which keeps the measured derivative ratio at exactly two
/// and the rescaled maps on a constant absolute node spacing.
const S2_BASE_N: u64 = 24;

/// Resolution ceiling for sphere-aligned disks; past it the generator
/// reports exhaustion rather than produce disks the grid cannot carry.
const S2_MAX_N: u64 = 800;

/// Disks tracing the invariant 2-sphere through the stereographic
/// chart, z -> chart(s2(lambda z)), with lambda doubling per step. The
/// sphere image is compact, so the center derivative can grow without
/// the disks leaving a chart ball that contains the image.
fn s2_generator(
    spec: &ManifoldSpec,
    m: &ChartManifold,
) -> CliResult<Box<dyn FnMut() -> Option<DiskMap>>> {
    if !spec.kind.is_sphere() {
        return Err(CliError::Input(String::from(
            "the s2 probe is defined for s6 and s6-chart specs only",
        )));
    }
    let params = spec.params.clone().unwrap_or_default();
    if matches!(params.order.as_deref(), Some("w-times-eta")) {
        return Err(CliError::Input(String::from(
            "the s2 parametrization solves the default cross-product order only",
        )));
    }
    let pole = params.pole.clone().unwrap_or_else(|| {
        let mut p = vec![0.0; 7];
        p[6] = 1.0;
        p
    });
    let chart = StereographicChart::new(&pole)?;

    // Every generated value lies on the chart image of the invariant
    // sphere, so bounding that compact image once certifies all steps.
    // Lat-long sampling of the sphere inside the quaternion span.
    let mut image_max = 0.0f64;
    for a in 0..64 {
        let phi = 2.0 * std::f64::consts::PI * a as f64 / 64.0;
        for b in 0..=32 {
            let psi = std::f64::consts::PI * b as f64 / 32.0;
            let mut w = vec![0.0; 7];
            w[0] = psi.sin() * phi.cos();
            w[1] = psi.sin() * phi.sin();
            w[2] = psi.cos();
            let q = chart.to_chart(&w);
            if !m.domain.contains(&q) {
                return Err(CliError::Input(format!(
                    "the chart ball does not contain the invariant sphere \
                     image (|q| = {}); increase params.radius",
                    linalg::norm2(&q)
                )));
            }
            image_max = image_max.max(linalg::norm2(&q));
        }
    }
    let ball_radius = params.radius.unwrap_or(2.0);
    if image_max > 0.98 * ball_radius {
        return Err(CliError::Input(format!(
            "the invariant sphere image comes within 2% of the chart \
             boundary (max |q| = {image_max}); increase params.radius"
        )));
    }

    let dim = m.dim();
    let mut k = 0u32;
    let gen = move || -> Option<DiskMap> {
        let n = S2_BASE_N.checked_shl(k)?;
        if n > S2_MAX_N {
            return None;
        }
        let lambda = 0.5 * f64::powi(2.0, k as i32);
        k += 1;
        let disk = DiskMap::from_fn(1.0, n as usize, dim, |x, y| {
            let z = Complex64::new(lambda * x, lambda * y);
            chart.to_chart(&s2_parametrization(z))
        })
        .ok()?;
        Some(disk)
    };
    Ok(Box::new(gen))
}
