//! Shared check rows: named scalar results with a pass criterion.
//!
//! The `check` and `gallery` commands both emit tables of these rows,
//! and the octonion and sphere suites are reported by both (gallery
//! always, check for sphere specs).

use acx_core::linalg;
use acx_core::octonion::{cross_product, octonion_multiply, octonion_norm};
use acx_core::s6::{s2_invariance_check, S6Structure};
use acx_core::sampling;

use crate::csvout::{flag, num, Table};
use crate::CliResult;

/// How a row's value relates to its bound for the row to pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Defect measurements: value <= bound.
    AtMost,
    /// Positivity certificates and nondegeneracy evidence: value > bound.
    Above,
    /// Informational value; always passes.
    Report,
}

impl Criterion {
    pub fn label(&self) -> &'static str {
        match self {
            Criterion::AtMost => "value<=bound",
            Criterion::Above => "value>bound",
            Criterion::Report => "report",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub check: String,
    pub samples: usize,
    pub value: f64,
    pub bound: f64,
    pub criterion: Criterion,
}

impl CheckRow {
    pub fn new(
        check: impl Into<String>,
        samples: usize,
        value: f64,
        bound: f64,
        criterion: Criterion,
    ) -> Self {
        CheckRow {
            check: check.into(),
            samples,
            value,
            bound,
            criterion,
        }
    }

    pub fn pass(&self) -> bool {
        match self.criterion {
            Criterion::AtMost => self.value <= self.bound,
            Criterion::Above => self.value > self.bound,
            Criterion::Report => true,
        }
    }
}

pub const CHECK_HEADER: [&str; 6] = ["check", "samples", "value", "bound", "criterion", "pass"];

pub fn write_check_row(table: &mut Table, row: &CheckRow) -> CliResult<()> {
    table.row([
        row.check.clone(),
        row.samples.to_string(),
        num(row.value),
        num(row.bound),
        row.criterion.label().to_string(),
        flag(row.pass()),
    ])
}

/// Octonion algebra and sphere structure checks: norm multiplicativity,
/// the cross-product norm identity, J^2 = -I with tangency on sampled
/// tangent spaces, and invariance of the distinguished 2-sphere.
pub fn octonion_suite(samples: usize) -> Vec<CheckRow> {
    let count = samples.max(1);

    let mut norm_defect = 0.0f64;
    for i in 0..count as u64 {
        let xs = sampling::gaussian_vector(101, i, 8);
        let ys = sampling::gaussian_vector(102, i, 8);
        let mut x = [0.0; 8];
        let mut y = [0.0; 8];
        x.copy_from_slice(&xs);
        y.copy_from_slice(&ys);
        let prod = octonion_multiply(&x, &y);
        let defect = (octonion_norm(&prod) - octonion_norm(&x) * octonion_norm(&y)).abs();
        norm_defect = norm_defect.max(defect);
    }

    let mut lagrange_defect = 0.0f64;
    for i in 0..count as u64 {
        let x = sampling::gaussian_vector(103, i, 7);
        let y = sampling::gaussian_vector(104, i, 7);
        let c = cross_product(&x, &y);
        let lhs = linalg::dot(&c, &c);
        let nx = linalg::dot(&x, &x);
        let ny = linalg::dot(&y, &y);
        let xy = linalg::dot(&x, &y);
        lagrange_defect = lagrange_defect.max((lhs - (nx * ny - xy * xy)).abs());
    }

    let structure = S6Structure::standard();
    let mut square_defect = 0.0f64;
    let mut tangency_defect = 0.0f64;
    for (i, w) in sampling::unit_sphere(105, count, 7).iter().enumerate() {
        let raw = sampling::gaussian_vector(106, i as u64, 7);
        let c = linalg::dot(&raw, w);
        let eta = linalg::axpy(&raw, -c, w);
        let n = linalg::norm2(&eta);
        if n < 1e-8 {
            continue;
        }
        let eta = linalg::scale(&eta, 1.0 / n);
        let jeta = structure.apply_raw(w, &eta);
        tangency_defect = tangency_defect.max(linalg::dot(&jeta, w).abs());
        let jj = structure.apply_raw(w, &jeta);
        let back = linalg::axpy(&jj, 1.0, &eta);
        square_defect = square_defect.max(linalg::norm2(&back));
    }

    let s2 = s2_invariance_check(count);

    vec![
        CheckRow::new("octonion_norm_mult", count, norm_defect, 1e-12, Criterion::AtMost),
        CheckRow::new("cross_lagrange", count, lagrange_defect, 1e-12, Criterion::AtMost),
        CheckRow::new("sphere_j_square", count, square_defect, 1e-12, Criterion::AtMost),
        CheckRow::new("sphere_tangency", count, tangency_defect, 1e-12, Criterion::AtMost),
        CheckRow::new("s2_invariance_leak", s2.samples, s2.max_leak, 1e-12, Criterion::AtMost),
        CheckRow::new(
            "s2_control_generic_leak",
            s2.samples,
            s2.control_leak,
            1e-3,
            Criterion::Above,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_octonion_suite_passes_at_full_sample_count() {
        for row in octonion_suite(1000) {
            assert!(row.pass(), "{} value {}", row.check, row.value);
        }
    }
}
