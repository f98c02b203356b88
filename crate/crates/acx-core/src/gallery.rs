//! Executable example structures: perturbation families around the
//! standard structure, tamed bounded domains, constant charts, and
//! grid-sampled fields.
//!
//! Perturbations take the form J_tau = R(J0 + sum tau_i b_i(p) S_i),
//! where each S_i anticommutes with the standard structure, b_i is a
//! compactly supported bump, and R(B) = B (-B^2)^(-1/2) retracts the
//! perturbed field back onto exact almost complex structures. The
//! retraction is what lets structure checks pass at machine tolerance
//! instead of a tau-dependent one.
//!
//! Anticommutation buys two exact facts. First, -B^2 = I - P^2 for the
//! perturbation part P, so the retraction is well defined whenever
//! |P| < 1, and sum |tau_i| < 1 guarantees that. Second, with the
//! pair-supported generators used here P^2 is scalar on each coordinate
//! pair, so the inverse square root is a per-pair scalar 1/sqrt(1 - c_k)
//! and the whole field evaluates in closed form. The general matrix
//! route stays available for arbitrary bases and the two are checked
//! against each other in the tests.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::Mat;
use crate::manifold::{
    standard_form_matrix, standard_structure_matrix, AlmostComplexStructure, ChartManifold,
    Domain, NormField, SymplecticForm,
};

/// Smooth bump, value 1 at t = 0, identically 0 for |t| >= 1.
pub fn bump_profile(t: f64) -> f64 {
    let t2 = t * t;
    if t2 >= 1.0 {
        0.0
    } else {
        fmath::exp(1.0 - 1.0 / (1.0 - t2))
    }
}

/// Generators anticommuting with the standard structure, one pair of
/// hyperbolic reflections per coordinate pair: dim generators in total.
pub fn perturbation_generators(dim: usize) -> Vec<Mat> {
    let mut out = Vec::with_capacity(dim);
    for k in 0..dim / 2 {
        let mut a = Mat::zeros(dim, dim);
        a[(2 * k, 2 * k)] = 1.0;
        a[(2 * k + 1, 2 * k + 1)] = -1.0;
        out.push(a);
        let mut b = Mat::zeros(dim, dim);
        b[(2 * k, 2 * k + 1)] = 1.0;
        b[(2 * k + 1, 2 * k)] = 1.0;
        out.push(b);
    }
    out
}

/// Bump weights for each generator at p: offset centers break symmetry
/// so distinct tau components shape the field differently.
fn bump_weights(dim: usize, count: usize, p: &[f64]) -> Vec<f64> {
    const RADIUS: f64 = 1.6;
    (0..count)
        .map(|i| {
            let mut d2 = 0.0;
            for (k, &x) in p.iter().enumerate() {
                let c = if k == i % dim { 0.3 } else { 0.0 };
                d2 += (x - c) * (x - c);
            }
            bump_profile(fmath::sqrt(d2) / RADIUS)
        })
        .collect()
}

fn validate_tau(dim: usize, tau: &[f64]) -> Result<()> {
    if tau.len() > dim {
        return Err(Error::InvalidArgument(String::from(
            "more perturbation parameters than generators",
        )));
    }
    let budget: f64 = tau.iter().map(|t| fmath::abs(*t)).sum();
    if !(budget < 0.9) {
        return Err(Error::PerturbationTooLarge);
    }
    Ok(())
}

/// Perturbation family over an arbitrary base structure, retracted by
/// the matrix square-root route.
///
/// tau = 0 reproduces the base field bit for bit: the perturbation sums
/// to the zero matrix and the square-root iteration fixes the identity
/// exactly. Retraction failure at an evaluation point falls back to the
/// unretracted field, which a structure check then reports honestly.
pub fn perturbation_family(
    j0: &AlmostComplexStructure,
    tau: &[f64],
) -> Result<AlmostComplexStructure> {
    let dim = j0.dim();
    validate_tau(dim, tau)?;
    let gens = perturbation_generators(dim);
    let tau: Vec<f64> = tau.to_vec();
    let base = j0.field();
    let step = j0.smoothness_step();
    let eval = Arc::new(move |p: &[f64]| {
        let weights = bump_weights(dim, tau.len(), p);
        let mut b = base(p);
        for ((t, w), s) in tau.iter().zip(&weights).zip(&gens) {
            b = b.add(&s.scale(t * w));
        }
        let m = b.mul(&b).scale(-1.0);
        match m.inv_sqrt() {
            Ok(z) => b.mul(&z),
            Err(_) => b,
        }
    });
    AlmostComplexStructure::new(dim, step, eval)
}

/// Same family over the standard constant base, using the per-pair
/// scalar form of the retraction. Orders of magnitude cheaper per
/// evaluation, which the disk solver and distance estimator feel.
pub fn standard_perturbation(dim: usize, tau: &[f64]) -> Result<AlmostComplexStructure> {
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::InvalidArgument(String::from(
            "structure dimension must be even and positive",
        )));
    }
    validate_tau(dim, tau)?;
    let tau: Vec<f64> = tau.to_vec();
    let eval = Arc::new(move |p: &[f64]| {
        let weights = bump_weights(dim, tau.len(), p);
        // Per pair: B = [[a, b-1], [b+1, -a]] with a, b the weighted tau
        // entries, -B^2 = (1 - a^2 - b^2) I, so the retraction is the
        // scalar 1/sqrt(1 - a^2 - b^2).
        let mut j = Mat::zeros(p.len(), p.len());
        for k in 0..p.len() / 2 {
            let a = coeff(&tau, &weights, 2 * k);
            let b = coeff(&tau, &weights, 2 * k + 1);
            let c = 1.0 - a * a - b * b;
            // c > 0 is guaranteed by the construction bound; clamp keeps
            // the closure total under float dust.
            let s = 1.0 / fmath::sqrt(c.max(1e-12));
            j[(2 * k, 2 * k)] = a * s;
            j[(2 * k, 2 * k + 1)] = (b - 1.0) * s;
            j[(2 * k + 1, 2 * k)] = (b + 1.0) * s;
            j[(2 * k + 1, 2 * k + 1)] = -a * s;
        }
        j
    });
    AlmostComplexStructure::new(dim, 1e-3, eval)
}

#[inline]
fn coeff(tau: &[f64], weights: &[f64], i: usize) -> f64 {
    if i < tau.len() {
        tau[i] * weights[i]
    } else {
        0.0
    }
}

/// Perturbed structure on an open box, standard taming form attached.
pub fn perturbed_box(dim: usize, tau: &[f64], halfwidth: f64) -> Result<ChartManifold> {
    ChartManifold::new(
        standard_perturbation(dim, tau)?,
        Domain::centered_box(vec![0.0; dim], vec![halfwidth; dim])?,
        NormField::identity(),
        Some(SymplecticForm::standard(dim)),
    )
}

/// The four-dimensional perturbed chart on the unit box.
pub fn perturbed_r4(tau: &[f64]) -> Result<ChartManifold> {
    perturbed_box(4, tau, 1.0)
}

/// Bounded tamed domain in R^4: perturbed structure, standard form, and
/// a construction-time taming certificate.
pub fn tame_r4(tau: &[f64], halfwidth: f64) -> Result<ChartManifold> {
    let m = perturbed_box(4, tau, halfwidth)?;
    let defect = crate::manifold::taming_defect(&m, 200)?;
    if !(defect > 0.0) {
        return Err(Error::Config(String::from(
            "perturbation breaks taming on the requested domain",
        )));
    }
    Ok(m)
}

/// Constant-structure chart on an open box.
pub fn constant_box(mat: Mat, halfwidth: f64) -> Result<ChartManifold> {
    let dim = mat.rows();
    let taming = if mat.sub(&standard_structure_matrix(dim)).max_abs() == 0.0 {
        Some(SymplecticForm::constant(standard_form_matrix(dim))?)
    } else {
        None
    };
    ChartManifold::new(
        AlmostComplexStructure::constant(mat)?,
        Domain::centered_box(vec![0.0; dim], vec![halfwidth; dim])?,
        NormField::identity(),
        taming,
    )
}

/// Structure field sampled on a rectangular grid, evaluated by
/// multilinear interpolation and retracted pointwise.
///
/// Stored matrices must be near-structures (defect below 0.5); the
/// retraction then lands the interpolated field back on J^2 = -I, so an
/// interpolated gallery entry passes the same checks an analytic one
/// does. Off-grid queries clamp to the box. The field is smooth inside
/// cells and only C^0 across faces; derivative-based diagnostics are
/// meaningful away from faces.
pub struct GridStructure {
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<Mat>,
}

impl GridStructure {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>, values: Vec<Mat>) -> Result<Self> {
        let d = lo.len();
        if d == 0 || d % 2 != 0 || hi.len() != d || shape.len() != d {
            return Err(Error::InvalidArgument(String::from(
                "grid structure needs matching even-dimensional axes",
            )));
        }
        if shape.iter().any(|&s| s < 2) {
            return Err(Error::InvalidArgument(String::from(
                "grid needs at least two nodes per axis",
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument(String::from(
                "grid box must have positive extent",
            )));
        }
        let total: usize = shape.iter().product();
        if values.len() != total {
            return Err(Error::InvalidArgument(String::from(
                "grid value count does not match the shape",
            )));
        }
        let id = Mat::identity(d);
        for (i, m) in values.iter().enumerate() {
            if m.rows() != d || m.cols() != d {
                return Err(Error::InvalidArgument(String::from(
                    "grid matrices must match the chart dimension",
                )));
            }
            let defect = m.mul(m).add(&id).frobenius();
            if !(defect < 0.5) {
                return Err(Error::InvalidMap {
                    defect,
                    tol: 0.5,
                });
            }
            let _ = i;
        }
        Ok(GridStructure {
            lo,
            hi,
            shape,
            values,
        })
    }

    fn index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (i, &s) in idx.iter().zip(&self.shape) {
            flat = flat * s + i;
        }
        flat
    }

    fn interpolate(&self, p: &[f64]) -> Mat {
        let d = self.lo.len();
        let mut cell = vec![0usize; d];
        let mut frac = vec![0.0f64; d];
        for k in 0..d {
            let n = self.shape[k];
            let h = (self.hi[k] - self.lo[k]) / (n - 1) as f64;
            let t = ((p[k] - self.lo[k]) / h).clamp(0.0, (n - 1) as f64);
            let i = (fmath::floor(t) as usize).min(n - 2);
            cell[k] = i;
            frac[k] = t - i as f64;
        }
        let mut out = Mat::zeros(d, d);
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = vec![0usize; d];
            for k in 0..d {
                if corner >> k & 1 == 1 {
                    idx[k] = cell[k] + 1;
                    w *= frac[k];
                } else {
                    idx[k] = cell[k];
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                out = out.add(&self.values[self.index(&idx)].scale(w));
            }
        }
        out
    }

    pub fn structure(self, smoothness_step: f64) -> Result<AlmostComplexStructure> {
        let dim = self.lo.len();
        let me = Arc::new(self);
        let eval = Arc::new(move |p: &[f64]| {
            let b = me.interpolate(p);
            match b.mul(&b).scale(-1.0).inv_sqrt() {
                Ok(z) => b.mul(&z),
                Err(_) => b,
            }
        });
        AlmostComplexStructure::new(dim, smoothness_step, eval)
    }
}

/// Chart manifold over a grid-sampled structure; the domain is the open
/// sampling box.
pub fn grid_manifold(
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<Mat>,
) -> Result<ChartManifold> {
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let halfw: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let gs = GridStructure::new(lo, hi, shape, values)?;
    ChartManifold::new(
        gs.structure(1e-3)?,
        Domain::centered_box(center, halfw)?,
        NormField::identity(),
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{check_structure, taming_defect};
    use crate::sampling;

    #[test]
    fn bump_support_and_peak() {
        assert_eq!(bump_profile(0.0), 1.0);
        assert_eq!(bump_profile(1.0), 0.0);
        assert_eq!(bump_profile(3.0), 0.0);
        assert!(bump_profile(0.5) > 0.0 && bump_profile(0.5) < 1.0);
        assert!(bump_profile(0.999) < 1e-100);
    }

    #[test]
    fn generators_anticommute_with_standard() {
        for dim in [2usize, 4, 6] {
            let j0 = standard_structure_matrix(dim);
            for s in perturbation_generators(dim) {
                let anti = s.mul(&j0).add(&j0.mul(&s));
                assert_eq!(anti.max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn zero_tau_reproduces_standard_exactly() {
        let j = standard_perturbation(4, &[0.0, 0.0]).unwrap();
        let j0 = standard_structure_matrix(4);
        for i in 0..20 {
            let p: Vec<f64> = sampling::halton_point(51, i, 4)
                .into_iter()
                .map(|u| 2.0 * u - 1.0)
                .collect();
            assert_eq!(j.eval(&p).sub(&j0).max_abs(), 0.0);
        }
        let base = AlmostComplexStructure::standard(4);
        let j = perturbation_family(&base, &[0.0, 0.0]).unwrap();
        assert_eq!(j.eval(&[0.1, 0.2, 0.3, 0.4]).sub(&j0).max_abs(), 0.0);
    }

    #[test]
    fn retracted_family_is_an_exact_structure() {
        let m = perturbed_r4(&[0.4, 0.3]).unwrap();
        let report = check_structure(&m, 200, 1e-10).unwrap();
        assert!(report.pass, "defect {}", report.max_defect);
    }

    #[test]
    fn fast_and_general_routes_agree() {
        let base = AlmostComplexStructure::standard(4);
        let tau = [0.35, -0.2, 0.15];
        let fast = standard_perturbation(4, &tau).unwrap();
        let slow = perturbation_family(&base, &tau).unwrap();
        for i in 0..40 {
            let p: Vec<f64> = sampling::halton_point(52, i, 4)
                .into_iter()
                .map(|u| 3.0 * u - 1.5)
                .collect();
            let diff = fast.eval(&p).sub(&slow.eval(&p)).max_abs();
            assert!(diff < 1e-13, "point {i}: diff {diff}");
        }
    }

    #[test]
    fn oversized_tau_rejected() {
        assert!(matches!(
            standard_perturbation(4, &[0.5, 0.5]),
            Err(Error::PerturbationTooLarge)
        ));
        assert!(standard_perturbation(4, &[0.1; 5]).is_err());
    }

    #[test]
    fn family_is_lipschitz_in_tau() {
        let taus = [
            [0.30, 0.10],
            [0.32, 0.10],
            [0.30, 0.13],
            [0.25, 0.05],
        ];
        let p = [0.2, -0.3, 0.4, 0.1];
        let mut worst = 0.0f64;
        for a in &taus {
            for b in &taus {
                if a == b {
                    continue;
                }
                let ja = standard_perturbation(4, a).unwrap().eval(&p);
                let jb = standard_perturbation(4, b).unwrap().eval(&p);
                let dtau = fmath::hypot(a[0] - b[0], a[1] - b[1]);
                worst = worst.max(ja.sub(&jb).max_abs() / dtau);
            }
        }
        assert!(worst < 10.0, "Lipschitz ratio {worst}");
    }

    #[test]
    fn tame_domain_certificate() {
        let m = tame_r4(&[0.25, 0.15], 1.0).unwrap();
        let defect = taming_defect(&m, 100).unwrap();
        assert!(defect > 0.0, "defect {defect}");
    }

    #[test]
    fn grid_structure_matches_its_source_field() {
        let source = standard_perturbation(4, &[0.3, 0.2]).unwrap();
        let shape = vec![9usize; 4];
        let lo = vec![-1.0; 4];
        let hi = vec![1.0; 4];
        let mut values = Vec::new();
        let mut idx = vec![0usize; 4];
        loop {
            let p: Vec<f64> = idx
                .iter()
                .zip(&shape)
                .map(|(&i, &n)| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
                .collect();
            values.push(source.eval(&p));
            let mut k = 3;
            loop {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    break;
                }
                k -= 1;
            }
            if idx.iter().all(|&i| i == 0) {
                break;
            }
        }
        let m = grid_manifold(lo, hi, shape, values).unwrap();
        let report = check_structure(&m, 100, 1e-10).unwrap();
        assert!(report.pass, "defect {}", report.max_defect);

        // Interpolation error at generic points stays modest.
        let mut worst = 0.0f64;
        for i in 0..30 {
            let p: Vec<f64> = sampling::halton_point(53, i, 4)
                .into_iter()
                .map(|u| 1.8 * u - 0.9)
                .collect();
            worst = worst.max(m.structure.eval(&p).sub(&source.eval(&p)).max_abs());
        }
        assert!(worst < 0.05, "interpolation error {worst}");
    }

    #[test]
    fn grid_rejects_far_from_structure_values() {
        let values = vec![Mat::identity(2); 4];
        let got = GridStructure::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![2, 2], values);
        assert!(matches!(got, Err(Error::InvalidMap { .. })));
    }
}
