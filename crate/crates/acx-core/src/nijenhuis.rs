//! Nijenhuis tensor and the sampled general-position diagnostic.
//!
//! Convention, fixed once for the whole crate:
//!
//! ```text
//! N(X, Y) = [JX, JY] - J[JX, Y] - J[X, JY] - [X, Y]
//! ```
//!
//! evaluated on the constant extensions of tangent vectors. No 1/4
//! normalization: every consumer below only asks whether N vanishes or
//! which directions lie in its kernel, and those questions are
//! scale-invariant. With constant extensions the bracket terms reduce to
//! directional derivatives of the matrix field J:
//!
//! ```text
//! N(xi, eta) = (D_{J xi} J) eta - (D_{J eta} J) xi
//!            + J (D_eta J) xi   - J (D_xi J) eta
//! ```
//!
//! Derivatives use a 4th-order central stencil with step
//! `smoothness_step`, assembled from paired differences. Pairing matters:
//! a constant field produces literal zero matrices, not roundoff dust, so
//! constant structures report an exactly zero tensor.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::manifold::{AlmostComplexStructure, ChartManifold, Point};
use crate::sampling;

/// Directional derivative (D_v J)(p) of the structure field.
///
/// Linear in v by construction: the step is taken along the unit vector
/// of v and the result is rescaled by |v|.
pub fn structure_derivative(j: &AlmostComplexStructure, p: &[f64], v: &[f64]) -> Mat {
    let n = j.dim();
    let speed = linalg::norm2(v);
    if speed == 0.0 {
        return Mat::zeros(n, n);
    }
    let vhat = linalg::scale(v, 1.0 / speed);
    let h = j.smoothness_step();
    let at = |t: f64| j.eval(&linalg::axpy(p, t, &vhat));
    // (8(J(+h) - J(-h)) - (J(+2h) - J(-2h))) / 12h, differences first.
    let d1 = at(h).sub(&at(-h));
    let d2 = at(2.0 * h).sub(&at(-2.0 * h));
    d1.scale(8.0).sub(&d2).scale(speed / (12.0 * h))
}

/// N(xi, eta) at p, no domain checks. Callers that care about chart
/// boundaries go through [`nijenhuis`].
pub fn nijenhuis_tensor(
    j: &AlmostComplexStructure,
    p: &[f64],
    xi: &[f64],
    eta: &[f64],
) -> Vec<f64> {
    let jp = j.eval(p);
    let jxi = jp.mul_vec(xi);
    let jeta = jp.mul_vec(eta);
    let d_jxi = structure_derivative(j, p, &jxi);
    let d_jeta = structure_derivative(j, p, &jeta);
    let d_xi = structure_derivative(j, p, xi);
    let d_eta = structure_derivative(j, p, eta);

    let mut out = d_jxi.mul_vec(eta);
    let t2 = d_jeta.mul_vec(xi);
    let t3 = jp.mul_vec(&d_eta.mul_vec(xi));
    let t4 = jp.mul_vec(&d_xi.mul_vec(eta));
    for i in 0..out.len() {
        out[i] = out[i] - t2[i] + t3[i] - t4[i];
    }
    out
}

/// Membership check for every stencil point a tensor evaluation at p
/// touches: steps of h and 2h along the four derivative directions.
fn check_margin(m: &ChartManifold, p: &[f64], dirs: &[&[f64]]) -> Result<()> {
    let h = m.structure.smoothness_step();
    for v in dirs {
        let speed = linalg::norm2(v);
        if speed == 0.0 {
            continue;
        }
        let vhat = linalg::scale(v, 1.0 / speed);
        for t in [-2.0 * h, -h, h, 2.0 * h] {
            if !m.domain.contains(&linalg::axpy(p, t, &vhat)) {
                return Err(Error::BoundaryMargin { step: h });
            }
        }
    }
    Ok(())
}

/// N(xi, eta) at a chart point, requiring the finite-difference stencil
/// to stay inside the domain.
pub fn nijenhuis(m: &ChartManifold, p: &Point, xi: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
    let n = m.dim();
    if p.dim() != n || xi.len() != n || eta.len() != n {
        return Err(Error::InvalidArgument(String::from(
            "tensor arguments must match the chart dimension",
        )));
    }
    if !m.domain.contains(p.coords()) {
        return Err(Error::OutsideDomain);
    }
    let jp = m.structure.eval(p.coords());
    let jxi = jp.mul_vec(xi);
    let jeta = jp.mul_vec(eta);
    check_margin(m, p.coords(), &[xi, eta, &jxi, &jeta])?;
    Ok(nijenhuis_tensor(&m.structure, p.coords(), xi, eta))
}

/// Sampled witness that eta -> N(xi, eta) is a nonzero map for every
/// sampled unit xi, i.e. that no sampled direction sits in the kernel of
/// the tensor's first slot.
///
/// Returns false as soon as one xi sees max over eta of |N(xi, eta)| at
/// or below tol. The xi and eta samples both start with the coordinate
/// frame, so kernels aligned with chart axes (split products, constant
/// structures) are always caught. A true result is a sampled sufficient
/// check, not a proof.
pub fn slightly_general_position(
    m: &ChartManifold,
    p: &Point,
    xi_samples: usize,
    eta_samples: usize,
    tol: f64,
) -> Result<bool> {
    let n = m.dim();
    if xi_samples < n || eta_samples < n {
        return Err(Error::InvalidArgument(String::from(
            "general-position sampling needs at least dim directions per slot",
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(String::from(
            "general-position tolerance must be positive",
        )));
    }
    if !m.domain.contains(p.coords()) {
        return Err(Error::OutsideDomain);
    }

    let xis = sampling::unit_sphere_with_frame(3, xi_samples, n);
    let etas = sampling::unit_sphere_with_frame(4, eta_samples, n);

    let j = &m.structure;
    let jp = j.eval(p.coords());

    // Derivative matrices are shared across pairs; cache one D_v J and
    // one D_{Jv} J per sampled direction.
    let cache = |vs: &[Vec<f64>]| -> Result<Vec<(Mat, Mat)>> {
        let mut out = Vec::with_capacity(vs.len());
        for v in vs {
            let jv = jp.mul_vec(v);
            check_margin(m, p.coords(), &[v.as_slice(), &jv])?;
            out.push((
                structure_derivative(j, p.coords(), v),
                structure_derivative(j, p.coords(), &jv),
            ));
        }
        Ok(out)
    };
    let xi_derivs = cache(&xis)?;
    let eta_derivs = cache(&etas)?;

    for (xi, (d_xi, d_jxi)) in xis.iter().zip(&xi_derivs) {
        let mut best = 0.0f64;
        for (eta, (d_eta, d_jeta)) in etas.iter().zip(&eta_derivs) {
            let mut val = d_jxi.mul_vec(eta);
            let t2 = d_jeta.mul_vec(xi);
            let t3 = jp.mul_vec(&d_eta.mul_vec(xi));
            let t4 = jp.mul_vec(&d_xi.mul_vec(eta));
            for i in 0..val.len() {
                val[i] = val[i] - t2[i] + t3[i] - t4[i];
            }
            let norm = linalg::norm2(&val);
            if norm > best {
                best = norm;
            }
        }
        if best <= tol {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::manifold::{self, Domain, NormField};
    use alloc::sync::Arc;
    use alloc::vec;

    fn flat(dim: usize) -> ChartManifold {
        manifold::flat_box(dim, 4.0).unwrap()
    }

    #[test]
    fn constant_structures_give_bitwise_zero() {
        let m = flat(4);
        let p = Point::new(vec![0.3, -0.2, 0.1, 0.7]).unwrap();
        let n = nijenhuis(&m, &p, &[1.0, 0.4, -0.3, 0.2], &[0.0, 1.0, 0.5, -0.1]).unwrap();
        assert!(n.iter().all(|&x| x == 0.0));

        // Any constant matrix field, structure or not, has zero derivatives.
        let skew = Mat::from_rows(&[
            &[0.0, -2.0, 0.0, 0.0],
            &[0.5, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, -1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let j = AlmostComplexStructure::constant(skew).unwrap();
        let n = nijenhuis_tensor(&j, &[0.0; 4], &[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]);
        assert!(n.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn antisymmetry_on_a_varying_structure() {
        let m = gallery::perturbed_r4(&[0.4, 0.3]).unwrap();
        let p = Point::new(vec![0.23, -0.11, 0.05, 0.17]).unwrap();
        let xi = vec![0.9, -0.1, 0.3, 0.2];
        let eta = vec![-0.2, 0.8, 0.1, -0.4];
        let a = nijenhuis(&m, &p, &xi, &eta).unwrap();
        let b = nijenhuis(&m, &p, &eta, &xi).unwrap();
        for i in 0..4 {
            assert!((a[i] + b[i]).abs() < 1e-8, "slot {i}: {} vs {}", a[i], b[i]);
        }
    }

    #[test]
    fn bilinearity_on_a_varying_structure() {
        let m = gallery::perturbed_r4(&[0.4, 0.3]).unwrap();
        let p = Point::new(vec![0.1, 0.2, -0.15, 0.08]).unwrap();
        let xi1 = vec![1.0, 0.0, 0.5, -0.2];
        let xi2 = vec![0.0, 1.0, -0.3, 0.4];
        let eta = vec![0.2, -0.7, 1.0, 0.1];
        let (a, b) = (1.7, -0.6);
        let combo: Vec<f64> = (0..4).map(|i| a * xi1[i] + b * xi2[i]).collect();
        let lhs = nijenhuis(&m, &p, &combo, &eta).unwrap();
        let n1 = nijenhuis(&m, &p, &xi1, &eta).unwrap();
        let n2 = nijenhuis(&m, &p, &xi2, &eta).unwrap();
        for i in 0..4 {
            let rhs = a * n1[i] + b * n2[i];
            assert!((lhs[i] - rhs).abs() < 1e-7, "slot {i}: {} vs {rhs}", lhs[i]);
        }
    }

    #[test]
    fn twisting_the_first_slot_applies_minus_j() {
        let m = gallery::perturbed_r4(&[0.4, 0.3]).unwrap();
        let p = Point::new(vec![-0.05, 0.12, 0.2, -0.1]).unwrap();
        let xi = vec![0.6, 0.2, -0.5, 0.3];
        let eta = vec![-0.1, 0.9, 0.2, 0.4];
        let jp = m.structure.eval(p.coords());
        let lhs = nijenhuis(&m, &p, &jp.mul_vec(&xi), &eta).unwrap();
        let rhs = linalg::scale(&jp.mul_vec(&nijenhuis(&m, &p, &xi, &eta).unwrap()), -1.0);
        for i in 0..4 {
            assert!((lhs[i] - rhs[i]).abs() < 1e-7, "slot {i}: {} vs {}", lhs[i], rhs[i]);
        }
    }

    #[test]
    fn general_position_fails_for_constant_structures() {
        let m = flat(4);
        let p = Point::new(vec![0.0; 4]).unwrap();
        assert!(!slightly_general_position(&m, &p, 8, 8, 1e-10).unwrap());
    }

    /// A split product with one flat factor always has a kernel direction
    /// along that factor, however twisted the other factor is.
    #[test]
    fn general_position_fails_on_split_products() {
        let flat2 = manifold::flat_box(2, 4.0).unwrap();
        let pert4 = gallery::perturbed_r4(&[0.4, 0.3]).unwrap();
        let m = manifold::product_manifold(&flat2, &pert4).unwrap();
        let p = Point::new(vec![0.05, 0.0, 0.1, 0.02, -0.04, 0.08]).unwrap();

        // The twisted factor does contribute a visibly nonzero tensor.
        let xi = vec![0.0, 0.0, 1.0, 0.0, 0.3, -0.2];
        let eta = vec![0.0, 0.0, 0.0, 1.0, -0.4, 0.5];
        let n = nijenhuis(&m, &p, &xi, &eta).unwrap();
        assert!(linalg::norm2(&n) > 1e-4, "norm {}", linalg::norm2(&n));

        assert!(!slightly_general_position(&m, &p, 12, 12, 1e-8).unwrap());
    }

    #[test]
    fn boundary_margin_is_enforced() {
        let m = ChartManifold::new(
            AlmostComplexStructure::new(
                2,
                1e-2,
                Arc::new(|_p: &[f64]| manifold::standard_structure_matrix(2)),
            )
            .unwrap(),
            Domain::ball(vec![0.0, 0.0], 1.0).unwrap(),
            NormField::identity(),
            None,
        )
        .unwrap();
        let p = Point::new(vec![0.99, 0.0]).unwrap();
        let got = nijenhuis(&m, &p, &[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(got, Err(Error::BoundaryMargin { step: 1e-2 }));

        let q = Point::new(vec![1.5, 0.0]).unwrap();
        assert_eq!(
            nijenhuis(&m, &q, &[1.0, 0.0], &[0.0, 1.0]),
            Err(Error::OutsideDomain)
        );
    }

    #[test]
    fn sample_floor_is_enforced() {
        let m = flat(4);
        let p = Point::new(vec![0.0; 4]).unwrap();
        assert!(slightly_general_position(&m, &p, 3, 8, 1e-8).is_err());
    }
}
