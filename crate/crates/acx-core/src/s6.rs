//! The octonion almost complex structure on the round six-sphere.
//!
//! Points live on S^6 inside the purely imaginary octonions, identified
//! with R^7 on the basis (e1, ..., e7). The structure acts on tangent
//! vectors by the cross product, J_w(eta) = eta x w in the default order;
//! the opposite order w x eta gives the conjugate structure and is kept
//! available because either choice reads equally well off the defining
//! phrase. All tensor diagnostics are order-independent.
//!
//! Two presentations are shipped. The intrinsic one works with 7-vectors
//! and exact cross products; it also carries a closed-form Nijenhuis
//! tensor,
//!
//! ```text
//! N(xi, eta) = eta x (xi x w) - xi x (eta x w) + 2 (xi x eta) x w
//! ```
//!
//! obtained by differentiating the sphere-tangential extensions
//! X(u) = xi - <xi, u/|u|> u/|u| exactly and assembling the bracket
//! formula; tensoriality makes the extension choice immaterial, so this
//! is an independent oracle for the finite-difference tensor. The chart
//! presentation pulls J back to a bounded ball in R^6 through
//! stereographic projection from an excluded point, which must avoid the
//! invariant 2-sphere spanned by (e1, e2, e3).

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::{self, Mat};
use crate::manifold::{AlmostComplexStructure, ChartManifold, Domain, NormField};
use crate::octonion::cross_product;
use crate::sampling;
use crate::Complex64;

/// Which side the base point multiplies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossOrder {
    /// J_w(eta) = eta x w.
    EtaTimesW,
    /// J_w(eta) = w x eta, the conjugate structure.
    WTimesEta,
}

#[derive(Debug, Clone, Copy)]
pub struct S6Structure {
    pub order: CrossOrder,
}

pub const UNIT_TOL: f64 = 1e-12;
pub const TANGENT_TOL: f64 = 1e-10;

impl S6Structure {
    pub fn new(order: CrossOrder) -> Self {
        S6Structure { order }
    }

    pub fn standard() -> Self {
        S6Structure {
            order: CrossOrder::EtaTimesW,
        }
    }

    /// J_w(eta) without precondition checks.
    pub fn apply_raw(&self, w: &[f64], eta: &[f64]) -> Vec<f64> {
        match self.order {
            CrossOrder::EtaTimesW => cross_product(eta, w),
            CrossOrder::WTimesEta => cross_product(w, eta),
        }
    }

    /// J_w(eta) for unit w and tangent eta.
    pub fn apply(&self, w: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
        check_point_tangent(w, eta)?;
        Ok(self.apply_raw(w, eta))
    }

    /// Exact Nijenhuis value at w for tangent xi, eta. Identical for both
    /// cross orders: the defining formula is even in J.
    pub fn nijenhuis_exact(&self, w: &[f64], xi: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
        check_point_tangent(w, xi)?;
        check_point_tangent(w, eta)?;
        let xw = cross_product(xi, w);
        let ew = cross_product(eta, w);
        let xe = cross_product(xi, eta);
        let t1 = cross_product(eta, &xw);
        let t2 = cross_product(xi, &ew);
        let t3 = cross_product(&xe, w);
        Ok((0..7).map(|i| t1[i] - t2[i] + 2.0 * t3[i]).collect())
    }

    /// Stereographic chart centered at the antipode of `pole`, restricted
    /// to the open ball of the given radius in R^6.
    pub fn chart(&self, pole: &[f64], radius: f64, smoothness_step: f64) -> Result<ChartManifold> {
        let maps = Arc::new(StereographicChart::new(pole)?);
        let order = *self;
        let eval = Arc::new(move |x: &[f64]| {
            let w = maps.to_sphere(x);
            let mut cols: Vec<Vec<f64>> = Vec::with_capacity(6);
            for k in 0..6 {
                let mut h = [0.0f64; 6];
                h[k] = 1.0;
                let u = maps.differential(x, &h);
                let ju = order.apply_raw(&w, &u);
                cols.push(maps.codifferential(&w, &ju));
            }
            Mat::from_fn(6, 6, |i, k| cols[k][i])
        });
        ChartManifold::new(
            AlmostComplexStructure::new(6, smoothness_step, eval)?,
            Domain::ball(vec![0.0; 6], radius)?,
            NormField::identity(),
            None,
        )
    }
}

fn check_point_tangent(w: &[f64], eta: &[f64]) -> Result<()> {
    if w.len() != 7 || eta.len() != 7 {
        return Err(Error::InvalidArgument(String::from(
            "sphere points and tangents are 7-vectors",
        )));
    }
    if fmath::abs(linalg::norm2(w) - 1.0) > UNIT_TOL {
        return Err(Error::InvalidArgument(String::from(
            "base point must lie on the unit sphere",
        )));
    }
    if fmath::abs(linalg::dot(w, eta)) > TANGENT_TOL * (1.0 + linalg::norm2(eta)) {
        return Err(Error::InvalidArgument(String::from(
            "vector is not tangent to the sphere at the base point",
        )));
    }
    Ok(())
}

/// J_w(eta) = eta x w in the default order.
pub fn s6_apply(w: &[f64], eta: &[f64]) -> Result<Vec<f64>> {
    S6Structure::standard().apply(w, eta)
}

/// Stereographic correspondence between S^6 minus a pole and R^6.
///
/// With s = |x|^2 and D = s + 1:
///   to_sphere(x)   = ((s - 1)/D) pole + (2/D) B x
///   to_chart(w)__i = <w, b_i> / (1 - <w, pole>)
/// where B x = sum x_i b_i over an orthonormal basis of the pole's
/// complement. For pole = e7 the basis is exactly (e1, ..., e6), so the
/// invariant 2-sphere appears as the unit sphere of the first three
/// chart coordinates.
pub struct StereographicChart {
    pole: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl StereographicChart {
    pub fn new(pole: &[f64]) -> Result<Self> {
        if pole.len() != 7 {
            return Err(Error::InvalidArgument(String::from(
                "the excluded point is a 7-vector",
            )));
        }
        if fmath::abs(linalg::norm2(pole) - 1.0) > UNIT_TOL {
            return Err(Error::InvalidArgument(String::from(
                "the excluded point must lie on the unit sphere",
            )));
        }
        // The invariant 2-sphere is the unit sphere of span(e1, e2, e3);
        // a pole there would puncture the one surface the gallery is
        // built to keep intact.
        if pole[3..].iter().all(|&v| fmath::abs(v) < 1e-9) {
            return Err(Error::Config(String::from(
                "excluded point lies on the invariant 2-sphere; pick a pole off span(e1,e2,e3)",
            )));
        }

        // Deterministic greedy orthonormal basis of the pole complement:
        // largest residual first, index order breaking ties.
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(6);
        let mut residuals: Vec<Vec<f64>> = (0..7)
            .map(|k| {
                let mut e = vec![0.0; 7];
                e[k] = 1.0;
                let c = linalg::dot(&e, pole);
                linalg::axpy(&e, -c, pole)
            })
            .collect();
        while basis.len() < 6 {
            let (mut best, mut best_norm) = (0usize, -1.0f64);
            for (k, r) in residuals.iter().enumerate() {
                let n = linalg::norm2(r);
                if n > best_norm + 1e-15 {
                    best = k;
                    best_norm = n;
                }
            }
            let b = linalg::scale(&residuals[best], 1.0 / best_norm);
            for r in residuals.iter_mut() {
                let c = linalg::dot(r, &b);
                *r = linalg::axpy(r, -c, &b);
            }
            basis.push(b);
        }
        Ok(StereographicChart {
            pole: pole.to_vec(),
            basis,
        })
    }

    pub fn pole(&self) -> &[f64] {
        &self.pole
    }

    fn lift(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 7];
        for (xi, b) in x.iter().zip(&self.basis) {
            for i in 0..7 {
                out[i] += xi * b[i];
            }
        }
        out
    }

    pub fn to_sphere(&self, x: &[f64]) -> Vec<f64> {
        let s = linalg::dot(x, x);
        let d = s + 1.0;
        let lifted = self.lift(x);
        (0..7)
            .map(|i| ((s - 1.0) / d) * self.pole[i] + (2.0 / d) * lifted[i])
            .collect()
    }

    pub fn to_chart(&self, w: &[f64]) -> Vec<f64> {
        let denom = 1.0 - linalg::dot(w, &self.pole);
        self.basis.iter().map(|b| linalg::dot(w, b) / denom).collect()
    }

    /// Pushforward of a chart vector h at x to the tangent space at
    /// to_sphere(x).
    pub fn differential(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let s = linalg::dot(x, x);
        let d = s + 1.0;
        let xh = linalg::dot(x, h);
        let lifted_x = self.lift(x);
        let lifted_h = self.lift(h);
        (0..7)
            .map(|i| {
                (4.0 * xh / (d * d)) * self.pole[i] + (2.0 / d) * lifted_h[i]
                    - (4.0 * xh / (d * d)) * lifted_x[i]
            })
            .collect()
    }

    /// Pullback of a tangent vector u at w to chart coordinates.
    pub fn codifferential(&self, w: &[f64], u: &[f64]) -> Vec<f64> {
        let denom = 1.0 - linalg::dot(w, &self.pole);
        let up = linalg::dot(u, &self.pole);
        self.basis
            .iter()
            .map(|b| linalg::dot(u, b) / denom + linalg::dot(w, b) * up / (denom * denom))
            .collect()
    }
}

/// Rational parametrization of the invariant 2-sphere,
/// z -> (2 Re z, 2 Im z, |z|^2 - 1) / (|z|^2 + 1) on the (e1, e2, e3)
/// axes. Pseudoholomorphic for the default cross order: the pushforward
/// of multiplication by i equals J at the image point.
pub fn s2_parametrization(z: Complex64) -> Vec<f64> {
    let s = z.norm_sqr();
    let d = s + 1.0;
    let mut out = vec![0.0; 7];
    out[0] = 2.0 * z.re / d;
    out[1] = 2.0 * z.im / d;
    out[2] = (s - 1.0) / d;
    out
}

/// Exact differential of [`s2_parametrization`] applied to h.
pub fn s2_parametrization_diff(z: Complex64, h: Complex64) -> Vec<f64> {
    let s = z.norm_sqr();
    let d = s + 1.0;
    let ds = 2.0 * (z.re * h.re + z.im * h.im);
    let mut out = vec![0.0; 7];
    out[0] = (2.0 * h.re * d - 2.0 * z.re * ds) / (d * d);
    out[1] = (2.0 * h.im * d - 2.0 * z.im * ds) / (d * d);
    out[2] = 2.0 * ds / (d * d);
    out
}

/// Invariance report for the 2-sphere tangent planes.
#[derive(Debug, Clone, PartialEq)]
pub struct S2InvarianceReport {
    pub samples: usize,
    /// Largest component of J_w(eta) outside span(e1,e2,e3) over sampled
    /// w on the invariant sphere with tangents inside the span.
    pub max_leak: f64,
    /// Same quantity for control points placed generically on S^6, where
    /// no fixed 3-space is preserved.
    pub control_leak: f64,
    pub pass: bool,
}

/// Checks that tangent planes of the 2-sphere inside span(e1,e2,e3) are
/// closed under J, and that generic base points leak by a visible margin.
pub fn s2_invariance_check(samples: usize) -> S2InvarianceReport {
    let structure = S6Structure::standard();
    let count = samples.max(1);

    let mut max_leak = 0.0f64;
    for (i, w3) in sampling::unit_sphere(21, count, 3).iter().enumerate() {
        let mut w = vec![0.0; 7];
        w[..3].copy_from_slice(w3);
        // Tangent to the 2-sphere at w, still inside the quaternion span.
        let probe = sampling::unit_sphere(22, count, 3)[i].clone();
        let mut eta = vec![0.0; 7];
        eta[..3].copy_from_slice(&probe);
        let c = linalg::dot(&eta, &w);
        let eta = linalg::axpy(&eta, -c, &w);
        if linalg::norm2(&eta) < 1e-8 {
            continue;
        }
        let jv = structure.apply_raw(&w, &eta);
        let leak = jv[3..].iter().fold(0.0f64, |m, &v| m.max(fmath::abs(v)));
        max_leak = max_leak.max(leak / linalg::norm2(&eta));
    }

    let mut control_leak = 0.0f64;
    for w in sampling::unit_sphere(23, count, 7) {
        // Skip accidental near-members of the invariant sphere.
        if w[3..].iter().map(|v| v * v).sum::<f64>() < 0.05 {
            continue;
        }
        let mut eta = vec![0.0; 7];
        eta[..3].copy_from_slice(&[1.0, 0.5, -0.25]);
        let c = linalg::dot(&eta, &w);
        let eta = linalg::axpy(&eta, -c, &w);
        let n = linalg::norm2(&eta);
        if n < 1e-8 {
            continue;
        }
        let jv = structure.apply_raw(&w, &eta);
        let leak = jv[3..].iter().fold(0.0f64, |m, &v| m.max(fmath::abs(v)));
        control_leak = control_leak.max(leak / n);
    }

    S2InvarianceReport {
        samples: count,
        max_leak,
        control_leak,
        pass: max_leak <= 1e-12 && control_leak > 1e-3,
    }
}

/// Default chart: pole e7, ball radius as given, derivative step 1e-3.
pub fn s6_chart(radius: f64) -> Result<ChartManifold> {
    let mut pole = vec![0.0; 7];
    pole[6] = 1.0;
    S6Structure::standard().chart(&pole, radius, 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{check_structure, Point};
    use crate::nijenhuis;

    fn tangent_at(w: &[f64], seed: u64, i: u64) -> Vec<f64> {
        let raw = sampling::gaussian_vector(seed, i, 7);
        let c = linalg::dot(&raw, w);
        let t = linalg::axpy(&raw, -c, w);
        linalg::scale(&t, 1.0 / linalg::norm2(&t))
    }

    #[test]
    fn applying_twice_negates() {
        let s = S6Structure::standard();
        for i in 0..100 {
            let w = sampling::unit_sphere(31, 100, 7)[i as usize].clone();
            let eta = tangent_at(&w, 32, i);
            let jj = s.apply(&w, &s.apply(&w, &eta).unwrap()).unwrap();
            for k in 0..7 {
                assert!((jj[k] + eta[k]).abs() < 1e-12, "slot {k}");
            }
        }
    }

    #[test]
    fn output_is_tangent() {
        let s = S6Structure::standard();
        for i in 0..100 {
            let w = sampling::unit_sphere(33, 100, 7)[i as usize].clone();
            let eta = tangent_at(&w, 34, i);
            let jv = s.apply(&w, &eta).unwrap();
            assert!(linalg::dot(&jv, &w).abs() < 1e-12);
            // Unit tangents map to unit tangents: |eta x w| = |eta||w|.
            assert!((linalg::norm2(&jv) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quaternion_example() {
        // w = e1, eta = e2: eta x w = Im(e2 e1) = -e3.
        let mut w = vec![0.0; 7];
        w[0] = 1.0;
        let mut eta = vec![0.0; 7];
        eta[1] = 1.0;
        let jv = s6_apply(&w, &eta).unwrap();
        let mut want = vec![0.0; 7];
        want[2] = -1.0;
        assert_eq!(jv, want);
    }

    #[test]
    fn preconditions_enforced() {
        let w = vec![0.5; 7];
        let eta = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(s6_apply(&w, &eta).is_err());

        let mut w = vec![0.0; 7];
        w[0] = 1.0;
        assert!(s6_apply(&w, &w.clone()).is_err());
    }

    #[test]
    fn orders_are_conjugate() {
        let a = S6Structure::new(CrossOrder::EtaTimesW);
        let b = S6Structure::new(CrossOrder::WTimesEta);
        let w = sampling::unit_sphere(35, 1, 7)[0].clone();
        let eta = tangent_at(&w, 36, 0);
        let ja = a.apply(&w, &eta).unwrap();
        let jb = b.apply(&w, &eta).unwrap();
        for k in 0..7 {
            assert!((ja[k] + jb[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn invariant_sphere_report() {
        let report = s2_invariance_check(200);
        assert!(report.pass, "{report:?}");
        assert!(report.max_leak <= 1e-12);
        assert!(report.control_leak > 1e-3);
    }

    #[test]
    fn parametrization_is_pseudoholomorphic() {
        let s = S6Structure::standard();
        for i in 0..50 {
            let u = sampling::halton_point(37, i, 2);
            let z = Complex64::new(4.0 * u[0] - 2.0, 4.0 * u[1] - 2.0);
            let w = s2_parametrization(z);
            assert!((linalg::norm2(&w) - 1.0).abs() < 1e-12);
            for h in [Complex64::new(1.0, 0.0), Complex64::new(0.3, -0.8)] {
                let dh = s2_parametrization_diff(z, h);
                let dih = s2_parametrization_diff(z, Complex64::new(0.0, 1.0) * h);
                let jdh = s.apply_raw(&w, &dh);
                for k in 0..7 {
                    assert!((dih[k] - jdh[k]).abs() < 1e-12, "z {z} slot {k}");
                }
            }
        }
    }

    #[test]
    fn chart_roundtrips() {
        let chart = StereographicChart::new(&{
            let mut p = vec![0.0; 7];
            p[6] = 1.0;
            p
        })
        .unwrap();
        for i in 0..50 {
            let x: Vec<f64> = sampling::halton_point(38, i, 6)
                .into_iter()
                .map(|u| 4.0 * u - 2.0)
                .collect();
            let w = chart.to_sphere(&x);
            assert!((linalg::norm2(&w) - 1.0).abs() < 1e-12);
            let back = chart.to_chart(&w);
            for k in 0..6 {
                assert!((back[k] - x[k]).abs() < 1e-10);
            }
            let h: Vec<f64> = sampling::halton_point(39, i, 6)
                .into_iter()
                .map(|u| 2.0 * u - 1.0)
                .collect();
            let u = chart.differential(&x, &h);
            assert!(linalg::dot(&u, &w).abs() < 1e-12, "pushforward tangency");
            let back_h = chart.codifferential(&w, &u);
            for k in 0..6 {
                assert!((back_h[k] - h[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pole_on_invariant_sphere_rejected() {
        let mut p = vec![0.0; 7];
        p[1] = 1.0;
        assert!(matches!(
            StereographicChart::new(&p),
            Err(Error::Config(_))
        ));
        // Mixed unit vector off the span is fine.
        let mut q = vec![0.0; 7];
        q[1] = fmath::sqrt(0.5);
        q[5] = fmath::sqrt(0.5);
        assert!(StereographicChart::new(&q).is_ok());
    }

    #[test]
    fn chart_structure_squares_to_minus_identity() {
        let m = s6_chart(2.5).unwrap();
        let report = check_structure(&m, 100, 1e-10).unwrap();
        assert!(report.pass, "defect {}", report.max_defect);
    }

    #[test]
    fn invariant_sphere_sits_in_leading_chart_coordinates() {
        let chart = StereographicChart::new(&{
            let mut p = vec![0.0; 7];
            p[6] = 1.0;
            p
        })
        .unwrap();
        let z = Complex64::new(0.4, -1.3);
        let w = s2_parametrization(z);
        let x = chart.to_chart(&w);
        assert!(x[3..].iter().all(|&v| v.abs() < 1e-14));
        let r: f64 = x[..3].iter().map(|v| v * v).sum();
        assert!((r - 1.0).abs() < 1e-12);
    }

    /// The finite-difference chart tensor must match the exact intrinsic
    /// tensor pushed through the chart differentials.
    #[test]
    fn chart_tensor_matches_exact_oracle() {
        let m = s6_chart(2.5).unwrap();
        let chart = StereographicChart::new(&{
            let mut p = vec![0.0; 7];
            p[6] = 1.0;
            p
        })
        .unwrap();
        let s = S6Structure::standard();
        for i in 0..10 {
            let x: Vec<f64> = sampling::halton_point(41, i, 6)
                .into_iter()
                .map(|u| 1.6 * u - 0.8)
                .collect();
            let xi: Vec<f64> = sampling::halton_point(42, i, 6)
                .into_iter()
                .map(|u| 2.0 * u - 1.0)
                .collect();
            let eta: Vec<f64> = sampling::halton_point(43, i, 6)
                .into_iter()
                .map(|u| 2.0 * u - 1.0)
                .collect();
            let p = Point::new(x.clone()).unwrap();
            let numeric = nijenhuis::nijenhuis(&m, &p, &xi, &eta).unwrap();

            let w = chart.to_sphere(&x);
            let exact7 = s
                .nijenhuis_exact(&w, &chart.differential(&x, &xi), &chart.differential(&x, &eta))
                .unwrap();
            let exact = chart.codifferential(&w, &exact7);
            for k in 0..6 {
                assert!(
                    (numeric[k] - exact[k]).abs() < 1e-7,
                    "sample {i} slot {k}: {} vs {}",
                    numeric[k],
                    exact[k]
                );
            }
        }
    }

    #[test]
    fn tensor_is_nonzero_and_general_position_holds() {
        let m = s6_chart(2.5).unwrap();
        let p = Point::new(vec![0.3, -0.2, 0.5, 0.1, -0.4, 0.2]).unwrap();
        assert!(nijenhuis::slightly_general_position(&m, &p, 12, 12, 1e-4).unwrap());

        let w = sampling::unit_sphere(44, 1, 7)[0].clone();
        let xi = tangent_at(&w, 45, 0);
        let eta = tangent_at(&w, 46, 0);
        let n = S6Structure::standard().nijenhuis_exact(&w, &xi, &eta).unwrap();
        assert!(linalg::norm2(&n) > 0.1, "|N| = {}", linalg::norm2(&n));
    }
}
