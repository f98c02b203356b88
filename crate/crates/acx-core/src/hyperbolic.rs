//! Poincare geometry of the unit disk.
//!
//! Convention: the infinitesimal metric is |v| / (1 - |z|^2), so the
//! distance between 0 and r on the real axis is atanh(r) and the metric
//! has curvature -4. All chain lengths in this crate are measured in this
//! normalization; there is no factor 1/2 anywhere.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fmath;

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint {
    z: Complex64,
}

impl DiskPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if z.norm_sqr() < 1.0 {
            Ok(DiskPoint { z })
        } else {
            Err(Error::OutsideDomain)
        }
    }

    pub fn origin() -> Self {
        DiskPoint {
            z: Complex64::new(0.0, 0.0),
        }
    }

    pub fn from_xy(x: f64, y: f64) -> Result<Self> {
        Self::new(Complex64::new(x, y))
    }

    #[inline]
    pub fn z(&self) -> Complex64 {
        self.z
    }
}

/// Norm of a tangent vector `v` at `z` in the Poincare metric.
pub fn poincare_norm(z: &DiskPoint, v: Complex64) -> f64 {
    v.norm() / (1.0 - z.z.norm_sqr())
}

/// Hyperbolic distance between two points of the disk.
///
/// d(z, w) = atanh |(z - w) / (1 - conj(z) w)|, which is the integral of
/// the metric along the geodesic joining them.
pub fn poincare_distance(z: &DiskPoint, w: &DiskPoint) -> f64 {
    let num = z.z - w.z;
    let den = Complex64::new(1.0, 0.0) - z.z.conj() * w.z;
    fmath::atanh((num / den).norm())
}

/// Moebius automorphism z -> e^(i theta) (z - a) / (1 - conj(a) z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskAutomorphism {
    a: Complex64,
    theta: f64,
}

impl DiskAutomorphism {
    pub fn new(a: Complex64, theta: f64) -> Result<Self> {
        if a.norm_sqr() < 1.0 {
            Ok(DiskAutomorphism { a, theta })
        } else {
            Err(Error::OutsideDomain)
        }
    }

    pub fn identity() -> Self {
        DiskAutomorphism {
            a: Complex64::new(0.0, 0.0),
            theta: 0.0,
        }
    }

    /// The automorphism sending `a` to the origin (theta = 0).
    pub fn centering(a: &DiskPoint) -> Self {
        DiskAutomorphism { a: a.z, theta: 0.0 }
    }

    #[inline]
    pub fn a(&self) -> Complex64 {
        self.a
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    fn phase(&self) -> Complex64 {
        Complex64::new(fmath::cos(self.theta), fmath::sin(self.theta))
    }

    pub fn apply_raw(&self, z: Complex64) -> Complex64 {
        self.phase() * (z - self.a) / (Complex64::new(1.0, 0.0) - self.a.conj() * z)
    }

    pub fn apply(&self, z: &DiskPoint) -> DiskPoint {
        // Moebius maps of this form preserve the open disk; renormalize
        // only against rounding at the very rim.
        let w = self.apply_raw(z.z);
        DiskPoint::new(w).unwrap_or_else(|_| {
            let n = w.norm();
            DiskPoint {
                z: w * ((1.0 - 1e-15) / n),
            }
        })
    }

    /// Complex derivative at `z`.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = Complex64::new(1.0, 0.0) - self.a.conj() * z;
        self.phase() * (Complex64::new(1.0, 0.0) - self.a.norm_sqr()) / (den * den)
    }

    /// The inverse automorphism, again in the same normal form.
    pub fn inverse(&self) -> Self {
        // If phi(z) = e^(i t)(z - a)/(1 - conj(a) z) then
        // phi^(-1)(w) = e^(-i t)(w + a e^(i t))/(1 + conj(a) e^(-i t) w).
        DiskAutomorphism {
            a: -self.a * self.phase(),
            theta: -self.theta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn norm_examples() {
        let origin = DiskPoint::origin();
        assert_eq!(poincare_norm(&origin, c(1.0, 0.0)), 1.0);
        let half = DiskPoint::from_xy(0.5, 0.0).unwrap();
        assert!((poincare_norm(&half, c(1.0, 0.0)) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(poincare_norm(&half, c(0.0, 0.0)), 0.0);
    }

    #[test]
    fn distance_examples() {
        let origin = DiskPoint::origin();
        let half = DiskPoint::from_xy(0.5, 0.0).unwrap();
        assert_eq!(poincare_distance(&origin, &origin), 0.0);
        assert!((poincare_distance(&origin, &half) - fmath::atanh(0.5)).abs() < 1e-15);
        // rotation invariance
        let ihalf = DiskPoint::from_xy(0.0, 0.5).unwrap();
        assert!(
            (poincare_distance(&origin, &half) - poincare_distance(&origin, &ihalf)).abs()
                < 1e-15
        );
    }

    /// The closed form must agree with direct integration of the metric
    /// along a radial segment.
    #[test]
    fn distance_matches_radial_integration() {
        for &r in &[0.25, 0.5, 0.75, 0.9] {
            // Simpson's rule on s -> 1/(1 - s^2) over [0, r].
            let n = 4000;
            let h = r / n as f64;
            let f = |s: f64| 1.0 / (1.0 - s * s);
            let mut acc = f(0.0) + f(r);
            for k in 1..n {
                let s = k as f64 * h;
                acc += if k % 2 == 1 { 4.0 * f(s) } else { 2.0 * f(s) };
            }
            let integral = acc * h / 3.0;
            let closed = poincare_distance(
                &DiskPoint::origin(),
                &DiskPoint::from_xy(r, 0.0).unwrap(),
            );
            assert!(
                (closed - integral).abs() < 1e-6,
                "r={r}: closed {closed} vs integral {integral}"
            );
        }
    }

    #[test]
    fn automorphism_centers_and_inverts() {
        let a = DiskPoint::from_xy(0.3, -0.4).unwrap();
        let phi = DiskAutomorphism::centering(&a);
        assert!(phi.apply(&a).z().norm() < 1e-15);

        let inv = phi.inverse();
        for &(x, y) in &[(0.1, 0.2), (-0.5, 0.1), (0.0, 0.0), (0.7, -0.2)] {
            let z = DiskPoint::from_xy(x, y).unwrap();
            let back = inv.apply(&phi.apply(&z));
            assert!((back.z() - z.z()).norm() < 1e-14);
        }
    }

    #[test]
    fn identity_fixes_everything() {
        let id = DiskAutomorphism::identity();
        let z = DiskPoint::from_xy(0.3, 0.3).unwrap();
        assert_eq!(id.apply(&z).z(), z.z());
        assert_eq!(id.derivative(z.z()), c(1.0, 0.0));
    }

    #[test]
    fn rim_parameter_rejected() {
        assert!(DiskPoint::from_xy(1.0, 0.0).is_err());
        assert!(DiskAutomorphism::new(c(1.0, 0.0), 0.0).is_err());
    }

    /// Automorphisms are isometries: both the infinitesimal norm and the
    /// distance are preserved.
    #[test]
    fn moebius_invariance() {
        let phi = DiskAutomorphism::new(c(0.42, -0.17), 0.8).unwrap();
        let pts = [(0.1, 0.3), (-0.6, 0.2), (0.0, 0.0), (0.35, -0.55)];
        for &(x, y) in &pts {
            let z = DiskPoint::from_xy(x, y).unwrap();
            let v = c(0.3, -0.9);
            let pushed = poincare_norm(&phi.apply(&z), phi.derivative(z.z()) * v);
            assert!((pushed - poincare_norm(&z, v)).abs() < 1e-13);
        }
        for &(x1, y1) in &pts {
            for &(x2, y2) in &pts {
                let z = DiskPoint::from_xy(x1, y1).unwrap();
                let w = DiskPoint::from_xy(x2, y2).unwrap();
                let d0 = poincare_distance(&z, &w);
                let d1 = poincare_distance(&phi.apply(&z), &phi.apply(&w));
                assert!((d0 - d1).abs() < 1e-12);
            }
        }
    }
}
