//! Octonion arithmetic and the seven-dimensional cross product.
//!
//! Multiplication is the Cayley-Dickson doubling of the quaternions,
//!
//! ```text
//! (a, b) (c, d) = (a c - conj(d) b,  d a + b conj(c))
//! ```
//!
//! over the basis 1, e1, e2, e3 (the quaternions 1, i, j, k) and
//! e4 = (0, 1), e5 = (0, i), e6 = (0, j), e7 = (0, k). Under this
//! convention the span of (1, e1, e2, e3) is literally a quaternion
//! subalgebra, e1 e2 = e3, and the product is norm-multiplicative.
//!
//! The cross product on R^7 is x times y = Im(x y) for purely imaginary
//! x, y; it is antisymmetric, orthogonal to both factors, and satisfies
//! the Lagrange identity |x times y|^2 = |x|^2 |y|^2 - <x, y>^2.

use alloc::vec::Vec;

use crate::fmath;

/// Quaternion product on (w, x, y, z) components.
fn quat_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn quat_conj(a: &[f64; 4]) -> [f64; 4] {
    [a[0], -a[1], -a[2], -a[3]]
}

/// Octonion product of 8-component vectors, real part first.
pub fn octonion_multiply(x: &[f64; 8], y: &[f64; 8]) -> [f64; 8] {
    let a: [f64; 4] = [x[0], x[1], x[2], x[3]];
    let b: [f64; 4] = [x[4], x[5], x[6], x[7]];
    let c: [f64; 4] = [y[0], y[1], y[2], y[3]];
    let d: [f64; 4] = [y[4], y[5], y[6], y[7]];

    let ac = quat_mul(&a, &c);
    let db_conj = quat_mul(&quat_conj(&d), &b);
    let da = quat_mul(&d, &a);
    let bc_conj = quat_mul(&b, &quat_conj(&c));

    [
        ac[0] - db_conj[0],
        ac[1] - db_conj[1],
        ac[2] - db_conj[2],
        ac[3] - db_conj[3],
        da[0] + bc_conj[0],
        da[1] + bc_conj[1],
        da[2] + bc_conj[2],
        da[3] + bc_conj[3],
    ]
}

pub fn octonion_conjugate(x: &[f64; 8]) -> [f64; 8] {
    let mut out = *x;
    for v in out.iter_mut().skip(1) {
        *v = -*v;
    }
    out
}

pub fn octonion_norm(x: &[f64; 8]) -> f64 {
    fmath::sqrt(x.iter().map(|v| v * v).sum())
}

/// Structure constants c[i][j][k] with e_i e_j = sum_k c[i][j][k] e_k.
///
/// Every entry is -1, 0, or 1; the table is generated from the doubling
/// formula rather than transcribed, so it cannot drift from the product.
pub struct OctonionTable {
    c: [[[f64; 8]; 8]; 8],
}

impl OctonionTable {
    pub fn new() -> Self {
        let mut c = [[[0.0f64; 8]; 8]; 8];
        for i in 0..8 {
            for j in 0..8 {
                let mut ei = [0.0f64; 8];
                let mut ej = [0.0f64; 8];
                ei[i] = 1.0;
                ej[j] = 1.0;
                c[i][j] = octonion_multiply(&ei, &ej);
            }
        }
        OctonionTable { c }
    }

    #[inline]
    pub fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[i][j][k]
    }

    pub fn basis_product(&self, i: usize, j: usize) -> [f64; 8] {
        self.c[i][j]
    }

    /// Multiplication through the stored constants; agrees with
    /// [`octonion_multiply`] and exists so the table itself is testable.
    pub fn multiply(&self, x: &[f64; 8], y: &[f64; 8]) -> [f64; 8] {
        let mut out = [0.0f64; 8];
        for i in 0..8 {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..8 {
                if y[j] == 0.0 {
                    continue;
                }
                let s = x[i] * y[j];
                for k in 0..8 {
                    out[k] += s * self.c[i][j][k];
                }
            }
        }
        out
    }

    /// True when products of the first four basis elements stay within
    /// the first four coordinates.
    pub fn quaternion_subalgebra_closed(&self) -> bool {
        for i in 0..4 {
            for j in 0..4 {
                if self.c[i][j][4..].iter().any(|&v| v != 0.0) {
                    return false;
                }
            }
        }
        true
    }
}

impl Default for OctonionTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Cross product of purely imaginary octonions, on 7-component vectors
/// indexed by (e1, ..., e7).
pub fn cross_product(x: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), 7);
    debug_assert_eq!(y.len(), 7);
    let mut xo = [0.0f64; 8];
    let mut yo = [0.0f64; 8];
    xo[1..8].copy_from_slice(x);
    yo[1..8].copy_from_slice(y);
    let prod = octonion_multiply(&xo, &yo);
    prod[1..8].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::sampling;

    fn sample_octonion(seed: u64, i: u64) -> [f64; 8] {
        let v = sampling::gaussian_vector(seed, i, 8);
        let mut out = [0.0f64; 8];
        out.copy_from_slice(&v);
        out
    }

    #[test]
    fn unital() {
        let one = {
            let mut o = [0.0f64; 8];
            o[0] = 1.0;
            o
        };
        for i in 0..32 {
            let x = sample_octonion(7, i);
            assert_eq!(octonion_multiply(&one, &x), x);
            assert_eq!(octonion_multiply(&x, &one), x);
        }
    }

    #[test]
    fn imaginary_units_square_to_minus_one() {
        let table = OctonionTable::new();
        for i in 1..8 {
            let sq = table.basis_product(i, i);
            assert_eq!(sq[0], -1.0);
            assert!(sq[1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn quaternion_relations() {
        let table = OctonionTable::new();
        assert!(table.quaternion_subalgebra_closed());
        // e1 e2 = e3 and the cyclic relations.
        assert_eq!(table.basis_product(1, 2)[3], 1.0);
        assert_eq!(table.basis_product(2, 3)[1], 1.0);
        assert_eq!(table.basis_product(3, 1)[2], 1.0);
        assert_eq!(table.basis_product(2, 1)[3], -1.0);
    }

    #[test]
    fn table_agrees_with_direct_product() {
        let table = OctonionTable::new();
        for i in 0..16 {
            let x = sample_octonion(8, i);
            let y = sample_octonion(9, i);
            let a = octonion_multiply(&x, &y);
            let b = table.multiply(&x, &y);
            for k in 0..8 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_multiplicative() {
        for i in 0..200 {
            let x = sample_octonion(10, i);
            let y = sample_octonion(11, i);
            let lhs = octonion_norm(&octonion_multiply(&x, &y));
            let rhs = octonion_norm(&x) * octonion_norm(&y);
            assert!(
                (lhs - rhs).abs() <= 1e-12 * rhs.max(1.0),
                "sample {i}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn alternative_identity() {
        for i in 0..100 {
            let x = sample_octonion(12, i);
            let y = sample_octonion(13, i);
            let lhs = octonion_multiply(&octonion_multiply(&x, &x), &y);
            let rhs = octonion_multiply(&x, &octonion_multiply(&x, &y));
            for k in 0..8 {
                assert!((lhs[k] - rhs[k]).abs() < 1e-10, "slot {k}");
            }
        }
    }

    #[test]
    fn cross_product_basics() {
        let e = |k: usize| {
            let mut v = alloc::vec![0.0f64; 7];
            v[k - 1] = 1.0;
            v
        };
        // e1 x e2 = e3 under the quaternion relations.
        assert_eq!(cross_product(&e(1), &e(2)), e(3));
        // Reversed order flips the sign.
        let back = cross_product(&e(2), &e(1));
        assert_eq!(linalg::scale(&back, -1.0), e(3));
        // x cross x vanishes.
        let x = sampling::gaussian_vector(14, 0, 7);
        assert!(linalg::norm2(&cross_product(&x, &x)) < 1e-12);
    }

    #[test]
    fn cross_product_orthogonality_and_lagrange() {
        for i in 0..200 {
            let x = sampling::gaussian_vector(15, i, 7);
            let y = sampling::gaussian_vector(16, i, 7);
            let c = cross_product(&x, &y);
            assert!(linalg::dot(&c, &x).abs() < 1e-12 * (1.0 + linalg::norm2(&c)));
            assert!(linalg::dot(&c, &y).abs() < 1e-12 * (1.0 + linalg::norm2(&c)));
            let lhs = linalg::dot(&c, &c);
            let rhs = linalg::dot(&x, &x) * linalg::dot(&y, &y)
                - linalg::dot(&x, &y) * linalg::dot(&x, &y);
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "sample {i}");
        }
    }

    #[test]
    fn antisymmetry_of_cross_product() {
        for i in 0..50 {
            let x = sampling::gaussian_vector(17, i, 7);
            let y = sampling::gaussian_vector(18, i, 7);
            let a = cross_product(&x, &y);
            let b = cross_product(&y, &x);
            for k in 0..7 {
                assert!((a[k] + b[k]).abs() < 1e-12);
            }
        }
    }
}
