//! Small dense matrices and vector helpers.
//!
//! Chart dimensions here are tiny (2 to 8), so a flat row-major `Vec<f64>`
//! with Gauss elimination beats pulling in a full linear algebra stack.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            a: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        let mut m = Mat::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            m.a[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.a
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let s = self.a[i * self.cols + k];
                if s == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.a[i * other.cols + j] += s * other.a[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self.a[i * self.cols + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(other.a.iter()) {
            *x += *y;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(other.a.iter()) {
            *x -= *y;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for x in out.a.iter_mut() {
            *x *= s;
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        fmath::sqrt(self.a.iter().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0_f64, |m, &x| m.max(fmath::abs(x)))
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Mat> {
        debug_assert!(self.is_square());
        let n = self.rows;
        let mut aug = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let mut pivot = col;
            let mut best = fmath::abs(aug[(col, col)]);
            for r in (col + 1)..n {
                let c = fmath::abs(aug[(r, col)]);
                if c > best {
                    best = c;
                    pivot = r;
                }
            }
            if best < 1e-300 {
                return Err(Error::Singular("inverse"));
            }
            if pivot != col {
                for j in 0..n {
                    aug.a.swap(col * n + j, pivot * n + j);
                    inv.a.swap(col * n + j, pivot * n + j);
                }
            }
            let d = aug[(col, col)];
            for j in 0..n {
                aug[(col, j)] /= d;
                inv[(col, j)] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = aug[(r, col)];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let s = aug[(col, j)];
                    aug[(r, j)] -= factor * s;
                    let t = inv[(col, j)];
                    inv[(r, j)] -= factor * t;
                }
            }
        }
        Ok(inv)
    }

    /// Numerical rank via row echelon with relative pivot threshold.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let mut m = self.clone();
        let scale = m.max_abs();
        if scale == 0.0 {
            return 0;
        }
        let tol = rel_tol * scale;
        let mut rank = 0;
        let mut row = 0;
        for col in 0..m.cols {
            let mut pivot = row;
            let mut best = 0.0;
            for r in row..m.rows {
                let c = fmath::abs(m[(r, col)]);
                if c > best {
                    best = c;
                    pivot = r;
                }
            }
            if best <= tol {
                continue;
            }
            if pivot != row {
                for j in 0..m.cols {
                    m.a.swap(row * m.cols + j, pivot * m.cols + j);
                }
            }
            for r in (row + 1)..m.rows {
                let f = m[(r, col)] / m[(row, col)];
                for j in col..m.cols {
                    let s = m[(row, j)];
                    m[(r, j)] -= f * s;
                }
            }
            rank += 1;
            row += 1;
            if row == m.rows {
                break;
            }
        }
        rank
    }

    pub fn det(&self) -> f64 {
        debug_assert!(self.is_square());
        let n = self.rows;
        let mut m = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut pivot = col;
            let mut best = fmath::abs(m[(col, col)]);
            for r in (col + 1)..n {
                let c = fmath::abs(m[(r, col)]);
                if c > best {
                    best = c;
                    pivot = r;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if pivot != col {
                det = -det;
                for j in 0..n {
                    m.a.swap(col * n + j, pivot * n + j);
                }
            }
            det *= m[(col, col)];
            for r in (col + 1)..n {
                let f = m[(r, col)] / m[(col, col)];
                for j in col..n {
                    let s = m[(col, j)];
                    m[(r, j)] -= f * s;
                }
            }
        }
        det
    }

    /// Principal inverse square root by the Denman-Beavers iteration.
    ///
    /// Valid for matrices whose spectrum avoids the nonpositive real axis;
    /// callers in this crate pass `I - A^2` with `A` a small perturbation,
    /// which is well inside the convergence region.
    pub fn inv_sqrt(&self) -> Result<Mat> {
        debug_assert!(self.is_square());
        let n = self.rows;
        let mut y = self.clone();
        let mut z = Mat::identity(n);
        for _ in 0..60 {
            let y_inv = y.inverse().map_err(|_| Error::PerturbationTooLarge)?;
            let z_inv = z.inverse().map_err(|_| Error::PerturbationTooLarge)?;
            let y_next = y.add(&z_inv).scale(0.5);
            let z_next = z.add(&y_inv).scale(0.5);
            let delta = y_next.sub(&y).frobenius();
            y = y_next;
            z = z_next;
            if delta < 1e-15 * (1.0 + y.frobenius()) {
                break;
            }
        }
        // z approximates self^(-1/2); verify before handing it back.
        let check = z.mul(self).mul(&z).sub(&Mat::identity(n)).frobenius();
        if !(check < 1e-10) {
            return Err(Error::PerturbationTooLarge);
        }
        Ok(z)
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.a[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.a[i * self.cols + j]
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    fmath::sqrt(dot(x, x))
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn scale(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|a| a * s).collect()
}

/// x + s*y
pub fn axpy(x: &[f64], s: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + s * b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]).unwrap();
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        assert!(id.sub(&Mat::identity(3)).frobenius() < 1e-12);
    }

    #[test]
    fn singular_inverse_rejected() {
        let m = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(m.inverse().is_err());
    }

    #[test]
    fn rank_detects_deficiency() {
        let m = Mat::from_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[0.0, 1.0, 1.0]]).unwrap();
        assert_eq!(m.rank(1e-10), 2);
        assert_eq!(Mat::identity(4).rank(1e-10), 4);
    }

    #[test]
    fn det_of_known_matrix() {
        let m = Mat::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
        assert!((m.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn inv_sqrt_of_spd() {
        let m = Mat::from_rows(&[&[1.2, 0.1], &[0.1, 0.9]]).unwrap();
        let s = m.inv_sqrt().unwrap();
        let check = s.mul(&m).mul(&s).sub(&Mat::identity(2)).frobenius();
        assert!(check < 1e-12);
    }
}
