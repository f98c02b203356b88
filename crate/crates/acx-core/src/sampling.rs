//! Deterministic low-discrepancy sampling.
//!
//! Reports must be reproducible, so every sampling loop in the crate runs
//! off Halton sequences with a seed-controlled start index instead of a
//! stateful RNG. Taking a larger `count` with the same seed extends the
//! sample set; it never reshuffles it.

use alloc::vec::Vec;

use crate::fmath;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical-inverse of `index` in the given base, in [0, 1).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut inv = inv_base;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * inv;
        index /= base;
        inv *= inv_base;
    }
    out
}

/// The `i`-th Halton point in `dims` dimensions, components in [0, 1).
///
/// Indices start at 1 internally so no coordinate is ever exactly zero.
pub fn halton_point(seed: u64, i: u64, dims: usize) -> Vec<f64> {
    assert!(dims <= PRIMES.len(), "halton dimension limit exceeded");
    let idx = seed.wrapping_add(i).wrapping_add(1);
    (0..dims).map(|d| radical_inverse(idx, PRIMES[d])).collect()
}

/// Standard Gaussians from Halton pairs via Box-Muller.
pub fn gaussian_vector(seed: u64, i: u64, dims: usize) -> Vec<f64> {
    let pairs = dims.div_ceil(2);
    let u = halton_point(seed, i, 2 * pairs);
    let mut out = Vec::with_capacity(dims);
    for p in 0..pairs {
        let (u1, u2) = (u[2 * p], u[2 * p + 1]);
        let r = fmath::sqrt(-2.0 * fmath::ln(u1.max(1e-300)));
        let a = 2.0 * fmath::PI * u2;
        out.push(r * fmath::cos(a));
        if out.len() < dims {
            out.push(r * fmath::sin(a));
        }
    }
    out
}

/// `count` unit vectors in `dim` dimensions, low-discrepancy on the sphere.
pub fn unit_sphere(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    while out.len() < count {
        let g = gaussian_vector(seed, i, dim);
        i += 1;
        let n = crate::linalg::norm2(&g);
        if n > 1e-8 {
            out.push(crate::linalg::scale(&g, 1.0 / n));
        }
    }
    out
}

/// Unit vectors with the coordinate frame prepended.
///
/// Degeneracy tests (kernel directions of tensors, taming minima) often
/// sit exactly on coordinate axes; generic samples would miss them.
pub fn unit_sphere_with_frame(seed: u64, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let mut e = alloc::vec![0.0; dim];
            e[k] = 1.0;
            e
        })
        .collect();
    if count > dim {
        out.extend(unit_sphere(seed, count - dim, dim));
    }
    out.truncate(count.max(dim));
    out
}

/// `count` points of the Halton sequence scaled into the box `[lo, hi]`.
pub fn box_points(seed: u64, count: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let dims = lo.len();
    (0..count as u64)
        .map(|i| {
            halton_point(seed, i, dims)
                .into_iter()
                .enumerate()
                .map(|(d, u)| lo[d] + u * (hi[d] - lo[d]))
                .collect()
        })
        .collect()
}

/// Box samples filtered by a membership predicate. Scans the sequence in
/// order, so a larger `count` yields a superset. `None` when the predicate
/// accepts nothing within the attempt budget.
pub fn membership_points(
    seed: u64,
    count: usize,
    lo: &[f64],
    hi: &[f64],
    member: impl Fn(&[f64]) -> bool,
) -> Option<Vec<Vec<f64>>> {
    let dims = lo.len();
    let budget = (count as u64).saturating_mul(2000).max(2000);
    let mut out = Vec::with_capacity(count);
    for i in 0..budget {
        let p: Vec<f64> = halton_point(seed, i, dims)
            .into_iter()
            .enumerate()
            .map(|(d, u)| lo[d] + u * (hi[d] - lo[d]))
            .collect();
        if member(&p) {
            out.push(p);
            if out.len() == count {
                return Some(out);
            }
        }
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}
