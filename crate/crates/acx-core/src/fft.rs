//! Radix-2 FFT and 2D cyclic convolution.
//!
//! The disk solver applies an area-integral operator on a regular grid;
//! with a translation-invariant kernel that is a discrete convolution, so
//! each application costs two transforms instead of an O(n^2) double sum.
//! Direct summation is kept in the test suite as the reference.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fmath;

/// Precomputed radix-2 transform of a fixed power-of-two size.
pub struct Fft {
    n: usize,
    // e^(-2 pi i k / n) for k < n/2
    twiddles: Vec<Complex64>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "fft size must be a power of two");
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * fmath::PI * k as f64 / n as f64;
                Complex64::new(fmath::cos(angle), fmath::sin(angle))
            })
            .collect();
        Fft { n, twiddles }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.n as f64;
        for x in buf.iter_mut() {
            *x *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], invert: bool) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        // bit-reversal permutation
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let mut w = self.twiddles[k * step];
                    if invert {
                        w = w.conj();
                    }
                    let u = buf[start + k];
                    let v = buf[start + k + len / 2] * w;
                    buf[start + k] = u + v;
                    buf[start + k + len / 2] = u - v;
                }
            }
            len <<= 1;
        }
    }
}

/// Cyclic 2D convolution of side `s` (power of two) against a fixed kernel.
pub struct Conv2 {
    s: usize,
    fft: Fft,
    kernel_hat: Vec<Complex64>,
}

impl Conv2 {
    /// `kernel` has length `s*s`, laid out row-major.
    pub fn new(s: usize, mut kernel: Vec<Complex64>) -> Self {
        let fft = Fft::new(s);
        fft2(&fft, &mut kernel, false);
        Conv2 {
            s,
            fft,
            kernel_hat: kernel,
        }
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.s
    }

    /// In-place cyclic convolution: `field <- kernel (*) field`.
    pub fn apply(&self, field: &mut [Complex64]) {
        debug_assert_eq!(field.len(), self.s * self.s);
        fft2(&self.fft, field, false);
        for (x, k) in field.iter_mut().zip(self.kernel_hat.iter()) {
            *x *= *k;
        }
        fft2(&self.fft, field, true);
    }
}

fn fft2(fft: &Fft, data: &mut [Complex64], invert: bool) {
    let s = fft.len();
    debug_assert_eq!(data.len(), s * s);
    for row in data.chunks_exact_mut(s) {
        if invert {
            fft.inverse(row);
        } else {
            fft.forward(row);
        }
    }
    let mut col = vec![Complex64::new(0.0, 0.0); s];
    for c in 0..s {
        for r in 0..s {
            col[r] = data[r * s + c];
        }
        if invert {
            fft.inverse(&mut col);
        } else {
            fft.forward(&mut col);
        }
        for r in 0..s {
            data[r * s + c] = col[r];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(input: &[Complex64]) -> Vec<Complex64> {
        let n = input.len();
        (0..n)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, x) in input.iter().enumerate() {
                    let angle = -2.0 * fmath::PI * (k * j) as f64 / n as f64;
                    acc += x * Complex64::new(fmath::cos(angle), fmath::sin(angle));
                }
                acc
            })
            .collect()
    }

    #[test]
    fn forward_matches_naive_dft() {
        let input: Vec<Complex64> = (0..16)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()))
            .collect();
        let mut buf = input.clone();
        Fft::new(16).forward(&mut buf);
        let want = naive_dft(&input);
        for (a, b) in buf.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let input: Vec<Complex64> = (0..32)
            .map(|i| Complex64::new(i as f64, -(i as f64) * 0.5))
            .collect();
        let mut buf = input.clone();
        let fft = Fft::new(32);
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(input.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn cyclic_convolution_matches_direct_sum() {
        let s = 8;
        let kernel: Vec<Complex64> = (0..s * s)
            .map(|i| Complex64::new((i as f64 * 0.11).cos(), (i as f64 * 0.07).sin()))
            .collect();
        let field: Vec<Complex64> = (0..s * s)
            .map(|i| Complex64::new((i as f64 * 0.29).sin(), 0.3))
            .collect();

        let mut direct = vec![Complex64::new(0.0, 0.0); s * s];
        for oy in 0..s {
            for ox in 0..s {
                let mut acc = Complex64::new(0.0, 0.0);
                for ky in 0..s {
                    for kx in 0..s {
                        let dy = (oy + s - ky) % s;
                        let dx = (ox + s - kx) % s;
                        acc += kernel[dy * s + dx] * field[ky * s + kx];
                    }
                }
                direct[oy * s + ox] = acc;
            }
        }

        let conv = Conv2::new(s, kernel);
        let mut fast = field.clone();
        conv.apply(&mut fast);
        for (a, b) in fast.iter().zip(direct.iter()) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }
}
