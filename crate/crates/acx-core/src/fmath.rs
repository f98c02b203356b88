//! Scalar math routed through `libm`.
//!
//! Keeping every transcendental call on the `libm` code path makes results
//! bit-identical between `std` and `no_std` builds of this crate.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn atanh(x: f64) -> f64 {
    libm::atanh(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub use core::f64::consts::PI;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atanh_matches_log_form() {
        for &x in &[0.0, 0.1, 0.5, 0.75, 0.99] {
            let direct = atanh(x);
            let log_form = 0.5 * ln((1.0 + x) / (1.0 - x));
            assert!((direct - log_form).abs() < 1e-14);
        }
    }
}
