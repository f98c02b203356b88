//! Numerical toolkit for almost complex geometry in coordinate charts.
//!
//! The crate computes certified *upper* bounds: every distance or metric
//! value it reports is witnessed by concrete pseudoholomorphic disk data
//! that can be re-validated after the fact. The main pieces are
//!
//! - [`hyperbolic`]: Poincare geometry of the unit disk (the comparison
//!   model every chain length is measured in),
//! - [`manifold`]: almost complex structures on chart domains, structure
//!   and taming diagnostics,
//! - [`nijenhuis`]: finite-difference Nijenhuis tensor and the sampled
//!   general-position test,
//! - [`solver`]: a grid-based Picard solver for pseudoholomorphic disks
//!   through a point with prescribed center derivative,
//! - [`chain`], [`estimator`]: disk chains, the waypoint distance
//!   estimator and the infinitesimal metric,
//! - [`harness`]: monotonicity checks under pseudoholomorphic maps,
//!   products, and trivial bundles,
//! - [`brody`]: derivative-profile reparametrization and the rescaling
//!   probe for nonhyperbolicity evidence,
//! - [`octonion`], [`s6`], [`gallery`]: the structure zoo, including the
//!   cross-product structure on the six-sphere in a stereographic chart.
//!
//! Everything here is deterministic: identical inputs produce identical
//! outputs, bit for bit. Scalar math is routed through `libm` so results
//! do not depend on whether `std` is linked.
//!
//! The crate is `no_std`-compatible (it requires `alloc`). File formats
//! and the command-line front end live in the companion `acx` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod fmath;
pub mod linalg;
pub mod sampling;
pub mod fft;
pub mod hyperbolic;
pub mod manifold;
pub mod nijenhuis;
pub mod solver;
pub mod chain;
pub mod estimator;
pub mod harness;
pub mod brody;
pub mod octonion;
pub mod s6;
pub mod gallery;

pub use error::{Error, Result};
pub use num_complex::Complex64;
