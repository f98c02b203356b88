//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong in the library, in one enum.
///
/// Numerical failures carry enough data to act on: a convergence failure
/// reports the best residual reached, a domain escape reports the largest
/// disk radius that still fits.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A sampling pass found no points satisfying the membership predicate.
    EmptyDomain,
    /// A finite-difference stencil would leave the domain.
    BoundaryMargin { step: f64 },
    /// The manifold carries no taming form.
    MissingTamingForm,
    /// A product/bundle check was handed a structure that does not split.
    NonSplitStructure { defect: f64 },
    /// Bad argument (zero vector, odd dimension, malformed matrix, ...).
    InvalidArgument(String),
    /// A point lies outside the chart domain or the unit disk.
    OutsideDomain,
    /// A matrix inversion or factorization hit a (near-)singular pivot.
    Singular(&'static str),
    /// The disk solver did not reach the residual tolerance.
    Convergence {
        residual: f64,
        radius: f64,
        iterations: usize,
    },
    /// The solved disk leaves the chart domain. `largest_valid_radius` is
    /// the biggest concentric subdisk whose samples all stay inside.
    DomainEscape { largest_valid_radius: f64 },
    /// The waypoint graph has no path between the endpoints.
    Unreachable {
        attempted_edges: usize,
        connected_edges: usize,
    },
    /// A structure perturbation left the retraction's convergence region.
    PerturbationTooLarge,
    /// A bisection loop stopped making progress before meeting its target.
    BisectionStagnated { lo: f64, hi: f64 },
    /// A map failed its pseudoholomorphy residual check.
    InvalidMap { defect: f64, tol: f64 },
    /// A constructed result failed its own contract verification.
    Postcondition {
        what: &'static str,
        value: f64,
        allowed: f64,
    },
    /// A rescaling probe generator stopped producing growing derivatives;
    /// carries the Schwarz-type constant fitted to the disks seen so far.
    BoundedDerivatives { schwarz_fit: f64 },
    /// Malformed configuration or input file contents.
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyDomain => write!(f, "no sample points satisfy the domain membership predicate"),
            Error::BoundaryMargin { step } => {
                write!(f, "finite-difference stencil with step {step} leaves the domain")
            }
            Error::MissingTamingForm => write!(f, "manifold carries no taming form"),
            Error::NonSplitStructure { defect } => {
                write!(f, "structure does not split along the factors (defect {defect:.3e})")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::OutsideDomain => write!(f, "point lies outside the domain"),
            Error::Singular(what) => write!(f, "singular matrix in {what}"),
            Error::Convergence {
                residual,
                radius,
                iterations,
            } => write!(
                f,
                "disk solver stalled at residual {residual:.3e} (radius {radius}, {iterations} iterations)"
            ),
            Error::DomainEscape {
                largest_valid_radius,
            } => write!(
                f,
                "disk image escapes the domain; largest contained radius ~ {largest_valid_radius}"
            ),
            Error::Unreachable {
                attempted_edges,
                connected_edges,
            } => write!(
                f,
                "endpoints not connected ({connected_edges} of {attempted_edges} edges shot successfully)"
            ),
            Error::PerturbationTooLarge => {
                write!(f, "perturbation too large for the square-root retraction")
            }
            Error::BisectionStagnated { lo, hi } => {
                write!(f, "bisection stagnated on [{lo}, {hi}]")
            }
            Error::InvalidMap { defect, tol } => write!(
                f,
                "map fails the pseudoholomorphy check (defect {defect:.3e} > tol {tol:.3e})"
            ),
            Error::Postcondition {
                what,
                value,
                allowed,
            } => write!(
                f,
                "{what} violates its contract ({value:.6e} vs allowed {allowed:.6e})"
            ),
            Error::BoundedDerivatives { schwarz_fit } => write!(
                f,
                "generator derivatives stopped growing (fitted derivative bound {schwarz_fit:.3e})"
            ),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
