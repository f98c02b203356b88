//! Chains of pseudoholomorphic disks and their hyperbolic length.
//!
//! A chain joining p to q is a list of disks f_k with marked parameters
//! z_k, w_k in the unit disk: f_1(z_1) = p, f_m(w_m) = q, and each
//! f_k(w_k) meets f_{k+1}(z_{k+1}). Its length is the sum of Poincare
//! distances d(z_k, w_k); any valid chain certifies an upper bound on
//! the induced pseudodistance between its endpoints.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::Result;
use crate::hyperbolic::{poincare_distance, DiskPoint};
use crate::linalg;
use crate::solver::DiskMap;

/// One disk of a chain with its marked entry and exit parameters.
///
/// The marked points live in the unit disk; a link whose DiskMap has
/// radius r is read through the reparametrization z -> f(r z).
#[derive(Debug, Clone)]
pub struct ChainLink {
    pub disk: DiskMap,
    pub z: DiskPoint,
    pub w: DiskPoint,
}

impl ChainLink {
    /// Chart value of the link at a unit-disk parameter.
    pub fn value(&self, at: &DiskPoint) -> Result<Vec<f64>> {
        let r = self.disk.radius();
        let zc: Complex64 = at.z();
        self.disk.eval(r * zc.re, r * zc.im)
    }

    pub fn entry_value(&self) -> Result<Vec<f64>> {
        self.value(&self.z)
    }

    pub fn exit_value(&self) -> Result<Vec<f64>> {
        self.value(&self.w)
    }

    /// Hyperbolic travel of this link.
    pub fn length(&self) -> f64 {
        poincare_distance(&self.z, &self.w)
    }

    /// The same disk traversed the other way.
    pub fn reversed(&self) -> ChainLink {
        ChainLink {
            disk: self.disk.clone(),
            z: self.w.clone(),
            w: self.z.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KobayashiChain {
    pub links: Vec<ChainLink>,
    /// Junction and endpoint matching tolerance in chart coordinates.
    pub tolerance: f64,
}

impl KobayashiChain {
    pub fn new(links: Vec<ChainLink>, tolerance: f64) -> Self {
        KobayashiChain { links, tolerance }
    }

    pub fn empty(tolerance: f64) -> Self {
        KobayashiChain {
            links: Vec::new(),
            tolerance,
        }
    }

    /// Chain traversed from q back to p.
    pub fn reversed(&self) -> KobayashiChain {
        KobayashiChain {
            links: self.links.iter().rev().map(ChainLink::reversed).collect(),
            tolerance: self.tolerance,
        }
    }

    /// Largest endpoint or junction mismatch against the given endpoints,
    /// in Euclidean chart distance. Infinite when a marked point cannot
    /// be evaluated. An empty chain is measured as the p-to-q gap itself.
    pub fn max_defect(&self, p: &[f64], q: &[f64]) -> f64 {
        if self.links.is_empty() {
            return linalg::norm2(&linalg::sub(p, q));
        }
        fn gap_to(got: Result<Vec<f64>>, want: &[f64]) -> f64 {
            match got {
                Ok(v) => linalg::norm2(&linalg::sub(&v, want)),
                Err(_) => f64::INFINITY,
            }
        }
        let mut worst = gap_to(self.links[0].entry_value(), p);
        for k in 0..self.links.len() - 1 {
            let gap = match self.links[k].exit_value() {
                Ok(a) => gap_to(self.links[k + 1].entry_value(), &a),
                Err(_) => f64::INFINITY,
            };
            if gap > worst {
                worst = gap;
            }
        }
        let tail = gap_to(self.links[self.links.len() - 1].exit_value(), q);
        if tail > worst {
            worst = tail;
        }
        worst
    }
}

/// Sum of the links' hyperbolic travels.
pub fn chain_length(c: &KobayashiChain) -> f64 {
    c.links.iter().map(ChainLink::length).sum()
}

/// True iff the chain joins p to q with every junction gap within the
/// chain's tolerance.
pub fn validate_chain(c: &KobayashiChain, p: &[f64], q: &[f64]) -> bool {
    c.max_defect(p, q) <= c.tolerance
}
