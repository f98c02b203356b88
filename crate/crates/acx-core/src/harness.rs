//! Functoriality harnesses: behavior of the distance estimator under
//! pseudoholomorphic maps, products, and trivial bundle projections.
//!
//! Every harness works the same way: produce a witness chain on one
//! side, push it through the map in question, and report whether the
//! pushed chain is still valid together with its length. Since marked
//! parameters are untouched by a pushforward, the pushed chain's length
//! equals the source length exactly; the substantive content of each
//! report is the validity of the transported witness.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{chain_length, validate_chain, ChainLink, KobayashiChain};
use crate::error::{Error, Result};
use crate::estimator::{estimate_distance, EstimatorConfig};
use crate::fmath;
use crate::linalg::Mat;
use crate::manifold::{product_manifold, ChartManifold, Point};

/// A map between chart manifolds bundled with its differential.
///
/// Harnesses verify pseudoholomorphy by sampling before trusting the
/// map; see [`PseudoholomorphicMap::check`].
#[derive(Clone)]
pub struct PseudoholomorphicMap {
    map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    differential: Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>,
}

impl PseudoholomorphicMap {
    pub fn new(
        map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
        differential: Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>,
    ) -> Self {
        PseudoholomorphicMap { map, differential }
    }

    /// Coordinate identity, the inclusion map of a subdomain chart.
    pub fn identity() -> Self {
        PseudoholomorphicMap {
            map: Arc::new(|p: &[f64]| p.to_vec()),
            differential: Arc::new(|_p: &[f64], u: &[f64]| u.to_vec()),
        }
    }

    /// x -> a x + b; the matrix may be rectangular.
    pub fn affine(a: Mat, b: Vec<f64>) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::InvalidArgument(String::from(
                "affine map offset length must match the matrix rows",
            )));
        }
        let a2 = a.clone();
        let b2 = b.clone();
        Ok(PseudoholomorphicMap {
            map: Arc::new(move |p: &[f64]| {
                let mut out = a2.mul_vec(p);
                for (o, c) in out.iter_mut().zip(&b2) {
                    *o += c;
                }
                out
            }),
            differential: Arc::new(move |_p: &[f64], u: &[f64]| a.mul_vec(u)),
        })
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (self.map)(p)
    }

    pub fn push(&self, p: &[f64], u: &[f64]) -> Vec<f64> {
        (self.differential)(p, u)
    }

    /// Samples the source domain and measures the worst defect of
    /// dh(J u) = J'(h p) dh(u) over coordinate directions, normalized by
    /// the pushed vector's size. Image points must land in the target
    /// domain. Exceeding `tol` is an error; the defect is returned
    /// otherwise.
    pub fn check(
        &self,
        src: &ChartManifold,
        tgt: &ChartManifold,
        samples: usize,
        tol: f64,
    ) -> Result<f64> {
        let pts = src.sample(17, samples.max(4))?;
        let mut worst = 0.0f64;
        for p in &pts {
            let q = self.apply(p.coords());
            if q.len() != tgt.dim() {
                return Err(Error::InvalidArgument(String::from(
                    "map image dimension differs from the target chart",
                )));
            }
            if !tgt.domain.contains(&q) {
                return Err(Error::InvalidMap {
                    defect: f64::INFINITY,
                    tol,
                });
            }
            let jsrc = src.structure.eval(p.coords());
            let jtgt = tgt.structure.eval(&q);
            for k in 0..src.dim() {
                let mut u = vec![0.0; src.dim()];
                u[k] = 1.0;
                let pushed = self.push(p.coords(), &u);
                let lhs = self.push(p.coords(), &jsrc.mul_vec(&u));
                let rhs = jtgt.mul_vec(&pushed);
                let mut num = 0.0;
                let mut den = 0.0;
                for c in 0..tgt.dim() {
                    let d = lhs[c] - rhs[c];
                    num += d * d;
                    den += pushed[c] * pushed[c];
                }
                let defect = fmath::sqrt(num) / (fmath::sqrt(den) + 1.0);
                if defect > worst {
                    worst = defect;
                }
            }
        }
        if worst > tol {
            return Err(Error::InvalidMap { defect: worst, tol });
        }
        Ok(worst)
    }
}

/// Pushes every link's disk values through `g`, keeping the marked
/// parameters, so the result has the same length as the input.
fn map_chain(
    chain: &KobayashiChain,
    tolerance: f64,
    g: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<KobayashiChain> {
    let mut links = Vec::with_capacity(chain.links.len());
    for link in &chain.links {
        links.push(ChainLink {
            disk: link.disk.map_values(&g)?,
            z: link.z,
            w: link.w,
        });
    }
    Ok(KobayashiChain::new(links, tolerance))
}

/// The pushforward of a witness chain under a pseudoholomorphic map.
pub fn transfer_chain(
    h: &PseudoholomorphicMap,
    chain: &KobayashiChain,
) -> Result<KobayashiChain> {
    map_chain(chain, chain.tolerance, |p| h.apply(p))
}

/// One distance-nonincreasing verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRecord {
    /// Bound between the pair in the source chart.
    pub source_bound: f64,
    /// Independent bound between the image points in the target chart;
    /// infinite when the target estimator found no chain.
    pub target_bound: f64,
    /// Length of the pushed source witness; equals source_bound.
    pub transferred_bound: f64,
    /// Whether the pushed witness is a valid chain between the images.
    pub transferred_valid: bool,
}

/// Checks that pushing source witness chains through `h` yields valid
/// target chains of the same length, pair by pair.
pub fn check_nonincreasing(
    src: &ChartManifold,
    tgt: &ChartManifold,
    h: &PseudoholomorphicMap,
    pairs: &[(Point, Point)],
    cfg: &EstimatorConfig,
) -> Result<Vec<TransferRecord>> {
    h.check(src, tgt, 64, cfg.solver.tol)?;
    let mut out = Vec::with_capacity(pairs.len());
    for (p, q) in pairs {
        let est = estimate_distance(src, p, q, cfg)?;
        let transferred = transfer_chain(h, &est.chain)?;
        let hp = h.apply(p.coords());
        let hq = h.apply(q.coords());
        let target_bound = match (Point::new(hp.clone()), Point::new(hq.clone())) {
            (Ok(ip), Ok(iq)) => match estimate_distance(tgt, &ip, &iq, cfg) {
                Ok(e) => e.upper_bound,
                Err(_) => f64::INFINITY,
            },
            _ => f64::INFINITY,
        };
        out.push(TransferRecord {
            source_bound: est.upper_bound,
            target_bound,
            transferred_bound: chain_length(&transferred),
            transferred_valid: validate_chain(&transferred, &hp, &hq),
        });
    }
    Ok(out)
}

/// Largest absolute entry of the off-diagonal blocks of J over a
/// domain sample, with the first factor occupying `first_dim`
/// coordinates. Exceeding `tol` means the structure does not split.
pub fn split_check(
    m: &ChartManifold,
    first_dim: usize,
    samples: usize,
    tol: f64,
) -> Result<f64> {
    if first_dim == 0 || first_dim % 2 != 0 || first_dim >= m.dim() {
        return Err(Error::InvalidArgument(String::from(
            "factor dimension must be even, positive, and below the total",
        )));
    }
    let pts = m.sample(13, samples.max(4))?;
    let mut worst = 0.0f64;
    for p in &pts {
        let j = m.structure.eval(p.coords());
        for r in 0..m.dim() {
            for c in 0..m.dim() {
                if (r < first_dim) != (c < first_dim) {
                    let v = fmath::abs(j[(r, c)]);
                    if v > worst {
                        worst = v;
                    }
                }
            }
        }
    }
    if worst > tol {
        return Err(Error::NonSplitStructure { defect: worst });
    }
    Ok(worst)
}

/// One product-inequality verdict for a pair of product points.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductRecord {
    pub factor_bounds: (f64, f64),
    /// Length of the concatenated lifted chain; equals the sum of the
    /// factor bounds.
    pub product_bound: f64,
    /// Whether the concatenated chain is valid in the product chart.
    pub product_valid: bool,
    /// Whether the factor projections of the product witness are valid
    /// in their factors.
    pub projections_valid: (bool, bool),
}

/// Builds the product chart of two manifolds and checks both halves of
/// the product inequality on each pair of product points: the
/// concatenation of lifted factor witnesses is a valid product chain
/// (so product bound <= sum of factor bounds), and projecting that
/// product witness back to the factors yields valid factor chains.
///
/// Concatenation meets junction tolerances from both factors at the
/// corner waypoint, so product chains carry tolerance sqrt(2) times the
/// configured one.
pub fn product_bounds(
    m1: &ChartManifold,
    m2: &ChartManifold,
    pairs: &[(Point, Point)],
    cfg: &EstimatorConfig,
) -> Result<Vec<ProductRecord>> {
    let product = product_manifold(m1, m2)?;
    split_check(&product, m1.dim(), 32, 1e-9)?;
    let n1 = m1.dim();
    let prod_tol = cfg.junction_tol * fmath::sqrt(2.0);

    let mut out = Vec::with_capacity(pairs.len());
    for (p, q) in pairs {
        if p.dim() != product.dim() || q.dim() != product.dim() {
            return Err(Error::InvalidArgument(String::from(
                "product pair dimension mismatch",
            )));
        }
        let (p1, p2) = (
            Point::new(p.coords()[..n1].to_vec())?,
            Point::new(p.coords()[n1..].to_vec())?,
        );
        let (q1, q2) = (
            Point::new(q.coords()[..n1].to_vec())?,
            Point::new(q.coords()[n1..].to_vec())?,
        );
        let est1 = estimate_distance(m1, &p1, &q1, cfg)?;
        let est2 = estimate_distance(m2, &p2, &q2, cfg)?;

        // Move the first factor while the second sits at p2, then the
        // second factor with the first frozen at q1.
        let frozen2 = p2.coords().to_vec();
        let lifted1 = map_chain(&est1.chain, prod_tol, |u| {
            let mut v = u.to_vec();
            v.extend_from_slice(&frozen2);
            v
        })?;
        let frozen1 = q1.coords().to_vec();
        let lifted2 = map_chain(&est2.chain, prod_tol, |u| {
            let mut v = frozen1.clone();
            v.extend_from_slice(u);
            v
        })?;
        let mut links = lifted1.links;
        links.extend(lifted2.links);
        let product_chain = KobayashiChain::new(links, prod_tol);

        let product_valid = validate_chain(&product_chain, p.coords(), q.coords());
        let product_bound = chain_length(&product_chain);

        let proj1 = map_chain(&product_chain, prod_tol, |u| u[..n1].to_vec())?;
        let proj2 = map_chain(&product_chain, prod_tol, |u| u[n1..].to_vec())?;
        let projections_valid = (
            validate_chain(&proj1, p1.coords(), q1.coords()),
            validate_chain(&proj2, p2.coords(), q2.coords()),
        );

        out.push(ProductRecord {
            factor_bounds: (est1.upper_bound, est2.upper_bound),
            product_bound,
            product_valid,
            projections_valid,
        });
    }
    Ok(out)
}

/// One bundle-projection verdict for a pair of total-space points.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleRecord {
    /// Bound between the total-space points.
    pub e_bound: f64,
    /// Bound between their base projections.
    pub b_bound: f64,
    /// Whether the projected total-space witness is valid in the base.
    pub projected_valid: bool,
    /// Length of the projected witness; equals e_bound.
    pub projected_bound: f64,
    /// Whether the fiber-constant lift of the base witness is valid in
    /// the total space.
    pub lifted_valid: bool,
    /// Length of the lifted witness; equals b_bound. Bounds the distance
    /// from the first point to the second point's fiber.
    pub lifted_bound: f64,
    /// Endpoint the lifted chain arrives at: the base target with the
    /// start fiber coordinate.
    pub lifted_endpoint: Point,
}

/// For a trivial bundle chart E = B x F with split structure: projected
/// total-space witnesses are valid base chains, and fiber-constant lifts
/// of base witnesses are valid total-space chains into the target fiber.
/// `proj` must be the base projection on the first `dim B` coordinates,
/// residual-checked like any harness map.
pub fn bundle_projection_check(
    e: &ChartManifold,
    b: &ChartManifold,
    proj: &PseudoholomorphicMap,
    pairs: &[(Point, Point)],
    cfg: &EstimatorConfig,
) -> Result<Vec<BundleRecord>> {
    if e.dim() <= b.dim() {
        return Err(Error::InvalidArgument(String::from(
            "the total space must be larger than the base",
        )));
    }
    split_check(e, b.dim(), 32, 1e-9)?;
    proj.check(e, b, 64, cfg.solver.tol)?;
    let nb = b.dim();

    let mut out = Vec::with_capacity(pairs.len());
    for (pe, qe) in pairs {
        if pe.dim() != e.dim() || qe.dim() != e.dim() {
            return Err(Error::InvalidArgument(String::from(
                "bundle pair dimension mismatch",
            )));
        }
        let pb = Point::new(proj.apply(pe.coords()))?;
        let qb = Point::new(proj.apply(qe.coords()))?;

        let est_e = estimate_distance(e, pe, qe, cfg)?;
        let projected = transfer_chain(proj, &est_e.chain)?;
        let projected_valid = validate_chain(&projected, pb.coords(), qb.coords());
        let projected_bound = chain_length(&projected);

        let est_b = estimate_distance(b, &pb, &qb, cfg)?;
        let fiber = pe.coords()[nb..].to_vec();
        let lifted = map_chain(&est_b.chain, cfg.junction_tol, |u| {
            let mut v = u.to_vec();
            v.extend_from_slice(&fiber);
            v
        })?;
        let mut arrival = qb.coords().to_vec();
        arrival.extend_from_slice(&fiber);
        let lifted_valid = validate_chain(&lifted, pe.coords(), &arrival);
        let lifted_bound = chain_length(&lifted);

        out.push(BundleRecord {
            e_bound: est_e.upper_bound,
            b_bound: est_b.upper_bound,
            projected_valid,
            projected_bound,
            lifted_valid,
            lifted_bound,
            lifted_endpoint: Point::new(arrival)?,
        });
    }
    Ok(out)
}
