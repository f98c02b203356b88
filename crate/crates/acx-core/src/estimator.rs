//! Upper-bound estimators for the disk-chain pseudodistance and the
//! infinitesimal pseudometric.
//!
//! The distance estimator samples waypoints, shoots pseudoholomorphic
//! disks between waypoint pairs, and runs a shortest-path search over
//! the resulting weighted graph. Every output carries a witness chain;
//! the reported bound is that chain's length, nothing more optimistic.
//!
//! All randomness is a fixed-seed low-discrepancy sequence, so equal
//! inputs give equal estimates, and a larger waypoint budget extends the
//! sample rather than reshuffling it.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::chain::{chain_length, ChainLink, KobayashiChain};
use crate::error::{Error, Result};
use crate::fmath;
use crate::hyperbolic::{poincare_distance, DiskPoint};
use crate::linalg;
use crate::manifold::{ChartManifold, Point};
use crate::solver::{
    max_disk_radius_with, solve_local_disk, DiskMap, MaxRadiusReport, RadiusSearch, SolverConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Waypoints sampled from the domain, in addition to the endpoints.
    pub waypoints: usize,
    /// Offset into the low-discrepancy sequence.
    pub seed: u64,
    /// Junction and endpoint tolerance of produced chains, in chart
    /// coordinates.
    pub junction_tol: f64,
    pub solver: SolverConfig,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            waypoints: 8,
            seed: 7,
            junction_tol: 1e-6,
            solver: SolverConfig {
                grid_resolution: 12,
                tol: 1e-4,
                max_iterations: 40,
                shrink_factor: 0.6,
                max_shrinks: 0,
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub solves: usize,
    pub edges_attempted: usize,
    pub edges_connected: usize,
}

#[derive(Debug, Clone)]
pub struct DistanceEstimate {
    /// Certified upper bound; equals chain_length(&chain) exactly.
    pub upper_bound: f64,
    pub chain: KobayashiChain,
    pub waypoints: Vec<Point>,
    pub stats: SolveStats,
}

/// One certified connection between two pool points: a disk whose value
/// at parameter (za, 0) is pool point `from` and at (zb, 0) the partner,
/// both within the junction tolerance.
struct EdgeCert {
    disk: DiskMap,
    za: f64,
    zb: f64,
    weight: f64,
    from: usize,
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

fn span_weight(za: f64, zb: f64) -> f64 {
    let a = DiskPoint::from_xy(za, 0.0).expect("marked parameter inside the disk");
    let b = DiskPoint::from_xy(zb, 0.0).expect("marked parameter inside the disk");
    poincare_distance(&a, &b)
}

/// Waypoint graph with certified edges; build once, query many pairs.
pub struct WaypointGraph<'m> {
    m: &'m ChartManifold,
    cfg: EstimatorConfig,
    points: Vec<Point>,
    /// Triangular pair storage: index of (i, j) with i < j.
    certs: Vec<Option<EdgeCert>>,
    stats: SolveStats,
}

#[inline]
fn pair_index(i: usize, j: usize, count: usize) -> usize {
    debug_assert!(i < j && j < count);
    i * count - i * (i + 1) / 2 + (j - i - 1)
}

impl<'m> WaypointGraph<'m> {
    /// Shoots every waypoint pair once, oriented from the
    /// lexicographically smaller point, so the graph does not depend on
    /// the order points were supplied in.
    pub fn build(m: &'m ChartManifold, points: Vec<Point>, cfg: EstimatorConfig) -> Result<Self> {
        cfg.solver.validate()?;
        if points.is_empty() {
            return Err(Error::InvalidArgument(String::from(
                "waypoint graph needs at least one point",
            )));
        }
        for p in &points {
            if p.dim() != m.dim() {
                return Err(Error::InvalidArgument(String::from(
                    "waypoint dimension mismatch",
                )));
            }
            if !m.domain.contains(p.coords()) {
                return Err(Error::OutsideDomain);
            }
        }
        let count = points.len();
        let mut stats = SolveStats::default();
        let mut certs = Vec::with_capacity(count * (count - 1) / 2);
        for i in 0..count {
            for j in i + 1..count {
                stats.edges_attempted += 1;
                let (from, to) = if lex_less(points[j].coords(), points[i].coords()) {
                    (j, i)
                } else {
                    (i, j)
                };
                let cert = shoot_edge(
                    m,
                    points[from].coords(),
                    points[to].coords(),
                    from,
                    &cfg,
                    &mut stats.solves,
                );
                if cert.is_some() {
                    stats.edges_connected += 1;
                }
                certs.push(cert);
            }
        }
        Ok(WaypointGraph {
            m,
            cfg,
            points,
            certs,
            stats,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn stats(&self) -> &SolveStats {
        &self.stats
    }

    pub fn manifold(&self) -> &ChartManifold {
        self.m
    }

    fn cert(&self, i: usize, j: usize) -> &Option<EdgeCert> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        &self.certs[pair_index(a, b, self.points.len())]
    }

    /// Shortest certified chain between two pool indices.
    pub fn estimate(&self, source: usize, target: usize) -> Result<DistanceEstimate> {
        let count = self.points.len();
        if source >= count || target >= count {
            return Err(Error::InvalidArgument(String::from(
                "pool index out of range",
            )));
        }
        if source == target {
            return Ok(DistanceEstimate {
                upper_bound: 0.0,
                chain: KobayashiChain::empty(self.cfg.junction_tol),
                waypoints: self.points.clone(),
                stats: self.stats.clone(),
            });
        }

        // Dijkstra, dense form; deterministic tie-breaking by index.
        let mut dist = vec![f64::INFINITY; count];
        let mut prev = vec![usize::MAX; count];
        let mut done = vec![false; count];
        dist[source] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for k in 0..count {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    u = k;
                }
            }
            if u == usize::MAX || u == target {
                break;
            }
            done[u] = true;
            for w in 0..count {
                if w == u || done[w] {
                    continue;
                }
                if let Some(cert) = self.cert(u, w) {
                    let cand = dist[u] + cert.weight;
                    if cand < dist[w] {
                        dist[w] = cand;
                        prev[w] = u;
                    }
                }
            }
        }
        if !dist[target].is_finite() {
            return Err(Error::Unreachable {
                attempted_edges: self.stats.edges_attempted,
                connected_edges: self.stats.edges_connected,
            });
        }

        let mut path = vec![target];
        let mut at = target;
        while at != source {
            at = prev[at];
            path.push(at);
        }
        path.reverse();

        let mut links = Vec::with_capacity(path.len() - 1);
        for hop in path.windows(2) {
            let (u, w) = (hop[0], hop[1]);
            let cert = self.cert(u, w).as_ref().expect("path uses certified edges");
            let pa = DiskPoint::from_xy(cert.za, 0.0)?;
            let pb = DiskPoint::from_xy(cert.zb, 0.0)?;
            let (z, wpt) = if cert.from == u { (pa, pb) } else { (pb, pa) };
            links.push(ChainLink {
                disk: cert.disk.clone(),
                z,
                w: wpt,
            });
        }
        let chain = KobayashiChain::new(links, self.cfg.junction_tol);
        Ok(DistanceEstimate {
            upper_bound: chain_length(&chain),
            chain,
            waypoints: self.points.clone(),
            stats: self.stats.clone(),
        })
    }
}

/// Certifies a connection from a to b, trying two disk geometries and
/// keeping the hyperbolically shorter one:
///
/// - a disk centered at a whose value at (t, 0) is b: cheap spans when a
///   has room around it;
/// - a disk centered near the segment midpoint hitting a and b at
///   (-t, 0) and (t, 0): reaches pairs whose endpoints sit close to the
///   domain wall.
///
/// Both shrink t as far as the domain and the solver allow, since the
/// edge weight is the hyperbolic span between the marked parameters.
fn shoot_edge(
    m: &ChartManifold,
    a: &[f64],
    b: &[f64],
    from: usize,
    cfg: &EstimatorConfig,
    solves: &mut usize,
) -> Option<EdgeCert> {
    let delta = linalg::sub(b, a);
    if linalg::norm2(&delta) == 0.0 {
        // Duplicate pool points: a stationary zero-length connection.
        let p = Point::new(a.to_vec()).ok()?;
        let disk = DiskMap::constant(&p, 1.0, cfg.solver.grid_resolution).ok()?;
        return Some(EdgeCert {
            disk,
            za: 0.0,
            zb: 0.0,
            weight: 0.0,
            from,
        });
    }

    let one = connect_one_sided(m, a, b, &delta, from, cfg, solves);
    let two = connect_midpoint(m, a, b, &delta, from, cfg, solves);
    match (one, two) {
        (Some(x), Some(y)) => Some(if x.weight <= y.weight { x } else { y }),
        (Some(x), None) => Some(x),
        (None, Some(y)) => Some(y),
        (None, None) => None,
    }
}

/// Parameter radius for edge shoots. The same curve solved on a larger
/// parameter disk has a proportionally smaller derivative, which lowers
/// the solver's attainable residual by the same factor; a power of two
/// keeps normalized marked parameters and physical node coordinates in
/// exact correspondence. Weights never see this: marked parameters are
/// stored normalized to the unit disk.
const SHOOT_RADIUS: f64 = 4.0;

/// Disk centered at a whose value at normalized parameter (s, 0) is b.
fn connect_one_sided(
    m: &ChartManifold,
    a: &[f64],
    b: &[f64],
    delta: &[f64],
    from: usize,
    cfg: &EstimatorConfig,
    solves: &mut usize,
) -> Option<EdgeCert> {
    let pa = Point::new(a.to_vec()).ok()?;
    let mut solver = cfg.solver.clone();
    solver.max_shrinks = 0;
    let rr = SHOOT_RADIUS;
    let solve_at = |s: f64, solves: &mut usize| -> Option<DiskMap> {
        *solves += 1;
        let v = linalg::scale(delta, 1.0 / (s * rr));
        solve_local_disk(m, &pa, &v, rr, &solver).ok()
    };

    let probe = solve_at(0.5, solves);
    let affine = matches!(&probe, Some(d) if d.iterations() == 0);
    if affine {
        // Affine disks interpolate exactly, so s may move continuously.
        let feasible = |s: f64, solves: &mut usize| -> Option<DiskMap> {
            match solve_at(s, solves) {
                Some(d) if d.iterations() == 0 => Some(d),
                _ => None,
            }
        };
        let lo_cap = 1e-8;
        let best = if let Some(d) = feasible(lo_cap, solves) {
            (lo_cap, d)
        } else {
            let mut hi = (0.5, probe.expect("affine probe succeeded"));
            let mut lo = lo_cap;
            while hi.0 - lo > 1e-3 * hi.0 {
                let mid = 0.5 * (lo + hi.0);
                match feasible(mid, solves) {
                    Some(d) => hi = (mid, d),
                    None => lo = mid,
                }
            }
            hi
        };
        let (s, disk) = best;
        let val = disk.eval(s * rr, 0.0).ok()?;
        if linalg::norm2(&linalg::sub(&val, b)) <= cfg.junction_tol {
            return Some(EdgeCert {
                disk,
                za: 0.0,
                zb: s,
                weight: span_weight(0.0, s),
                from,
            });
        }
        // Not actually flat along this edge; fall through to snapping.
    }

    // Node-snapped s with Newton correction of the velocity: the
    // junction value is read off a grid node bitwise.
    let n = cfg.solver.grid_resolution;
    let h = 1.0 / n as f64;
    let s_node = |mi: usize| mi as f64 * h;
    let feasible = |mi: usize, solves: &mut usize| -> bool {
        solve_at(s_node(mi), solves).is_some()
    };
    if !feasible(n - 1, solves) {
        return None;
    }
    let mstar = if feasible(1, solves) {
        1
    } else {
        let mut lo = 1;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if feasible(mid, solves) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    'candidates: for mi in mstar..=(mstar + 2).min(n - 1) {
        let s = s_node(mi);
        let x = s * rr;
        let mut v = linalg::scale(delta, 1.0 / x);
        for _ in 0..8 {
            *solves += 1;
            let disk = match solve_local_disk(m, &pa, &v, rr, &solver) {
                Ok(d) => d,
                Err(_) => continue 'candidates,
            };
            let miss = linalg::sub(disk.value_at(n + mi, n), b);
            if linalg::norm2(&miss) <= 0.5 * cfg.junction_tol {
                return Some(EdgeCert {
                    disk,
                    za: 0.0,
                    zb: s,
                    weight: span_weight(0.0, s),
                    from,
                });
            }
            // The nodal value moves as x times the velocity, to first
            // order.
            v = linalg::axpy(&v, -1.0 / x, &miss);
        }
    }
    None
}

/// Disk centered near the segment midpoint whose values at normalized
/// parameters (-s, 0) and (s, 0) are a and b; Newton adjusts center and
/// velocity together.
fn connect_midpoint(
    m: &ChartManifold,
    a: &[f64],
    b: &[f64],
    delta: &[f64],
    from: usize,
    cfg: &EstimatorConfig,
    solves: &mut usize,
) -> Option<EdgeCert> {
    let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    if !m.domain.contains(&mid) {
        return None;
    }
    let pmid = Point::new(mid).ok()?;
    let mut solver = cfg.solver.clone();
    solver.max_shrinks = 0;
    let rr = SHOOT_RADIUS;
    let solve_at = |s: f64, solves: &mut usize| -> Option<DiskMap> {
        *solves += 1;
        let v = linalg::scale(delta, 0.5 / (s * rr));
        solve_local_disk(m, &pmid, &v, rr, &solver).ok()
    };

    let probe = solve_at(0.5, solves);
    let affine = matches!(&probe, Some(d) if d.iterations() == 0);
    if affine {
        let feasible = |s: f64, solves: &mut usize| -> Option<DiskMap> {
            match solve_at(s, solves) {
                Some(d) if d.iterations() == 0 => Some(d),
                _ => None,
            }
        };
        let lo_cap = 1e-8;
        let best = if let Some(d) = feasible(lo_cap, solves) {
            (lo_cap, d)
        } else {
            let mut hi = (0.5, probe.expect("affine probe succeeded"));
            let mut lo = lo_cap;
            while hi.0 - lo > 1e-3 * hi.0 {
                let midt = 0.5 * (lo + hi.0);
                match feasible(midt, solves) {
                    Some(d) => hi = (midt, d),
                    None => lo = midt,
                }
            }
            hi
        };
        let (s, disk) = best;
        let va = disk.eval(-s * rr, 0.0).ok()?;
        let vb = disk.eval(s * rr, 0.0).ok()?;
        let miss_a = linalg::norm2(&linalg::sub(&va, a));
        let miss_b = linalg::norm2(&linalg::sub(&vb, b));
        if miss_a <= cfg.junction_tol && miss_b <= cfg.junction_tol {
            return Some(EdgeCert {
                disk,
                za: -s,
                zb: s,
                weight: span_weight(-s, s),
                from,
            });
        }
    }

    let n = cfg.solver.grid_resolution;
    let h = 1.0 / n as f64;
    let s_node = |mi: usize| mi as f64 * h;
    let feasible = |mi: usize, solves: &mut usize| -> bool {
        solve_at(s_node(mi), solves).is_some()
    };
    if !feasible(n - 1, solves) {
        return None;
    }
    let mstar = if feasible(1, solves) {
        1
    } else {
        let mut lo = 1;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if feasible(mid, solves) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    // Symmetric marked nodes n - mi and n + mi around the center.
    'candidates: for mi in mstar..=(mstar + 2).min(n - 1) {
        let s = s_node(mi);
        let spread = 2.0 * s * rr;
        let mut c = pmid.coords().to_vec();
        let mut v = linalg::scale(delta, 1.0 / spread);
        for _ in 0..8 {
            *solves += 1;
            let pc = match Point::new(c.clone()) {
                Ok(p) => p,
                Err(_) => continue 'candidates,
            };
            let disk = match solve_local_disk(m, &pc, &v, rr, &solver) {
                Ok(d) => d,
                Err(_) => continue 'candidates,
            };
            let miss_a = linalg::sub(disk.value_at(n - mi, n), a);
            let miss_b = linalg::sub(disk.value_at(n + mi, n), b);
            if linalg::norm2(&miss_a) <= 0.5 * cfg.junction_tol
                && linalg::norm2(&miss_b) <= 0.5 * cfg.junction_tol
            {
                return Some(EdgeCert {
                    disk,
                    za: -s,
                    zb: s,
                    weight: span_weight(-s, s),
                    from,
                });
            }
            // First-order moves: center shifts both marked values,
            // velocity shifts them oppositely scaled by the parameter.
            for k in 0..c.len() {
                let shift_c = 0.5 * (miss_a[k] + miss_b[k]);
                let shift_v = (miss_b[k] - miss_a[k]) / spread;
                c[k] -= shift_c;
                v[k] -= shift_v;
            }
        }
    }
    None
}

/// Upper bound on the chain pseudodistance between p and q, with the
/// witnessing chain. Waypoints are the endpoints plus a deterministic
/// membership sample of the domain.
pub fn estimate_distance(
    m: &ChartManifold,
    p: &Point,
    q: &Point,
    cfg: &EstimatorConfig,
) -> Result<DistanceEstimate> {
    if p.dim() != m.dim() || q.dim() != m.dim() {
        return Err(Error::InvalidArgument(String::from(
            "endpoint dimension mismatch",
        )));
    }
    if !m.domain.contains(p.coords()) || !m.domain.contains(q.coords()) {
        return Err(Error::OutsideDomain);
    }
    let gap = linalg::norm2(&linalg::sub(p.coords(), q.coords()));
    if gap <= cfg.junction_tol {
        return Ok(DistanceEstimate {
            upper_bound: 0.0,
            chain: KobayashiChain::empty(cfg.junction_tol),
            waypoints: vec![p.clone(), q.clone()],
            stats: SolveStats::default(),
        });
    }

    let mut pool = vec![p.clone(), q.clone()];
    if cfg.waypoints > 0 {
        for s in m.sample(cfg.seed, cfg.waypoints)? {
            if pool.iter().all(|t| t.coords() != s.coords()) {
                pool.push(s);
            }
        }
    }
    let graph = WaypointGraph::build(m, pool, cfg.clone())?;
    graph.estimate(0, 1)
}

/// Upper bound for the infinitesimal pseudometric at (p, v), from the
/// largest certified disk radius: value = 1 / r*.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudometricEstimate {
    pub value: f64,
    pub witness_radius: f64,
    /// Area of the witnessing parameter disk; the symplectic-width
    /// analog pi r*^2.
    pub width_analog: f64,
    pub search: MaxRadiusReport,
}

pub fn infinitesimal_metric(
    m: &ChartManifold,
    p: &Point,
    v: &[f64],
    cfg: &SolverConfig,
) -> Result<PseudometricEstimate> {
    infinitesimal_metric_with(m, p, v, cfg, &RadiusSearch::default())
}

pub fn infinitesimal_metric_with(
    m: &ChartManifold,
    p: &Point,
    v: &[f64],
    cfg: &SolverConfig,
    search: &RadiusSearch,
) -> Result<PseudometricEstimate> {
    let report = max_disk_radius_with(m, p, v, cfg, search)?;
    let r = report.radius;
    let value = if r > 0.0 { 1.0 / r } else { f64::INFINITY };
    Ok(PseudometricEstimate {
        value,
        witness_radius: r,
        width_analog: fmath::PI * r * r,
        search: report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::validate_chain;
    use crate::gallery;
    use crate::manifold::{self, AlmostComplexStructure, Domain, NormField};
    use crate::solver::residual;
    use alloc::sync::Arc;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn disk_baseline_is_near_arctanh() {
        let m = manifold::unit_disk();
        let cfg = EstimatorConfig {
            waypoints: 4,
            ..EstimatorConfig::default()
        };
        let est = estimate_distance(&m, &pt(&[0.0, 0.0]), &pt(&[0.5, 0.0]), &cfg).unwrap();
        let lower = fmath::atanh(0.5);
        assert!(
            est.upper_bound >= lower && est.upper_bound <= lower + 0.03,
            "bound {} vs arctanh(1/2) {}",
            est.upper_bound,
            lower
        );
        assert!(validate_chain(&est.chain, &[0.0, 0.0], &[0.5, 0.0]));
        assert_eq!(est.upper_bound, chain_length(&est.chain));
    }

    #[test]
    fn coincident_endpoints_give_zero() {
        let m = manifold::unit_disk();
        let p = pt(&[0.1, -0.2]);
        let est = estimate_distance(&m, &p, &p, &EstimatorConfig::default()).unwrap();
        assert_eq!(est.upper_bound, 0.0);
        assert!(est.chain.links.is_empty());
        assert!(validate_chain(&est.chain, p.coords(), p.coords()));
    }

    #[test]
    fn large_flat_box_distance_is_tiny() {
        let m = manifold::flat_box(2, 50.0).unwrap();
        let cfg = EstimatorConfig {
            waypoints: 2,
            ..EstimatorConfig::default()
        };
        let est = estimate_distance(&m, &pt(&[0.0, 0.0]), &pt(&[1.0, 0.0]), &cfg).unwrap();
        let reference = fmath::atanh(1.0 / 50.0);
        assert!(
            est.upper_bound <= reference * 1.1,
            "bound {} vs reference {}",
            est.upper_bound,
            reference
        );
        assert!(validate_chain(&est.chain, &[0.0, 0.0], &[1.0, 0.0]));
    }

    #[test]
    fn symmetry_of_the_estimate() {
        let m = manifold::unit_disk();
        let cfg = EstimatorConfig {
            waypoints: 4,
            ..EstimatorConfig::default()
        };
        let p = pt(&[0.2, 0.1]);
        let q = pt(&[-0.3, 0.25]);
        let fwd = estimate_distance(&m, &p, &q, &cfg).unwrap();
        let bwd = estimate_distance(&m, &q, &p, &cfg).unwrap();
        assert!(
            (fwd.upper_bound - bwd.upper_bound).abs() < 1e-12,
            "{} vs {}",
            fwd.upper_bound,
            bwd.upper_bound
        );
        assert!(validate_chain(&bwd.chain, q.coords(), p.coords()));
    }

    #[test]
    fn more_waypoints_never_hurt() {
        let m = manifold::unit_disk();
        let p = pt(&[-0.5, 0.0]);
        let q = pt(&[0.5, 0.0]);
        let mut bounds = Vec::new();
        for count in [2usize, 4, 8] {
            let cfg = EstimatorConfig {
                waypoints: count,
                ..EstimatorConfig::default()
            };
            bounds.push(estimate_distance(&m, &p, &q, &cfg).unwrap().upper_bound);
        }
        assert!(bounds[1] <= bounds[0] + 1e-12);
        assert!(bounds[2] <= bounds[1] + 1e-12);
    }

    #[test]
    fn split_domain_is_unreachable() {
        // Two disjoint balls; no disk can cross the gap.
        let member = Arc::new(|p: &[f64]| {
            let left = (p[0] + 2.0) * (p[0] + 2.0) + p[1] * p[1] < 1.0;
            let right = (p[0] - 2.0) * (p[0] - 2.0) + p[1] * p[1] < 1.0;
            left || right
        });
        let m = ChartManifold::new(
            AlmostComplexStructure::standard(2),
            Domain::new(vec![-3.0, -1.0], vec![3.0, 1.0], member).unwrap(),
            NormField::identity(),
            None,
        )
        .unwrap();
        let got = estimate_distance(
            &m,
            &pt(&[-2.0, 0.0]),
            &pt(&[2.0, 0.0]),
            &EstimatorConfig {
                waypoints: 6,
                ..EstimatorConfig::default()
            },
        );
        match got {
            Err(Error::Unreachable { .. }) => {}
            other => panic!("expected unreachable, got {:?}", other.map(|e| e.upper_bound)),
        }
    }

    #[test]
    fn curved_chain_validates_and_certifies() {
        let m = gallery::perturbed_r4(&[0.35, 0.2]).unwrap();
        let p = pt(&[-0.4, 0.1, 0.0, -0.2]);
        let q = pt(&[0.45, -0.15, 0.3, 0.2]);
        let cfg = EstimatorConfig {
            waypoints: 2,
            ..EstimatorConfig::default()
        };
        let est = estimate_distance(&m, &p, &q, &cfg).unwrap();
        assert!(est.upper_bound.is_finite() && est.upper_bound > 0.0);
        assert!(validate_chain(&est.chain, p.coords(), q.coords()));
        assert_eq!(est.upper_bound, chain_length(&est.chain));
        for link in &est.chain.links {
            assert!(residual(&m, &link.disk) <= cfg.solver.tol * 1.000001);
        }
        assert!(est.stats.solves > 0);
        assert!(est.stats.edges_connected > 0);
    }

    #[test]
    fn triangle_inequality_on_a_shared_graph() {
        let m = manifold::unit_disk();
        let pool = vec![
            pt(&[0.0, 0.0]),
            pt(&[0.5, 0.0]),
            pt(&[0.0, 0.5]),
            pt(&[-0.4, -0.2]),
            pt(&[0.3, -0.3]),
        ];
        let graph = WaypointGraph::build(&m, pool, EstimatorConfig::default()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    let dij = graph.estimate(i, j).unwrap().upper_bound;
                    let dik = graph.estimate(i, k).unwrap().upper_bound;
                    let dkj = graph.estimate(k, j).unwrap().upper_bound;
                    assert!(
                        dij <= dik + dkj + 1e-12,
                        "({i},{j},{k}): {dij} vs {dik} + {dkj}"
                    );
                }
            }
        }
    }

    #[test]
    fn metric_baseline_on_the_disk() {
        let m = manifold::unit_disk();
        let est = infinitesimal_metric(
            &m,
            &pt(&[0.0, 0.0]),
            &[1.0, 0.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!((est.value - 1.0).abs() <= 1e-2, "value {}", est.value);
        assert!(
            (est.width_analog - fmath::PI * est.witness_radius * est.witness_radius).abs()
                < 1e-15
        );
        assert!((est.value * est.witness_radius - 1.0).abs() < 1e-15);
    }

    #[test]
    fn metric_homogeneity() {
        let m = manifold::unit_disk();
        let p = pt(&[0.0, 0.0]);
        let cfg = SolverConfig::default();
        let one = infinitesimal_metric(&m, &p, &[1.0, 0.0], &cfg).unwrap().value;
        let two = infinitesimal_metric(&m, &p, &[2.0, 0.0], &cfg).unwrap().value;
        assert!(
            (two - 2.0 * one).abs() <= 0.02 * two.max(1.0),
            "value(2v) {} vs 2 value(v) {}",
            two,
            2.0 * one
        );
    }

    #[test]
    fn metric_on_a_wide_box_is_small() {
        let m = manifold::flat_box(2, 50.0).unwrap();
        let est = infinitesimal_metric(
            &m,
            &pt(&[0.0, 0.0]),
            &[1.0, 0.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(est.value <= 1.0 / 49.0, "value {}", est.value);
    }

    #[test]
    fn blocked_direction_reports_infinite_value() {
        let member = Arc::new(|p: &[f64]| p[0].abs() < 1.0 && p[1].abs() < 1e-9);
        let m = ChartManifold::new(
            AlmostComplexStructure::standard(2),
            Domain::new(vec![-1.0, -1e-9], vec![1.0, 1e-9], member).unwrap(),
            NormField::identity(),
            None,
        )
        .unwrap();
        let est = infinitesimal_metric(
            &m,
            &pt(&[0.0, 0.0]),
            &[0.0, 1.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(est.value.is_infinite());
        assert!(est.search.floored);
        assert_eq!(est.width_analog, 0.0);
    }
}
