//! Almost complex structures on chart domains.
//!
//! A manifold here is always a single coordinate chart: an open subset of
//! R^(2n) described by a bounding box plus a membership predicate, with a
//! matrix field J satisfying J^2 = -I pointwise, an optional taming form,
//! and a norm field used to measure tangent vectors.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::{self, Mat};
use crate::sampling;

/// Shared matrix-valued field on chart coordinates.
pub type MatrixField = Arc<dyn Fn(&[f64]) -> Mat + Send + Sync>;
/// Shared membership predicate.
pub type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A chart point. The coordinate vector always has even length.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() % 2 != 0 {
            return Err(Error::InvalidArgument(String::from(
                "chart points need even, positive dimension",
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(String::from(
                "chart points must be finite",
            )));
        }
        Ok(Point(coords))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

/// A tangent vector anchored at a chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub dir: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, dir: Vec<f64>) -> Result<Self> {
        if dir.len() != base.dim() {
            return Err(Error::InvalidArgument(String::from(
                "tangent vector dimension differs from its base point",
            )));
        }
        Ok(TangentVector { base, dir })
    }
}

/// The standard structure J0 in block-diagonal form: on each coordinate
/// pair (x, y) it acts as (x, y) -> (-y, x).
pub fn standard_structure_matrix(dim: usize) -> Mat {
    let mut j = Mat::zeros(dim, dim);
    for k in 0..dim / 2 {
        j[(2 * k, 2 * k + 1)] = -1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

/// The standard symplectic pairing sum dx_k ^ dy_k as a matrix W with
/// omega(X, Y) = X^T W Y.
pub fn standard_form_matrix(dim: usize) -> Mat {
    let mut w = Mat::zeros(dim, dim);
    for k in 0..dim / 2 {
        w[(2 * k, 2 * k + 1)] = 1.0;
        w[(2 * k + 1, 2 * k)] = -1.0;
    }
    w
}

/// A matrix field J(p) on a chart, intended to satisfy J^2 = -I.
///
/// The constructor does not verify the algebraic identity; that is what
/// [`check_structure`] is for, and diagnosing broken inputs is part of its
/// job. `smoothness_step` is the finite-difference step any derivative of
/// J is taken with.
#[derive(Clone)]
pub struct AlmostComplexStructure {
    dim: usize,
    smoothness_step: f64,
    eval: MatrixField,
}

impl AlmostComplexStructure {
    pub fn new(dim: usize, smoothness_step: f64, eval: MatrixField) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::InvalidArgument(String::from(
                "structure dimension must be even and positive",
            )));
        }
        if !(smoothness_step > 0.0) {
            return Err(Error::InvalidArgument(String::from(
                "smoothness step must be positive",
            )));
        }
        Ok(AlmostComplexStructure {
            dim,
            smoothness_step,
            eval,
        })
    }

    /// A constant structure given by a fixed matrix.
    pub fn constant(mat: Mat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidArgument(String::from(
                "structure matrix must be square",
            )));
        }
        let dim = mat.rows();
        Self::new(dim, 1e-3, Arc::new(move |_p: &[f64]| mat.clone()))
    }

    pub fn standard(dim: usize) -> Self {
        Self::constant(standard_structure_matrix(dim)).expect("standard structure")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn smoothness_step(&self) -> f64 {
        self.smoothness_step
    }

    pub fn eval(&self, p: &[f64]) -> Mat {
        debug_assert_eq!(p.len(), self.dim);
        (self.eval)(p)
    }

    pub fn field(&self) -> MatrixField {
        self.eval.clone()
    }
}

/// An antisymmetric pairing field omega(X, Y) = X^T W(p) Y.
#[derive(Clone)]
pub struct SymplecticForm {
    dim: usize,
    eval: MatrixField,
}

impl SymplecticForm {
    pub fn new(dim: usize, eval: MatrixField) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::InvalidArgument(String::from(
                "form dimension must be even and positive",
            )));
        }
        Ok(SymplecticForm { dim, eval })
    }

    pub fn constant(mat: Mat) -> Result<Self> {
        let dim = mat.rows();
        Self::new(dim, Arc::new(move |_p: &[f64]| mat.clone()))
    }

    pub fn standard(dim: usize) -> Self {
        Self::constant(standard_form_matrix(dim)).expect("standard form")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, p: &[f64]) -> Mat {
        (self.eval)(p)
    }

    pub fn pair(&self, p: &[f64], x: &[f64], y: &[f64]) -> f64 {
        linalg::dot(x, &self.matrix(p).mul_vec(y))
    }
}

/// Positive-definite norm field; tangent lengths are sqrt(u^T G(p) u).
#[derive(Clone)]
pub struct NormField {
    eval: MatrixField,
}

impl NormField {
    pub fn identity() -> Self {
        NormField {
            eval: Arc::new(|p: &[f64]| Mat::identity(p.len())),
        }
    }

    pub fn new(eval: MatrixField) -> Self {
        NormField { eval }
    }

    pub fn diagonal(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidArgument(String::from(
                "norm weights must be positive",
            )));
        }
        Ok(NormField {
            eval: Arc::new(move |_p: &[f64]| {
                Mat::from_fn(weights.len(), weights.len(), |i, j| {
                    if i == j {
                        weights[i]
                    } else {
                        0.0
                    }
                })
            }),
        })
    }

    pub fn gram(&self, p: &[f64]) -> Mat {
        (self.eval)(p)
    }

    pub fn norm(&self, p: &[f64], u: &[f64]) -> f64 {
        fmath::sqrt(linalg::dot(u, &self.gram(p).mul_vec(u)).max(0.0))
    }
}

/// Open chart domain: a bounding box plus a membership predicate.
///
/// Invariant expected from constructors: every member lies inside the box.
#[derive(Clone)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
    member: Predicate,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, member: Predicate) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidArgument(String::from(
                "domain box bounds must have equal positive length",
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument(String::from(
                "domain box must have positive extent",
            )));
        }
        Ok(Domain { lo, hi, member })
    }

    /// Open axis-aligned box.
    pub fn centered_box(center: Vec<f64>, halfwidths: Vec<f64>) -> Result<Self> {
        if center.len() != halfwidths.len() {
            return Err(Error::InvalidArgument(String::from(
                "box center and halfwidths disagree in length",
            )));
        }
        let lo: Vec<f64> = center.iter().zip(&halfwidths).map(|(c, w)| c - w).collect();
        let hi: Vec<f64> = center.iter().zip(&halfwidths).map(|(c, w)| c + w).collect();
        let c = center.clone();
        let w = halfwidths.clone();
        Self::new(
            lo,
            hi,
            Arc::new(move |p: &[f64]| {
                p.iter()
                    .zip(c.iter().zip(w.iter()))
                    .all(|(x, (ci, wi))| fmath::abs(x - ci) < *wi)
            }),
        )
    }

    /// Open Euclidean ball.
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(String::from(
                "ball radius must be positive",
            )));
        }
        let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
        let c = center.clone();
        Self::new(
            lo,
            hi,
            Arc::new(move |p: &[f64]| {
                let d2: f64 = p.iter().zip(c.iter()).map(|(x, ci)| (x - ci) * (x - ci)).sum();
                d2 < radius * radius
            }),
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        (self.member)(p)
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Euclidean diameter of the bounding box.
    pub fn bbox_diameter(&self) -> f64 {
        linalg::norm2(&linalg::sub(&self.hi, &self.lo))
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
}

/// A chart-presented almost complex manifold.
#[derive(Clone)]
pub struct ChartManifold {
    pub structure: AlmostComplexStructure,
    pub domain: Domain,
    pub norm: NormField,
    pub taming: Option<SymplecticForm>,
}

impl ChartManifold {
    pub fn new(
        structure: AlmostComplexStructure,
        domain: Domain,
        norm: NormField,
        taming: Option<SymplecticForm>,
    ) -> Result<Self> {
        if structure.dim() != domain.dim() {
            return Err(Error::InvalidArgument(String::from(
                "structure and domain dimensions disagree",
            )));
        }
        if let Some(form) = &taming {
            if form.dim() != structure.dim() {
                return Err(Error::InvalidArgument(String::from(
                    "taming form dimension disagrees with the structure",
                )));
            }
        }
        Ok(ChartManifold {
            structure,
            domain,
            norm,
            taming,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn norm_at(&self, p: &[f64], u: &[f64]) -> f64 {
        self.norm.norm(p, u)
    }

    /// Low-discrepancy sample of domain members.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<Point>> {
        let pts = sampling::membership_points(
            seed,
            count,
            self.domain.lo(),
            self.domain.hi(),
            |p| self.domain.contains(p),
        )
        .ok_or(Error::EmptyDomain)?;
        pts.into_iter().map(Point::new).collect()
    }
}

/// Outcome of a pointwise structure check.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub samples: usize,
    pub max_defect: f64,
    pub tol: f64,
    pub pass: bool,
    pub worst_point: Point,
}

/// Samples the domain and reports the largest Frobenius norm of
/// J(p)^2 + I.
pub fn check_structure(
    m: &ChartManifold,
    sample_count: usize,
    tol: f64,
) -> Result<StructureReport> {
    if sample_count == 0 {
        return Err(Error::InvalidArgument(String::from(
            "structure check needs at least one sample",
        )));
    }
    let pts = m.sample(0, sample_count)?;
    let id = Mat::identity(m.dim());
    let mut max_defect = -1.0;
    let mut worst = pts[0].clone();
    for p in &pts {
        let j = m.structure.eval(p.coords());
        let defect = j.mul(&j).add(&id).frobenius();
        if defect > max_defect {
            max_defect = defect;
            worst = p.clone();
        }
    }
    Ok(StructureReport {
        samples: pts.len(),
        max_defect,
        tol,
        pass: max_defect <= tol,
        worst_point: worst,
    })
}

/// Minimum of omega_p(X, J(p) X) over sampled points and unit directions.
///
/// Positive values certify taming on the sample; the coordinate frame is
/// always included among the directions so axis-aligned degeneracies are
/// not missed. Unit vectors are measured in the Euclidean norm of the
/// chart.
pub fn taming_defect(m: &ChartManifold, sample_count: usize) -> Result<f64> {
    let form = m.taming.as_ref().ok_or(Error::MissingTamingForm)?;
    let pts = m.sample(1, sample_count.max(1))?;
    let dirs = sampling::unit_sphere_with_frame(2, sample_count.max(2 * m.dim()), m.dim());
    let mut min_pairing = f64::INFINITY;
    for p in &pts {
        let w = form.matrix(p.coords());
        // Degenerate pairings cannot tame anything; reject them early.
        if fmath::abs(w.det()) < 1e-12 {
            return Err(Error::InvalidArgument(String::from(
                "taming form is degenerate at a sample point",
            )));
        }
        let j = m.structure.eval(p.coords());
        for x in &dirs {
            let jx = j.mul_vec(x);
            let v = linalg::dot(x, &w.mul_vec(&jx));
            if v < min_pairing {
                min_pairing = v;
            }
        }
    }
    Ok(min_pairing)
}

/// The product chart of two manifolds, with block-diagonal structure,
/// norm, and (when both factors carry one) taming form.
pub fn product_manifold(a: &ChartManifold, b: &ChartManifold) -> Result<ChartManifold> {
    let (na, nb) = (a.dim(), b.dim());
    let dim = na + nb;

    let ja = a.structure.field();
    let jb = b.structure.field();
    let structure = AlmostComplexStructure::new(
        dim,
        a.structure.smoothness_step().min(b.structure.smoothness_step()),
        Arc::new(move |p: &[f64]| block_diag(&ja(&p[..na]), &jb(&p[na..]))),
    )?;

    let lo = [a.domain.lo(), b.domain.lo()].concat();
    let hi = [a.domain.hi(), b.domain.hi()].concat();
    let ma = a.domain.clone();
    let mb = b.domain.clone();
    let domain = Domain::new(
        lo,
        hi,
        Arc::new(move |p: &[f64]| ma.contains(&p[..na]) && mb.contains(&p[na..])),
    )?;

    let ga = a.norm.clone();
    let gb = b.norm.clone();
    let norm = NormField::new(Arc::new(move |p: &[f64]| {
        block_diag(&ga.gram(&p[..na]), &gb.gram(&p[na..]))
    }));

    let taming = match (&a.taming, &b.taming) {
        (Some(wa), Some(wb)) => {
            let (wa, wb) = (wa.clone(), wb.clone());
            Some(SymplecticForm::new(
                dim,
                Arc::new(move |p: &[f64]| block_diag(&wa.matrix(&p[..na]), &wb.matrix(&p[na..]))),
            )?)
        }
        _ => None,
    };

    ChartManifold::new(structure, domain, norm, taming)
}

pub(crate) fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let (na, nb) = (a.rows(), b.rows());
    let mut out = Mat::zeros(na + nb, na + nb);
    for i in 0..na {
        for j in 0..na {
            out[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..nb {
        for j in 0..nb {
            out[(na + i, na + j)] = b[(i, j)];
        }
    }
    out
}

/// Convenience: flat chart (standard structure, identity norm, standard
/// taming form) on an open box.
pub fn flat_box(dim: usize, halfwidth: f64) -> Result<ChartManifold> {
    ChartManifold::new(
        AlmostComplexStructure::standard(dim),
        Domain::centered_box(vec![0.0; dim], vec![halfwidth; dim])?,
        NormField::identity(),
        Some(SymplecticForm::standard(dim)),
    )
}

/// Convenience: flat chart on the open unit disk in R^2.
pub fn unit_disk() -> ChartManifold {
    ChartManifold::new(
        AlmostComplexStructure::standard(2),
        Domain::ball(vec![0.0, 0.0], 1.0).expect("unit ball"),
        NormField::identity(),
        Some(SymplecticForm::standard(2)),
    )
    .expect("unit disk chart")
}
