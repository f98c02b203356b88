//! Manifold spec files: TOML descriptions that build chart manifolds.
//!
//! A spec names one of the built-in structure kinds and its parameters,
//! an optional domain, an optional diagonal norm field, an optional
//! taming form, and optional run defaults. Specs round-trip through
//! serialization unchanged, so a file written from a parsed spec parses
//! back to an equal value. Product specs reference their factor specs
//! by file path, resolved relative to the referencing file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use acx_core::estimator::EstimatorConfig;
use acx_core::gallery;
use acx_core::linalg::Mat;
use acx_core::manifold::{
    product_manifold, standard_form_matrix, standard_structure_matrix, AlmostComplexStructure,
    ChartManifold, Domain, NormField, SymplecticForm,
};
use acx_core::s6::{CrossOrder, S6Structure};
use acx_core::solver::SolverConfig;

use crate::{CliError, CliResult};

/// Nesting depth at which product spec resolution gives up; guards
/// against reference cycles between spec files.
const MAX_PRODUCT_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "constant")]
    Constant,
    #[serde(rename = "perturbed")]
    Perturbed,
    #[serde(rename = "s6")]
    S6,
    #[serde(rename = "s6-chart")]
    S6Chart,
    #[serde(rename = "grid")]
    Grid,
    #[serde(rename = "product")]
    Product,
    #[serde(rename = "tame-r4")]
    TameR4,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Constant => "constant",
            Kind::Perturbed => "perturbed",
            Kind::S6 => "s6",
            Kind::S6Chart => "s6-chart",
            Kind::Grid => "grid",
            Kind::Product => "product",
            Kind::TameR4 => "tame-r4",
        }
    }

    /// Kinds whose structure is presented intrinsically on the sphere in
    /// addition to the chart; commands add the intrinsic test suites for
    /// these.
    pub fn is_sphere(&self) -> bool {
        matches!(self, Kind::S6 | Kind::S6Chart)
    }
}

/// Domain description. Boxes take halfwidths (a vector, or one scalar
/// for a cube), balls take a radius; the center defaults to the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfwidths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl DomainSpec {
    fn build(&self, dim: usize) -> CliResult<Domain> {
        let center = match &self.center {
            Some(c) if c.len() == dim => c.clone(),
            Some(c) => {
                return Err(CliError::Input(format!(
                    "domain center has {} coordinates, chart dimension is {dim}",
                    c.len()
                )))
            }
            None => vec![0.0; dim],
        };
        match self.shape.as_str() {
            "box" => {
                let halfwidths = match (&self.halfwidths, self.halfwidth) {
                    (Some(v), None) if v.len() == dim => v.clone(),
                    (Some(v), None) => {
                        return Err(CliError::Input(format!(
                            "domain halfwidths has {} entries, chart dimension is {dim}",
                            v.len()
                        )))
                    }
                    (None, Some(w)) => vec![w; dim],
                    (None, None) => {
                        return Err(CliError::Input(String::from(
                            "box domain needs halfwidth or halfwidths",
                        )))
                    }
                    (Some(_), Some(_)) => {
                        return Err(CliError::Input(String::from(
                            "give halfwidth or halfwidths, not both",
                        )))
                    }
                };
                if self.radius.is_some() {
                    return Err(CliError::Input(String::from(
                        "box domain does not take a radius",
                    )));
                }
                Ok(Domain::centered_box(center, halfwidths)?)
            }
            "ball" => {
                if self.halfwidth.is_some() || self.halfwidths.is_some() {
                    return Err(CliError::Input(String::from(
                        "ball domain does not take halfwidths",
                    )));
                }
                let radius = self.radius.ok_or_else(|| {
                    CliError::Input(String::from("ball domain needs a radius"))
                })?;
                Ok(Domain::ball(center, radius)?)
            }
            other => Err(CliError::Input(format!(
                "unknown domain shape {other:?}, expected box or ball"
            ))),
        }
    }
}

/// Kind-specific parameters; each kind reads its own subset and rejects
/// the rest, so typos surface as errors instead of silent defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    /// Perturbation coefficients (perturbed, tame-r4).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
    /// Box halfwidth (tame-r4).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfwidth: Option<f64>,
    /// Chart ball radius (s6, s6-chart).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Stereographic pole, a unit 7-vector (s6, s6-chart).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole: Option<Vec<f64>>,
    /// Cross-product order, "eta-times-w" or "w-times-eta" (s6 kinds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
    /// Structure matrix rows (constant).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Grid box corners and node shape (grid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
    /// Row-major structure matrices, one per grid node (grid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<f64>>>,
    /// Factor spec files, relative to this spec's directory (product).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
}

impl ParamsSpec {
    /// Names of the fields that are set, for unused-parameter errors.
    fn set_fields(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.tau.is_some() {
            out.push("tau");
        }
        if self.halfwidth.is_some() {
            out.push("halfwidth");
        }
        if self.radius.is_some() {
            out.push("radius");
        }
        if self.pole.is_some() {
            out.push("pole");
        }
        if self.order.is_some() {
            out.push("order");
        }
        if self.matrix.is_some() {
            out.push("matrix");
        }
        if self.lo.is_some() {
            out.push("lo");
        }
        if self.hi.is_some() {
            out.push("hi");
        }
        if self.shape.is_some() {
            out.push("shape");
        }
        if self.values.is_some() {
            out.push("values");
        }
        if self.left.is_some() {
            out.push("left");
        }
        if self.right.is_some() {
            out.push("right");
        }
        out
    }
}

/// Diagonal norm field weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub weights: Vec<f64>,
}

/// Taming form: the standard pairing, or explicit matrix rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TamingSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl TamingSpec {
    fn build(&self, dim: usize) -> CliResult<SymplecticForm> {
        match (self.standard, &self.matrix) {
            (Some(true), None) => Ok(SymplecticForm::constant(standard_form_matrix(dim))?),
            (None | Some(false), Some(rows)) => {
                Ok(SymplecticForm::constant(matrix_from_rows(rows, dim, "taming form")?)?)
            }
            _ => Err(CliError::Input(String::from(
                "taming_form needs standard = true or a matrix, not both",
            ))),
        }
    }
}

/// Solver and estimator defaults carried by the spec file; command-line
/// flags override individual entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Disk solver nodes per radius.
    pub grid_resolution: usize,
    /// Disk solver residual target.
    pub tol: f64,
    pub max_iterations: usize,
    pub shrink_factor: f64,
    pub max_shrinks: usize,
    /// Waypoints the distance estimator samples beyond the endpoints.
    pub waypoints: usize,
    /// Chain junction tolerance in chart coordinates.
    pub junction_tol: f64,
    /// Largest disk radius the metric estimator will attempt.
    pub radius_cap: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let est = EstimatorConfig::default();
        RunConfig {
            grid_resolution: est.solver.grid_resolution,
            tol: est.solver.tol,
            max_iterations: est.solver.max_iterations,
            shrink_factor: est.solver.shrink_factor,
            max_shrinks: est.solver.max_shrinks,
            waypoints: est.waypoints,
            junction_tol: est.junction_tol,
            radius_cap: 64.0,
            seed: est.seed,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.tol > 0.0) || !(self.junction_tol > 0.0) || !(self.radius_cap > 0.0) {
            return Err(CliError::Input(String::from(
                "run tolerances and budgets must be positive",
            )));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(CliError::Input(String::from(
                "shrink_factor must lie in (0, 1)",
            )));
        }
        if self.grid_resolution < 4 || self.max_iterations == 0 {
            return Err(CliError::Input(String::from(
                "grid_resolution >= 4 and max_iterations >= 1 required",
            )));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            grid_resolution: self.grid_resolution,
            tol: self.tol,
            max_iterations: self.max_iterations,
            shrink_factor: self.shrink_factor,
            max_shrinks: self.max_shrinks,
        }
    }

    pub fn estimator(&self, seed: u64) -> EstimatorConfig {
        EstimatorConfig {
            waypoints: self.waypoints,
            seed,
            junction_tol: self.junction_tol,
            solver: self.solver(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taming_form: Option<TamingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunConfig>,
}

impl ManifoldSpec {
    /// Reads and parses a spec file. Returns the spec and the directory
    /// its relative references resolve against.
    pub fn load(path: &Path) -> CliResult<(Self, PathBuf)> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let spec = Self::parse(&text)
            .map_err(|e| match e {
                CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
                other => other,
            })?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((spec, base))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let spec: ManifoldSpec =
            toml::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
        if let Some(run) = &spec.run {
            run.validate()?;
        }
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// Run defaults, spec-provided or built in.
    pub fn run_config(&self) -> RunConfig {
        self.run.clone().unwrap_or_default()
    }

    /// Seed precedence: command-line flag, then top-level spec seed,
    /// then the run table.
    pub fn effective_seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or_else(|| self.run_config().seed)
    }

    pub fn to_manifold(&self, base_dir: &Path) -> CliResult<ChartManifold> {
        self.build(base_dir, 0)
    }

    fn params(&self) -> ParamsSpec {
        self.params.clone().unwrap_or_default()
    }

    /// Rejects set parameters outside the allowed list for the kind.
    fn check_params(&self, allowed: &[&str]) -> CliResult<()> {
        for name in self.params().set_fields() {
            if !allowed.contains(&name) {
                return Err(CliError::Input(format!(
                    "parameter {name:?} is not used by kind {:?}",
                    self.kind.name()
                )));
            }
        }
        Ok(())
    }

    /// Rejects domain/norm/taming tables for kinds that build their own.
    fn reject_tables(&self) -> CliResult<()> {
        if self.domain.is_some() || self.norm.is_some() || self.taming_form.is_some() {
            return Err(CliError::Input(format!(
                "kind {:?} builds its own domain, norm, and taming form",
                self.kind.name()
            )));
        }
        Ok(())
    }

    fn check_dim(&self, built: usize) -> CliResult<()> {
        match self.dim {
            Some(d) if d != built => Err(CliError::Input(format!(
                "spec says dim = {d} but the kind builds dimension {built}"
            ))),
            _ => Ok(()),
        }
    }

    fn build(&self, base_dir: &Path, depth: usize) -> CliResult<ChartManifold> {
        if depth > MAX_PRODUCT_DEPTH {
            return Err(CliError::Input(String::from(
                "product specs nest too deeply; reference cycle suspected",
            )));
        }
        let params = self.params();
        match self.kind {
            Kind::Constant => {
                self.check_params(&["matrix"])?;
                let (mat, dim) = match &params.matrix {
                    Some(rows) => {
                        let dim = rows.len();
                        let mat = matrix_from_rows(rows, dim, "structure matrix")?;
                        let defect = mat.mul(&mat).add(&Mat::identity(dim)).max_abs();
                        if defect > 1e-9 {
                            return Err(CliError::Input(format!(
                                "constant matrix squares to -I only up to {defect:.2e}"
                            )));
                        }
                        (mat, dim)
                    }
                    None => {
                        let dim = self.dim.ok_or_else(|| {
                            CliError::Input(String::from(
                                "constant kind needs dim or an explicit matrix",
                            ))
                        })?;
                        (standard_structure_matrix(dim), dim)
                    }
                };
                self.check_dim(dim)?;
                let domain = self.build_domain(dim)?;
                let norm = self.build_norm(dim)?;
                let taming = match &self.taming_form {
                    Some(t) => Some(t.build(dim)?),
                    None => None,
                };
                Ok(ChartManifold::new(
                    AlmostComplexStructure::constant(mat)?,
                    domain,
                    norm,
                    taming,
                )?)
            }
            Kind::Perturbed => {
                self.check_params(&["tau"])?;
                let dim = self.dim.unwrap_or(4);
                let tau = params.tau.as_deref().ok_or_else(|| {
                    CliError::Input(String::from("perturbed kind needs params.tau"))
                })?;
                let structure = gallery::standard_perturbation(dim, tau)?;
                let domain = self.build_domain(dim)?;
                let norm = self.build_norm(dim)?;
                let taming = match &self.taming_form {
                    Some(t) => Some(t.build(dim)?),
                    None => Some(SymplecticForm::constant(standard_form_matrix(dim))?),
                };
                Ok(ChartManifold::new(structure, domain, norm, taming)?)
            }
            Kind::S6 | Kind::S6Chart => {
                self.check_params(&["radius", "pole", "order"])?;
                self.reject_tables()?;
                self.check_dim(6)?;
                let radius = params.radius.unwrap_or(2.0);
                let pole = match &params.pole {
                    Some(p) => {
                        if p.len() != 7 {
                            return Err(CliError::Input(String::from(
                                "pole must be a 7-vector",
                            )));
                        }
                        p.clone()
                    }
                    None => {
                        let mut p = vec![0.0; 7];
                        p[6] = 1.0;
                        p
                    }
                };
                let order = match params.order.as_deref() {
                    None | Some("eta-times-w") => CrossOrder::EtaTimesW,
                    Some("w-times-eta") => CrossOrder::WTimesEta,
                    Some(other) => {
                        return Err(CliError::Input(format!(
                            "unknown cross-product order {other:?}"
                        )))
                    }
                };
                Ok(S6Structure::new(order).chart(&pole, radius, 1e-3)?)
            }
            Kind::Grid => {
                self.check_params(&["lo", "hi", "shape", "values"])?;
                self.reject_tables()?;
                let lo = params.lo.clone().ok_or_else(|| {
                    CliError::Input(String::from("grid kind needs params.lo"))
                })?;
                let hi = params.hi.clone().ok_or_else(|| {
                    CliError::Input(String::from("grid kind needs params.hi"))
                })?;
                let shape = params.shape.clone().ok_or_else(|| {
                    CliError::Input(String::from("grid kind needs params.shape"))
                })?;
                let rows = params.values.as_ref().ok_or_else(|| {
                    CliError::Input(String::from("grid kind needs params.values"))
                })?;
                let dim = lo.len();
                self.check_dim(dim)?;
                let mut mats = Vec::with_capacity(rows.len());
                for row in rows {
                    mats.push(flat_matrix(row, dim, "grid value")?);
                }
                Ok(gallery::grid_manifold(lo, hi, shape, mats)?)
            }
            Kind::Product => {
                self.check_params(&["left", "right"])?;
                self.reject_tables()?;
                let left = params.left.as_deref().ok_or_else(|| {
                    CliError::Input(String::from("product kind needs params.left"))
                })?;
                let right = params.right.as_deref().ok_or_else(|| {
                    CliError::Input(String::from("product kind needs params.right"))
                })?;
                let a = self.load_factor(base_dir, left, depth)?;
                let b = self.load_factor(base_dir, right, depth)?;
                let m = product_manifold(&a, &b)?;
                self.check_dim(m.dim())?;
                Ok(m)
            }
            Kind::TameR4 => {
                self.check_params(&["tau", "halfwidth"])?;
                self.reject_tables()?;
                self.check_dim(4)?;
                let tau = params.tau.as_deref().ok_or_else(|| {
                    CliError::Input(String::from("tame-r4 kind needs params.tau"))
                })?;
                let halfwidth = params.halfwidth.unwrap_or(1.0);
                Ok(gallery::tame_r4(tau, halfwidth)?)
            }
        }
    }

    fn load_factor(
        &self,
        base_dir: &Path,
        rel: &str,
        depth: usize,
    ) -> CliResult<ChartManifold> {
        let path = base_dir.join(rel);
        let (spec, dir) = ManifoldSpec::load(&path)?;
        spec.build(&dir, depth + 1)
    }

    fn build_domain(&self, dim: usize) -> CliResult<Domain> {
        match &self.domain {
            Some(d) => d.build(dim),
            None => Ok(Domain::centered_box(vec![0.0; dim], vec![1.0; dim])?),
        }
    }

    fn build_norm(&self, dim: usize) -> CliResult<NormField> {
        match &self.norm {
            Some(n) => {
                if n.weights.len() != dim {
                    return Err(CliError::Input(format!(
                        "norm weights have {} entries, chart dimension is {dim}",
                        n.weights.len()
                    )));
                }
                Ok(NormField::diagonal(n.weights.clone())?)
            }
            None => Ok(NormField::identity()),
        }
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], dim: usize, what: &str) -> CliResult<Mat> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Input(format!(
            "{what} must be {dim} rows of {dim} numbers"
        )));
    }
    Ok(Mat::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn flat_matrix(row: &[f64], dim: usize, what: &str) -> CliResult<Mat> {
    if row.len() != dim * dim {
        return Err(CliError::Input(format!(
            "{what} must hold {} numbers (row-major {dim}x{dim})",
            dim * dim
        )));
    }
    Ok(Mat::from_fn(dim, dim, |i, j| row[i * dim + j]))
}
