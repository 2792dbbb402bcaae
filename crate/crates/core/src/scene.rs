//! TOML scene files.
//!
//! Polynomials are written as expressions over `x1..xn, y1..yn, t` (curve
//! parameters `s1..sm`); exact constants are strings such as `"9/10"`. Form and
//! frame indices are 1-based: `1..n` are `θ_j`/`X_j`, `n+1..2n` are `θ_{n+j}`/`Y_j`,
//! and `2n+1` is `θ`/`T`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{InvariantForm, MultiIndex};
use crate::group::HomogeneousDistance;
use crate::linalg::wedge_norm_f64;
use crate::poly::{coordinate_names, parameter_names, Poly, Rational};
use crate::measure::{euclidean_oracle_integral, integrate_lowcodim_form};
use crate::quadrature::{ChartBox, CurrentValue, QuadratureSpec};
use crate::rumin::RuminComplex;
use crate::scalar::{Bump, SmoothScalar};
use crate::stokes::{approx_convergence, stokes_residual, ConvergenceExperiment, ConvergenceReport, ScenePatch, StokesReport, StokesScene};
use crate::submanifold::{LegendrianPatch, LevelSetPatch, CHARACTERISTIC_THRESHOLD};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    id: String,
    kind: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    degenerate: bool,
    /// Error code a negative fixture is expected to raise.
    expect_error: Option<String>,
    group: GroupSection,
    patch: PatchSection,
    form: FormSection,
    #[serde(default)]
    quadrature: QuadratureSpec,
    distance: Option<DistanceSection>,
    experiment: Option<ExperimentSection>,
    #[serde(default)]
    tolerance: ToleranceSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupSection {
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchSection {
    kind: String,
    #[serde(default)]
    f: Vec<String>,
    boundary: Option<String>,
    chart: Option<ChartBox>,
    #[serde(default = "one")]
    orientation: i32,
    vertical: Option<Vec<usize>>,
    gamma: Option<Vec<String>>,
    #[serde(rename = "box")]
    param_box: Option<ChartBox>,
    boundary_curve: Option<CurveSection>,
}

fn one() -> i32 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveSection {
    gamma: Vec<String>,
    #[serde(rename = "box")]
    param_box: ChartBox,
    #[serde(default = "one")]
    orientation: i32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormSection {
    degree: usize,
    #[serde(default)]
    terms: Vec<FormTerm>,
    bump: Option<BumpSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormTerm {
    indices: Vec<usize>,
    coeff: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BumpSection {
    center: Vec<String>,
    radius: String,
    axes: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistanceSection {
    kind: HomogeneousDistance,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    shifts: Vec<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceSection {
    #[serde(default = "default_residual")]
    residual: f64,
    #[serde(default = "default_gap")]
    gap: f64,
    #[serde(default = "default_oracle")]
    oracle: f64,
}

fn default_residual() -> f64 {
    1e-6
}
fn default_gap() -> f64 {
    1e-3
}
fn default_oracle() -> f64 {
    1e-6
}

impl Default for ToleranceSection {
    fn default() -> Self {
        ToleranceSection { residual: default_residual(), gap: default_gap(), oracle: default_oracle() }
    }
}

#[derive(Clone, Debug)]
pub enum SceneBody {
    Stokes(StokesScene),
    /// `⟦S⟧(ω)` by the graph path, checked against the Euclidean oracle.
    Current { patch: LevelSetPatch, form: InvariantForm, tolerance: f64 },
    Convergence(ConvergenceExperiment),
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub id: String,
    pub description: String,
    pub n: usize,
    pub spec: QuadratureSpec,
    pub distance: HomogeneousDistance,
    pub expect_error: Option<String>,
    pub body: SceneBody,
}

impl Scene {
    pub fn kind(&self) -> &'static str {
        match self.body {
            SceneBody::Stokes(_) => "stokes",
            SceneBody::Current { .. } => "current",
            SceneBody::Convergence(_) => "convergence",
        }
    }

    pub fn from_path(path: &Path) -> Result<Scene> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Scene::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses and builds the scene; construction errors keep their own codes.
    pub fn from_toml_str(text: &str) -> Result<Scene> {
        let file: SceneFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        build(file)
    }

    /// Every check that does not need quadrature.
    pub fn validate(&self) -> Result<()> {
        match &self.body {
            SceneBody::Stokes(s) => {
                s.validate()?;
                if let ScenePatch::LevelSet { patch, .. } = &s.patch {
                    check_noncharacteristic(patch)?;
                }
                Ok(())
            }
            SceneBody::Current { patch, form, .. } => {
                if form.degree() != patch.dim() {
                    return Err(Error::DegreeMismatch { expected: patch.dim(), found: form.degree() });
                }
                if !RuminComplex::new(self.n)?.j_membership(form)? {
                    return Err(Error::NotInJ { degree: form.degree() });
                }
                check_noncharacteristic(patch)
            }
            SceneBody::Convergence(exp) => {
                if exp.form.degree() != exp.patch.dim() {
                    return Err(Error::DegreeMismatch { expected: exp.patch.dim(), found: exp.form.degree() });
                }
                check_noncharacteristic(&exp.patch)?;
                for &h in &exp.shifts {
                    let mut c = vec![Rational::from_integer(0.into()); exp.patch.codim()];
                    c[0] = Rational::new(1.into(), (h as i64).into());
                    check_noncharacteristic(&exp.patch.shifted(&c)?)?;
                }
                Ok(())
            }
        }
    }
}

impl Scene {
    /// The test form of the scene.
    pub fn form(&self) -> &InvariantForm {
        match &self.body {
            SceneBody::Stokes(s) => &s.form,
            SceneBody::Current { form, .. } => form,
            SceneBody::Convergence(e) => &e.form,
        }
    }

    /// Replaces the asserted tolerance and the number of refinement levels.
    pub fn with_overrides(mut self, tolerance: Option<f64>, levels: Option<usize>) -> Result<Scene> {
        if let Some(t) = tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidScene(format!("tolerance must be positive, got {t}")));
            }
        }
        if let Some(l) = levels {
            self.spec = QuadratureSpec::new(self.spec.order, l)?;
        }
        let spec = self.spec.clone();
        match &mut self.body {
            SceneBody::Stokes(s) => {
                s.spec = spec;
                s.tolerance = tolerance.unwrap_or(s.tolerance);
            }
            SceneBody::Current { tolerance: tol, .. } => *tol = tolerance.unwrap_or(*tol),
            SceneBody::Convergence(e) => {
                e.spec = spec;
                e.tolerance = tolerance.unwrap_or(e.tolerance);
            }
        }
        Ok(self)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CurrentReport {
    pub id: String,
    pub graph: CurrentValue,
    pub oracle: CurrentValue,
    pub relative_difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum SceneOutcome {
    Stokes(StokesReport),
    Current(CurrentReport),
    Convergence(ConvergenceReport),
}

impl SceneOutcome {
    pub fn passed(&self) -> bool {
        match self {
            SceneOutcome::Stokes(r) => r.passed,
            SceneOutcome::Current(r) => r.passed,
            SceneOutcome::Convergence(r) => r.passed,
        }
    }

    /// The headline number of the report.
    pub fn value(&self) -> &CurrentValue {
        match self {
            SceneOutcome::Stokes(r) => &r.lhs,
            SceneOutcome::Current(r) => &r.graph,
            SceneOutcome::Convergence(r) => &r.limit,
        }
    }
}

impl Scene {
    /// Runs the scene's experiment after validation.
    pub fn run(&self) -> Result<SceneOutcome> {
        self.validate()?;
        match &self.body {
            SceneBody::Stokes(s) => Ok(SceneOutcome::Stokes(stokes_residual(s)?)),
            SceneBody::Current { patch, form, tolerance } => {
                let graph = integrate_lowcodim_form(patch, form, &self.spec)?;
                let oracle = euclidean_oracle_integral(patch, form, &self.spec)?;
                let scale = graph.value.abs().max(oracle.value.abs()).max(1e-300);
                let relative_difference = (graph.value - oracle.value).abs() / scale;
                let passed = relative_difference < *tolerance;
                Ok(SceneOutcome::Current(CurrentReport {
                    id: self.id.clone(),
                    graph,
                    oracle,
                    relative_difference,
                    tolerance: *tolerance,
                    passed,
                }))
            }
            SceneBody::Convergence(exp) => Ok(SceneOutcome::Convergence(approx_convergence(exp)?)),
        }
    }
}

/// Samples the graph domain for points where the horizontal gradients degenerate.
pub fn check_noncharacteristic(patch: &LevelSetPatch) -> Result<()> {
    let wb = patch.w_box();
    let m = wb.dim();
    let per = 5usize;
    for mut c in 0..per.pow(m as u32) {
        let mut xi = vec![0.0; m];
        for (a, x) in xi.iter_mut().enumerate() {
            let j = c % per;
            c /= per;
            *x = wb.lo[a] + (wb.hi[a] - wb.lo[a]) * j as f64 / (per - 1) as f64;
        }
        let z = patch.graph_point(&xi)?;
        let norm = wedge_norm_f64(&patch.horizontal_gradients(&z));
        if norm < CHARACTERISTIC_THRESHOLD {
            return Err(Error::CharacteristicPoint { point: z, norm });
        }
    }
    Ok(())
}

fn scene_error(id: &str, what: &str, e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("scene {id}, {what}: {m}")),
        Error::InvalidScene(m) => Error::InvalidScene(format!("scene {id}, {what}: {m}")),
        other => other,
    }
}

fn parse_polys(src: &[String], vars: &[String], id: &str, what: &str) -> Result<Vec<Poly>> {
    src.iter().map(|s| Poly::parse(s, vars).map_err(|e| scene_error(id, what, e))).collect()
}

fn frame_index(i: usize, dim: usize, id: &str) -> Result<usize> {
    if i == 0 || i > dim {
        return Err(Error::InvalidScene(format!("scene {id}: index {i} outside 1..={dim}")));
    }
    Ok(i - 1)
}

fn build(file: SceneFile) -> Result<Scene> {
    let id = file.id.clone();
    let n = file.group.n;
    if n == 0 || n > 4 {
        return Err(Error::InvalidScene(format!("scene {id}: group dimension n must be in 1..=4")));
    }
    let dim = 2 * n + 1;
    let coords = coordinate_names(n);
    let form = build_form(&file.form, n, &coords, &id)?;
    let spec = file.quadrature.clone();
    spec.validate().map_err(|e| scene_error(&id, "quadrature", e))?;
    let distance = file.distance.as_ref().map(|d| d.kind).unwrap_or(HomogeneousDistance::Koranyi);
    let p = &file.patch;

    let patch = match p.kind.as_str() {
        "level-set" => {
            let f = parse_polys(&p.f, &coords, &id, "patch.f")?.into_iter().map(SmoothScalar::from_poly).collect();
            let boundary = match &p.boundary {
                Some(b) => Some(SmoothScalar::from_poly(Poly::parse(b, &coords).map_err(|e| scene_error(&id, "patch.boundary", e))?)),
                None => None,
            };
            let chart = p.chart.clone().ok_or_else(|| Error::InvalidScene(format!("scene {id}: level-set patch needs a chart")))?;
            let chart = ChartBox::new(chart.lo, chart.hi).map_err(|e| scene_error(&id, "patch.chart", e))?;
            let vertical = match &p.vertical {
                Some(v) => Some(v.iter().map(|&i| frame_index(i, dim - 1, &id)).collect::<Result<Vec<_>>>()?),
                None => None,
            };
            let patch = LevelSetPatch::new(n, f, chart, p.orientation, boundary, vertical).map_err(|e| scene_error(&id, "patch", e))?;
            let curve = match &p.boundary_curve {
                Some(c) => Some(build_curve(n, &c.gamma, &c.param_box, c.orientation, &id)?),
                None => None,
            };
            ScenePatch::LevelSet { patch, boundary_curve: curve }
        }
        "legendrian" => {
            let gamma = p.gamma.as_ref().ok_or_else(|| Error::InvalidScene(format!("scene {id}: legendrian patch needs gamma")))?;
            let bx = p.param_box.as_ref().ok_or_else(|| Error::InvalidScene(format!("scene {id}: legendrian patch needs a box")))?;
            ScenePatch::Legendrian(build_curve(n, gamma, bx, p.orientation, &id)?)
        }
        other => return Err(Error::InvalidScene(format!("scene {id}: unknown patch kind '{other}'"))),
    };

    let body = match file.kind.as_str() {
        "stokes" => SceneBody::Stokes(StokesScene {
            id: id.clone(),
            patch,
            form,
            spec: spec.clone(),
            tolerance: file.tolerance.residual,
            degenerate: file.degenerate,
        }),
        "current" | "convergence" => {
            let ScenePatch::LevelSet { patch, .. } = patch else {
                return Err(Error::InvalidScene(format!("scene {id}: {} scenes need a level-set patch", file.kind)));
            };
            if file.kind == "current" {
                SceneBody::Current { patch, form, tolerance: file.tolerance.oracle }
            } else {
                let exp = file
                    .experiment
                    .as_ref()
                    .ok_or_else(|| Error::InvalidScene(format!("scene {id}: convergence scenes need [experiment]")))?;
                SceneBody::Convergence(ConvergenceExperiment {
                    id: id.clone(),
                    patch,
                    form,
                    shifts: exp.shifts.clone(),
                    spec: spec.clone(),
                    tolerance: file.tolerance.gap,
                })
            }
        }
        other => return Err(Error::InvalidScene(format!("scene {id}: unknown scene kind '{other}'"))),
    };
    Ok(Scene { id, description: file.description, n, spec, distance, expect_error: file.expect_error, body })
}

fn build_curve(n: usize, gamma: &[String], bx: &ChartBox, orientation: i32, id: &str) -> Result<LegendrianPatch> {
    let bx = if bx.dim() == 0 { bx.clone() } else { ChartBox::new(bx.lo.clone(), bx.hi.clone()).map_err(|e| scene_error(id, "box", e))? };
    let params = parameter_names(bx.dim());
    let comps = parse_polys(gamma, &params, id, "gamma")?.into_iter().map(SmoothScalar::from_poly).collect();
    LegendrianPatch::new(n, comps, bx, orientation).map_err(|e| scene_error(id, "gamma", e))
}

fn build_form(f: &FormSection, n: usize, coords: &[String], id: &str) -> Result<InvariantForm> {
    let dim = 2 * n + 1;
    let bump = match &f.bump {
        Some(b) => {
            if b.center.len() != dim {
                return Err(Error::InvalidScene(format!("scene {id}: bump centre needs {dim} entries")));
            }
            let center = b.center.iter().map(|c| Poly::parse_constant(c)).collect::<Result<Vec<_>>>().map_err(|e| scene_error(id, "form.bump", e))?;
            let radius = Poly::parse_constant(&b.radius).map_err(|e| scene_error(id, "form.bump", e))?;
            let axes = match &b.axes {
                Some(a) => {
                    let mut mask = vec![false; dim];
                    for &i in a {
                        mask[frame_index(i, dim, id)?] = true;
                    }
                    mask
                }
                None => vec![true; dim],
            };
            Some(Arc::new(Bump::new(center, radius, axes).map_err(|e| scene_error(id, "form.bump", e))?))
        }
        None => None,
    };
    let mut form = InvariantForm::zero(n, f.degree);
    for t in &f.terms {
        if t.indices.len() != f.degree {
            return Err(Error::DegreeMismatch { expected: f.degree, found: t.indices.len() });
        }
        let mut sorted = t.indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != t.indices.len() {
            return Err(Error::InvalidScene(format!("scene {id}: repeated index in {:?}", t.indices)));
        }
        let idx = MultiIndex::from_one_based(&sorted, dim).map_err(|e| scene_error(id, "form.terms", e))?;
        let p = Poly::parse(&t.coeff, coords).map_err(|e| scene_error(id, "form.terms", e))?;
        let c = match &bump {
            Some(b) => SmoothScalar::bumped(p, b.clone())?,
            None => SmoothScalar::from_poly(p),
        };
        let term = InvariantForm::basis(n, idx, c);
        let term = if inversions(&t.indices) % 2 == 1 { term.scale(&Rational::from_integer((-1).into())) } else { term };
        form = form.try_add(&term)?;
    }
    Ok(form)
}

/// The `expect_error` code of a scene file, read without building the scene.
pub fn expected_error_code(text: &str) -> Option<String> {
    let table: toml::Table = toml::from_str(text).ok()?;
    table.get("expect_error")?.as_str().map(str::to_string)
}

/// Builds a form from `(1-based indices, coefficient)` pairs written in scene syntax.
pub fn parse_form(n: usize, degree: usize, terms: &[(Vec<usize>, String)]) -> Result<InvariantForm> {
    if n == 0 {
        return Err(Error::InvalidScene("group dimension n must be positive".into()));
    }
    let section = FormSection {
        degree,
        terms: terms.iter().map(|(indices, coeff)| FormTerm { indices: indices.clone(), coeff: coeff.clone() }).collect(),
        bump: None,
    };
    build_form(&section, n, &coordinate_names(n), "command line")
}

fn inversions(v: &[usize]) -> usize {
    (0..v.len()).map(|i| (i + 1..v.len()).filter(|&j| v[j] < v[i]).count()).sum()
}
