//! Both sides of `∫_S d_cω = ∫_{∂S} ω`, routed through the currents API.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{InvariantForm, MultiVector};
use crate::group::{HomogeneousDistance, VerticalSplitting};
use crate::measure::{self, cnk_estimate, CnkBudget, CnkEstimate};
use crate::poly::Rational;
use crate::quadrature::{CurrentValue, QuadratureSpec};
use crate::rumin::RuminComplex;
use crate::submanifold::{LegendrianPatch, LevelSetPatch};

/// Residual traces may stop decreasing once they reach this floor.
pub const RESIDUAL_FLOOR: f64 = 1e-12;
/// A flipped boundary orientation must push the residual above this.
pub const FLIP_THRESHOLD: f64 = 1e-2;

/// Integration current `⟦S⟧` of an oriented patch (or a formal sum of them).
#[derive(Clone, Debug)]
pub enum Current {
    Graph(LevelSetPatch),
    Legendrian(LegendrianPatch),
    Chain(Vec<Current>),
}

impl Current {
    pub fn n(&self) -> usize {
        match self {
            Current::Graph(p) => p.n(),
            Current::Legendrian(c) => c.n(),
            Current::Chain(v) => v.first().map(Current::n).unwrap_or(1),
        }
    }

    /// `⟦S⟧(ω)`.
    pub fn evaluate(&self, omega: &InvariantForm, spec: &QuadratureSpec) -> Result<CurrentValue> {
        match self {
            Current::Graph(p) => measure::integrate_lowcodim_form(p, omega, spec),
            Current::Legendrian(c) => {
                let rc = RuminComplex::new(c.n())?;
                let class = rc.class_of(omega)?;
                measure::integrate_lowdim(c, &class, spec)
            }
            Current::Chain(parts) => {
                let mut acc = CurrentValue::exact(0.0, spec.levels);
                for p in parts {
                    acc = acc.combine(&p.evaluate(omega, spec)?, 1.0, 1.0);
                }
                Ok(acc)
            }
        }
    }

    /// `∂_c⟦S⟧`, acting by `ω ↦ ⟦S⟧(d_cω)`.
    pub fn boundary(&self) -> BoundaryCurrent<'_> {
        BoundaryCurrent(self)
    }
}

pub struct BoundaryCurrent<'a>(&'a Current);

impl BoundaryCurrent<'_> {
    pub fn evaluate(&self, omega: &InvariantForm, spec: &QuadratureSpec) -> Result<CurrentValue> {
        let rc = RuminComplex::new(self.0.n())?;
        let dc = rc.d_c_form(omega)?;
        self.0.evaluate(dc.representative(), spec)
    }
}

#[derive(Clone, Debug)]
pub enum ScenePatch {
    Legendrian(LegendrianPatch),
    LevelSet { patch: LevelSetPatch, boundary_curve: Option<LegendrianPatch> },
}

#[derive(Clone, Debug, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StokesRegime {
    LowDimension,
    Critical,
    LowCodimension,
}

#[derive(Clone, Debug)]
pub struct StokesScene {
    pub id: String,
    pub patch: ScenePatch,
    pub form: InvariantForm,
    pub spec: QuadratureSpec,
    pub tolerance: f64,
    /// `∫_{∂S}ω` is expected to vanish, so the flipped-orientation check is skipped.
    pub degenerate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StokesReport {
    pub id: String,
    pub regime: StokesRegime,
    pub lhs: CurrentValue,
    pub rhs: CurrentValue,
    pub residual: f64,
    pub residual_trace: Vec<f64>,
    pub flipped_residual: f64,
    pub trace_decreasing: bool,
    pub degenerate: bool,
    pub lies_above: Option<bool>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Non-increasing, allowing values already at the noise floor to wobble.
pub fn trace_decreasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] || w[1] <= RESIDUAL_FLOOR)
}

fn scene_err(id: &str, e: Error) -> Error {
    match e {
        Error::InvalidScene(m) => Error::InvalidScene(format!("scene {id}: {m}")),
        other => other,
    }
}

impl StokesScene {
    pub fn n(&self) -> usize {
        self.form.n()
    }

    pub fn regime(&self) -> StokesRegime {
        match &self.patch {
            ScenePatch::Legendrian(_) => StokesRegime::LowDimension,
            ScenePatch::LevelSet { patch, .. } if patch.codim() == patch.n() => StokesRegime::Critical,
            ScenePatch::LevelSet { .. } => StokesRegime::LowCodimension,
        }
    }

    fn patch_dim(&self) -> usize {
        match &self.patch {
            ScenePatch::Legendrian(c) => c.dim(),
            ScenePatch::LevelSet { patch, .. } => patch.dim(),
        }
    }

    /// Degree and support checks; support is sampled on the faces of the graph domain
    /// that are not cut away by the boundary function.
    pub fn validate(&self) -> Result<()> {
        let m = self.patch_dim();
        if self.form.degree() + 1 != m {
            return Err(Error::DegreeMismatch { expected: m - 1, found: self.form.degree() });
        }
        self.spec.validate()?;
        match &self.patch {
            ScenePatch::Legendrian(c) => c.require_valid(),
            ScenePatch::LevelSet { patch, boundary_curve } => {
                if patch.boundary_fn().is_none() {
                    return Err(Error::InvalidScene(format!("scene {}: Stokes patches need a boundary function", self.id)));
                }
                if patch.codim() == patch.n() {
                    let curve = boundary_curve.as_ref().ok_or_else(|| {
                        Error::InvalidScene(format!("scene {}: critical patches need a parametric boundary curve", self.id))
                    })?;
                    curve.require_valid()?;
                    patch.check_boundary_curve(curve).map_err(|e| scene_err(&self.id, e))?;
                } else {
                    let rc = RuminComplex::new(patch.n())?;
                    if !rc.j_membership(&self.form)? {
                        return Err(Error::NotInJ { degree: self.form.degree() });
                    }
                }
                check_support(patch, &self.form).map_err(|e| scene_err(&self.id, e))
            }
        }
    }

    /// `(⟦S⟧, ⟦∂S⟧)` with the induced boundary orientation.
    pub fn currents(&self) -> Result<(Current, Current, Option<bool>)> {
        match &self.patch {
            ScenePatch::Legendrian(c) => {
                let faces = c.faces()?.into_iter().map(Current::Legendrian).collect();
                Ok((Current::Legendrian(c.clone()), Current::Chain(faces), None))
            }
            ScenePatch::LevelSet { patch, boundary_curve } => {
                if patch.codim() < patch.n() {
                    return Ok((Current::Graph(patch.clone()), Current::Graph(patch.boundary_patch()?), None));
                }
                let curve = boundary_curve
                    .as_ref()
                    .ok_or_else(|| Error::InvalidScene("critical patch needs a boundary curve".into()))?;
                let above = patch.lies_above(curve)?;
                let sign = critical_curve_sign(patch, curve, above)?;
                Ok((Current::Graph(patch.clone()), Current::Legendrian(curve.with_orientation(sign * curve.orientation())), Some(above)))
            }
        }
    }
}

/// The sign relating the curve's parametrization to the induced `τ_{∂S}`.
fn critical_curve_sign(patch: &LevelSetPatch, curve: &LegendrianPatch, above: bool) -> Result<i32> {
    let n = patch.n();
    let mut sign = 0;
    for s in curve.sample_params(4) {
        let z = curve.point(&s);
        let tau = patch.critical_boundary_tau(&z, above)?;
        let mut w = MultiVector::<f64>::scalar(n, 1.0);
        for row in curve.tangents(&s) {
            w = w.wedge(&MultiVector::from_vector(n, &row[..2 * n]));
        }
        let d = w.dot(&tau);
        if d.abs() < 1e-12 {
            return Err(Error::DegenerateProjection(z));
        }
        let sg = if d > 0.0 { 1 } else { -1 };
        if sign != 0 && sg != sign {
            return Err(Error::AmbiguousOrientation("boundary curve turns against τ_∂S".into()));
        }
        sign = sg;
    }
    Ok(sign)
}

fn check_support(patch: &LevelSetPatch, form: &InvariantForm) -> Result<()> {
    let cf = form.compile();
    let wb = patch.w_box();
    let m = wb.dim();
    let per = 7usize;
    for a in 0..m {
        for face in [wb.lo[a], wb.hi[a]] {
            let others: Vec<usize> = (0..m).filter(|&i| i != a).collect();
            let count = per.pow(others.len() as u32);
            for mut c in 0..count {
                let mut xi = vec![0.0; m];
                xi[a] = face;
                for &o in &others {
                    let j = c % per;
                    c /= per;
                    xi[o] = wb.lo[o] + (wb.hi[o] - wb.lo[o]) * j as f64 / (per - 1) as f64;
                }
                let z = patch.graph_point(&xi)?;
                if patch.eval_boundary(&z).is_some_and(|b| b <= 0.0) {
                    continue;
                }
                if cf.eval(&z).iter().any(|(_, v)| v.abs() > 1e-10) {
                    return Err(Error::InvalidScene(format!("form support reaches the chart boundary at {z:?}")));
                }
            }
        }
    }
    Ok(())
}

/// `⟦S⟧(d_cω)` against `⟦∂S⟧(ω)`.
pub fn stokes_residual(scene: &StokesScene) -> Result<StokesReport> {
    scene.validate()?;
    let (s, ds, lies_above) = scene.currents()?;
    let lhs = s.boundary().evaluate(&scene.form, &scene.spec)?;
    let rhs = ds.evaluate(&scene.form, &scene.spec)?;
    Ok(report(scene, lhs, rhs, lies_above))
}

fn report(scene: &StokesScene, lhs: CurrentValue, rhs: CurrentValue, lies_above: Option<bool>) -> StokesReport {
    let residual = (lhs.value - rhs.value).abs();
    let residual_trace: Vec<f64> = lhs.trace.iter().zip(&rhs.trace).map(|(a, b)| (a - b).abs()).collect();
    let flipped_residual = (lhs.value + rhs.value).abs();
    let trace_ok = trace_decreasing(&residual_trace);
    let passed = residual < scene.tolerance && trace_ok && (scene.degenerate || flipped_residual > FLIP_THRESHOLD);
    StokesReport {
        id: scene.id.clone(),
        regime: scene.regime(),
        lhs,
        rhs,
        residual,
        residual_trace,
        flipped_residual,
        trace_decreasing: trace_ok,
        degenerate: scene.degenerate,
        lies_above,
        tolerance: scene.tolerance,
        passed,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryCurrentReport {
    pub id: String,
    pub boundary_of_current: CurrentValue,
    pub current_of_boundary: CurrentValue,
    pub difference: f64,
}

/// `∂_c⟦S⟧(ω)` and `⟦∂S⟧(ω)` side by side.
pub fn boundary_current_check(scene: &StokesScene) -> Result<BoundaryCurrentReport> {
    scene.validate()?;
    let (s, ds, _) = scene.currents()?;
    let a = s.boundary().evaluate(&scene.form, &scene.spec)?;
    let b = ds.evaluate(&scene.form, &scene.spec)?;
    let difference = (a.value - b.value).abs();
    Ok(BoundaryCurrentReport { id: scene.id.clone(), boundary_of_current: a, current_of_boundary: b, difference })
}

impl StokesScene {
    /// The same scene with the patch orientation reversed.
    pub fn flipped(&self) -> StokesScene {
        let patch = match &self.patch {
            ScenePatch::Legendrian(c) => ScenePatch::Legendrian(c.with_orientation(-c.orientation())),
            ScenePatch::LevelSet { patch, boundary_curve } => ScenePatch::LevelSet {
                patch: patch.with_orientation(-patch.orientation()),
                boundary_curve: boundary_curve.clone(),
            },
        };
        StokesScene { patch, ..self.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceExperiment {
    pub id: String,
    pub patch: LevelSetPatch,
    pub form: InvariantForm,
    /// Each `h` gives the level set `{f_1 = 1/h}`.
    pub shifts: Vec<u64>,
    pub spec: QuadratureSpec,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub h: u64,
    pub value: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub id: String,
    pub limit: CurrentValue,
    pub rows: Vec<ConvergenceRow>,
    /// Gap of the unshifted set against itself.
    pub unshifted_gap: f64,
    pub decreasing: bool,
    pub final_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `|⟦S_h⟧(ω) − ⟦S⟧(ω)|` along the shift sequence.
pub fn approx_convergence(exp: &ConvergenceExperiment) -> Result<ConvergenceReport> {
    if exp.shifts.contains(&0) {
        return Err(Error::InvalidScene(format!("experiment {}: shifts must be positive", exp.id)));
    }
    let k = exp.patch.codim();
    let limit = measure::integrate_lowcodim_form(&exp.patch, &exp.form, &exp.spec)?;
    let zero = vec![Rational::from_integer(0.into()); k];
    let again = measure::integrate_lowcodim_form(&exp.patch.shifted(&zero)?, &exp.form, &exp.spec)?;
    let unshifted_gap = (again.value - limit.value).abs();
    let mut rows = Vec::new();
    for &h in &exp.shifts {
        let mut c = zero.clone();
        c[0] = Rational::new(1.into(), (h as i64).into());
        let sh = exp.patch.shifted(&c)?;
        let v = measure::integrate_lowcodim_form(&sh, &exp.form, &exp.spec)?;
        rows.push(ConvergenceRow { h, value: v.value, gap: (v.value - limit.value).abs() });
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let decreasing = trace_decreasing(&gaps);
    let final_gap = gaps.last().copied().unwrap_or(0.0);
    let passed = decreasing && final_gap < exp.tolerance && unshifted_gap == 0.0;
    Ok(ConvergenceReport { id: exp.id.clone(), limit, rows, unshifted_gap, decreasing, final_gap, tolerance: exp.tolerance, passed })
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceRow {
    pub distance: &'static str,
    pub graph_value: f64,
    pub spherical_value: f64,
    pub normalized_value: f64,
    pub estimate: CnkEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub rows: Vec<DistanceRow>,
    /// Relative gap between the normalized spherical-path values.
    pub relative_gap: f64,
    pub graph_identical: bool,
    pub tolerance: f64,
    pub passed: bool,
}

/// Normalized spherical-path integrals under `d_∞` and the Korányi distance.
///
/// The spherical value uses the quadrature estimate of `C_{n,k}`; normalization
/// divides by the independent Monte Carlo estimate, so the comparison carries the
/// error of both estimates.
pub fn distance_independence(
    patch: &LevelSetPatch,
    form: &InvariantForm,
    spec: &QuadratureSpec,
    budget: &CnkBudget,
    tolerance: f64,
) -> Result<DistanceReport> {
    let splitting = VerticalSplitting::new(patch.n(), patch.splitting().v_indices().to_vec())?;
    let mut rows = Vec::new();
    for d in [HomogeneousDistance::Infinity, HomogeneousDistance::Koranyi] {
        let g = measure::integrate_lowcodim_form(patch, form, spec)?;
        let est = cnk_estimate(d, &splitting, budget)?;
        let spherical = measure::spherical_integral(&g, est.c).value;
        rows.push(DistanceRow {
            distance: d.name(),
            graph_value: g.value,
            spherical_value: spherical,
            normalized_value: spherical / est.c_mc,
            estimate: est,
        });
    }
    let (a, b) = (rows[0].normalized_value, rows[1].normalized_value);
    let relative_gap = (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    let graph_identical = rows[0].graph_value.to_bits() == rows[1].graph_value.to_bits();
    let passed = graph_identical && relative_gap < tolerance;
    Ok(DistanceReport { rows, relative_gap, graph_identical, tolerance, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::ChartBox;
    use crate::scalar::SmoothScalar;

    fn segment() -> LegendrianPatch {
        LegendrianPatch::new(
            1,
            vec![SmoothScalar::var(1, 0), SmoothScalar::zero(1), SmoothScalar::zero(1)],
            ChartBox::cube(1, 0.0, 1.0),
            1,
        )
        .unwrap()
    }

    fn segment_scene(form: InvariantForm) -> StokesScene {
        StokesScene {
            id: "segment".into(),
            patch: ScenePatch::Legendrian(segment()),
            form,
            spec: QuadratureSpec::new(4, 3).unwrap(),
            tolerance: 1e-6,
            degenerate: false,
        }
    }

    #[test]
    fn horizontal_segment() {
        let omega = InvariantForm::scalar(1, SmoothScalar::var(3, 0));
        let r = stokes_residual(&segment_scene(omega.clone())).unwrap();
        assert!((r.lhs.value - 1.0).abs() < 1e-15 && (r.rhs.value - 1.0).abs() < 1e-15);
        assert!(r.passed, "{r:?}");
        let f = stokes_residual(&segment_scene(omega).flipped()).unwrap();
        assert!((f.lhs.value + 1.0).abs() < 1e-15 && (f.rhs.value + 1.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_current_route_is_identical() {
        let omega = InvariantForm::scalar(1, SmoothScalar::var(3, 0));
        let scene = segment_scene(omega);
        let a = stokes_residual(&scene).unwrap();
        let b = boundary_current_check(&scene).unwrap();
        assert_eq!(a.lhs, b.boundary_of_current);
        assert_eq!(a.rhs, b.current_of_boundary);
        let z = boundary_current_check(&segment_scene(InvariantForm::zero(1, 0))).unwrap();
        assert_eq!((z.boundary_of_current.value, z.current_of_boundary.value), (0.0, 0.0));
    }

    #[test]
    fn degree_mismatch_is_rejected() {
        let scene = segment_scene(InvariantForm::coframe(1, 0));
        assert!(matches!(stokes_residual(&scene), Err(Error::DegreeMismatch { .. })));
    }

    #[test]
    fn decreasing_floor() {
        assert!(trace_decreasing(&[1e-3, 1e-6, 1e-13, 2e-13]));
        assert!(!trace_decreasing(&[1e-3, 1e-6, 1e-5]));
    }
}
