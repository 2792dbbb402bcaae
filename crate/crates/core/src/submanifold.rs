//! Chart descriptions of intrinsic submanifolds.
//!
//! A [`LevelSetPatch`] is `{f_1 = … = f_k = 0}` inside a chart box, optionally
//! cut down to `{f_{k+1} > 0}`. It is parametrized as an intrinsic graph
//! `Φ(ξ) = ξ·φ(ξ)` over the `W`-face of the chart, with `φ` found by per-point
//! root solves along `V`. A [`LegendrianPatch`] is a polynomial parametrization
//! tangent to the horizontal distribution.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{MultiIndex, MultiVector};
use crate::group::{HomogeneousDistance, Point, VerticalSplitting};
use crate::linalg::{self, det_f64, solve_f64, wedge_norm_f64};
use crate::poly::{rat, Poly, Rational};
use crate::quadrature::{integrate_1d, integrate_box_level, ChartBox};
use crate::scalar::{CompiledScalar, SmoothScalar};

/// Below this `|∇_H f_1∧…∧∇_H f_k|` a sample counts as characteristic.
pub const CHARACTERISTIC_THRESHOLD: f64 = 1e-8;
/// Residual target for graph root solves.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// `p·q` on float coordinates.
pub fn mul_f64(n: usize, p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut z: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + b).collect();
    let mut twist = 0.0;
    for j in 0..n {
        twist += p[j] * q[n + j] - q[j] * p[n + j];
    }
    z[2 * n] += 0.5 * twist;
    z
}

pub fn inverse_f64(p: &[f64]) -> Vec<f64> {
    p.iter().map(|c| -c).collect()
}

/// Frame components of a coordinate vector `w` attached at `z`.
pub fn frame_components(n: usize, z: &[f64], w: &[f64]) -> Vec<f64> {
    let mut a = w.to_vec();
    let mut c = w[2 * n];
    for j in 0..n {
        c += 0.5 * (z[n + j] * w[j] - z[j] * w[n + j]);
    }
    a[2 * n] = c;
    a
}

/// A scalar with its frame derivatives and coordinate partials, compiled.
#[derive(Clone, Debug)]
struct CompiledFn {
    value: CompiledScalar,
    frame: Vec<CompiledScalar>,
    partial: Vec<CompiledScalar>,
}

impl CompiledFn {
    fn new(s: &SmoothScalar) -> Self {
        let nv = s.nvars();
        CompiledFn {
            value: s.compile(),
            frame: (0..nv).map(|i| s.frame_derivative(i).compile()).collect(),
            partial: (0..nv).map(|i| s.partial(i).compile()).collect(),
        }
    }

    fn horizontal_gradient(&self, z: &[f64]) -> Vec<f64> {
        self.frame[..self.frame.len() - 1].iter().map(|d| d.eval(z)).collect()
    }
}

/// How the tangent multivector used for integration is formed.
#[derive(Clone, Debug, PartialEq)]
enum TangentRule {
    /// `t = *n^H_S`.
    Hodge,
    /// Boundary of a parent patch of codimension `k`: `t = ι_ν t_S`.
    BoundaryOf { parent_k: usize, parent_orientation: i32 },
}

#[derive(Clone, Debug)]
struct Collar {
    /// Index into the `W` coordinates along which the boundary is crossed.
    axis: usize,
}

#[derive(Clone, Debug)]
pub struct LevelSetPatch {
    n: usize,
    f: Vec<SmoothScalar>,
    boundary: Option<SmoothScalar>,
    chart: ChartBox,
    orientation: i32,
    splitting: VerticalSplitting,
    rule: TangentRule,
    fc: Vec<CompiledFn>,
    bc: Option<CompiledFn>,
    collar: Option<Collar>,
}

fn abelian(n: usize, v: &[usize]) -> bool {
    (0..n).all(|j| !(v.contains(&j) && v.contains(&(j + n))))
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    MultiIndex::all_of_degree(m, k).into_iter().map(|i| i.indices()).collect()
}

impl LevelSetPatch {
    /// `vertical` lists 0-based horizontal frame indices for `V`; chosen automatically when `None`.
    pub fn new(
        n: usize,
        f: Vec<SmoothScalar>,
        chart: ChartBox,
        orientation: i32,
        boundary: Option<SmoothScalar>,
        vertical: Option<Vec<usize>>,
    ) -> Result<Self> {
        let dim = 2 * n + 1;
        let k = f.len();
        if k == 0 || k > n {
            return Err(Error::InvalidScene(format!("level-set codimension must be in 1..={n}, got {k}")));
        }
        if chart.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: chart.dim() });
        }
        if orientation != 1 && orientation != -1 {
            return Err(Error::InvalidScene(format!("orientation must be ±1, got {orientation}")));
        }
        for s in f.iter().chain(boundary.iter()) {
            if s.nvars() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.nvars() });
            }
        }
        let fc: Vec<CompiledFn> = f.iter().map(CompiledFn::new).collect();
        let center = chart.center();
        let v = match vertical {
            Some(v) => v,
            None => {
                let grads: Vec<Vec<f64>> = fc.iter().map(|c| c.horizontal_gradient(&center)).collect();
                best_vertical(n, &grads, &[])?
            }
        };
        let splitting = VerticalSplitting::new(n, v)?;
        if splitting.codim() != k {
            return Err(Error::InvalidScene(format!(
                "vertical subgroup has dimension {}, expected {k}",
                splitting.codim()
            )));
        }
        let bc = boundary.as_ref().map(CompiledFn::new);
        let mut patch = LevelSetPatch {
            n,
            f,
            boundary,
            chart,
            orientation,
            splitting,
            rule: TangentRule::Hodge,
            fc,
            bc,
            collar: None,
        };
        if patch.bc.is_some() {
            patch.collar = Some(patch.choose_collar()?);
        }
        Ok(patch)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn codim(&self) -> usize {
        self.f.len()
    }

    /// Topological dimension `2n+1−k`.
    pub fn dim(&self) -> usize {
        2 * self.n + 1 - self.f.len()
    }

    pub fn functions(&self) -> &[SmoothScalar] {
        &self.f
    }

    pub fn boundary_fn(&self) -> Option<&SmoothScalar> {
        self.boundary.as_ref()
    }

    pub fn chart(&self) -> &ChartBox {
        &self.chart
    }

    pub fn orientation(&self) -> i32 {
        self.orientation
    }

    pub fn splitting(&self) -> &VerticalSplitting {
        &self.splitting
    }

    pub fn with_orientation(&self, orientation: i32) -> LevelSetPatch {
        let mut p = self.clone();
        p.orientation = orientation;
        if let TangentRule::BoundaryOf { parent_k, .. } = p.rule {
            p.rule = TangentRule::BoundaryOf { parent_k, parent_orientation: orientation };
        }
        p
    }

    /// The same level set without its boundary cut.
    pub fn without_boundary(&self) -> LevelSetPatch {
        let mut p = self.clone();
        p.boundary = None;
        p.bc = None;
        p.collar = None;
        p
    }

    /// Level set `{f_1 = c_1, …}` for a shift vector `c`.
    pub fn shifted(&self, c: &[Rational]) -> Result<LevelSetPatch> {
        let dim = 2 * self.n + 1;
        let f = self
            .f
            .iter()
            .zip(c)
            .map(|(fi, ci)| fi.try_sub(&SmoothScalar::constant(dim, ci.clone())))
            .collect::<Result<Vec<_>>>()?;
        let mut p = LevelSetPatch::new(
            self.n,
            f,
            self.chart.clone(),
            self.orientation,
            self.boundary.clone(),
            Some(self.splitting.v_indices().to_vec()),
        )?;
        p.rule = self.rule.clone();
        Ok(p)
    }

    /// The `W` face of the chart, the parameter domain of the graph map.
    pub fn w_box(&self) -> ChartBox {
        self.chart.select(&self.splitting.w_indices())
    }

    pub fn eval_f(&self, z: &[f64]) -> Vec<f64> {
        self.fc.iter().map(|c| c.value.eval(z)).collect()
    }

    pub fn eval_boundary(&self, z: &[f64]) -> Option<f64> {
        self.bc.as_ref().map(|c| c.value.eval(z))
    }

    /// `∇_H f_i(z)` as rows of frame components in `R^{2n}`.
    pub fn horizontal_gradients(&self, z: &[f64]) -> Vec<Vec<f64>> {
        self.fc.iter().map(|c| c.horizontal_gradient(z)).collect()
    }

    /// Euclidean gradients `∂f_i/∂z` (used only by the coordinate oracle).
    pub fn euclidean_gradients(&self, z: &[f64]) -> Vec<Vec<f64>> {
        self.fc.iter().map(|c| c.partial.iter().map(|d| d.eval(z)).collect()).collect()
    }

    fn w_full(&self, xi: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; 2 * self.n + 1];
        for (i, c) in self.splitting.w_indices().into_iter().zip(xi) {
            z[i] = *c;
        }
        z
    }

    fn compose_v(&self, xi_full: &[f64], v: &[f64]) -> Vec<f64> {
        let mut vf = vec![0.0; 2 * self.n + 1];
        for (&i, c) in self.splitting.v_indices().iter().zip(v) {
            vf[i] = *c;
        }
        mul_f64(self.n, xi_full, &vf)
    }

    fn residual(&self, z: &[f64]) -> f64 {
        self.eval_f(z).iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `Φ(ξ) = ξ·φ(ξ)`, by damped Newton along `V` with a bisection fallback.
    pub fn graph_point(&self, xi: &[f64]) -> Result<Vec<f64>> {
        Ok(self.graph_solve(xi)?.0)
    }

    /// Returns `(Φ(ξ), φ(ξ))`.
    pub fn graph_solve(&self, xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.codim();
        let vidx = self.splitting.v_indices().to_vec();
        let base = self.w_full(xi);
        let mut v = vec![0.0; k];
        let mut z = self.compose_v(&base, &v);
        let mut res = self.residual(&z);
        for _ in 0..60 {
            if res < ROOT_TOLERANCE {
                return Ok((z, v));
            }
            let fval = self.eval_f(&z);
            let jac: Vec<Vec<f64>> =
                self.fc.iter().map(|c| vidx.iter().map(|&j| c.frame[j].eval(&z)).collect()).collect();
            let rhs: Vec<f64> = fval.iter().map(|x| -x).collect();
            let Some(step) = solve_f64(&jac, &rhs) else { break };
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-6 {
                let cand: Vec<f64> = v.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
                let zc = self.compose_v(&base, &cand);
                let rc = self.residual(&zc);
                if rc < res || rc < ROOT_TOLERANCE {
                    v = cand;
                    z = zc;
                    res = rc;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if res < ROOT_TOLERANCE {
            return Ok((z, v));
        }
        if k == 1 {
            if let Some(out) = self.bisect_graph(&base) {
                return Ok(out);
            }
        }
        Err(Error::RootSolve(format!("no graph point over ξ={xi:?} (residual {res:e})")))
    }

    fn bisect_graph(&self, base: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let i = self.splitting.v_indices()[0];
        let span = self.chart.hi[i] - self.chart.lo[i];
        let (mut a, mut b) = (self.chart.lo[i] - span, self.chart.hi[i] + span);
        let g = |s: f64| self.eval_f(&self.compose_v(base, &[s]))[0];
        let (mut ga, gb) = (g(a), g(b));
        if ga * gb > 0.0 {
            return None;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let gm = g(m);
            if gm == 0.0 || (b - a) < 1e-15 {
                a = m;
                b = m;
                break;
            }
            if ga * gm < 0.0 {
                b = m;
            } else {
                a = m;
                ga = gm;
            }
        }
        let s = 0.5 * (a + b);
        let z = self.compose_v(base, &[s]);
        (self.residual(&z) < 1e-10).then_some((z, vec![s]))
    }

    fn wedge_norm(&self, grads: &[Vec<f64>], z: &[f64]) -> Result<f64> {
        let norm = wedge_norm_f64(grads);
        if norm < CHARACTERISTIC_THRESHOLD {
            return Err(Error::CharacteristicPoint { point: z.to_vec(), norm });
        }
        Ok(norm)
    }

    fn unit_normal(&self, grads: &[Vec<f64>], z: &[f64], orientation: i32) -> Result<MultiVector<f64>> {
        let norm = self.wedge_norm(grads, z)?;
        let mut w = MultiVector::<f64>::scalar(self.n, orientation as f64 / norm);
        for g in grads {
            w = w.wedge(&MultiVector::from_vector(self.n, g));
        }
        Ok(w)
    }

    /// `n^H_S = ±∇_H f_1∧…∧∇_H f_k / |…|`.
    pub fn horizontal_normal(&self, z: &[f64]) -> Result<MultiVector<f64>> {
        let grads = self.horizontal_gradients(z);
        self.unit_normal(&grads, z, self.orientation)
    }

    /// `(t^H_S, τ^H_S)` with `t = *n` and `τ∧T = t`.
    pub fn tangent_vector(&self, z: &[f64]) -> Result<(MultiVector<f64>, MultiVector<f64>)> {
        let t = self.horizontal_normal(z)?.hodge();
        let tau = t.split_t().ok_or_else(|| Error::Internal("tangent lacks a T factor".into()))?;
        Ok((t, tau))
    }

    /// Unnormalized oriented `∇_H f_1∧…∧∇_H f_k` at a rational point (polynomial `f` only).
    pub fn normal_wedge_exact(&self, p: &Point<Rational>) -> Result<MultiVector<Rational>> {
        let mut w = MultiVector::<Rational>::scalar(self.n, rat(self.orientation as i64, 1));
        for fi in &self.f {
            let g = (0..2 * self.n)
                .map(|j| fi.horizontal_derivative(j).eval_exact(p.coords()))
                .collect::<Result<Vec<_>>>()?;
            w = w.wedge(&MultiVector::from_vector(self.n, &g));
        }
        if w.is_zero() {
            return Err(Error::CharacteristicPoint { point: p.to_f64().into_coords(), norm: 0.0 });
        }
        Ok(w)
    }

    /// Basis (frame components) of `ker d_H f_p ⊕ span{T}` at a rational point.
    pub fn tangent_group_exact(&self, p: &Point<Rational>) -> Result<Vec<Vec<Rational>>> {
        let n = self.n;
        let jac: Vec<Vec<Rational>> = self
            .f
            .iter()
            .map(|fi| (0..2 * n).map(|j| fi.horizontal_derivative(j).eval_exact(p.coords())).collect())
            .collect::<Result<_>>()?;
        if linalg::rank(&jac) < self.codim() {
            return Err(Error::CharacteristicPoint { point: p.to_f64().into_coords(), norm: 0.0 });
        }
        let mut basis: Vec<Vec<Rational>> = linalg::nullspace(&jac, 2 * n)
            .into_iter()
            .map(|mut v| {
                v.push(rat(0, 1));
                v
            })
            .collect();
        let mut t = vec![rat(0, 1); 2 * n + 1];
        t[2 * n] = rat(1, 1);
        basis.push(t);
        Ok(basis)
    }

    /// Orthogonal projector of `R^{2n}` onto span of the horizontal gradients.
    fn gradient_projector(grads: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
        let k = grads.len();
        let d = grads[0].len();
        let gram: Vec<Vec<f64>> = grads
            .iter()
            .map(|a| grads.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
            .collect();
        let mut p = vec![vec![0.0; d]; d];
        // P = Gᵀ (G Gᵀ)^{-1} G, column by column
        for c in 0..d {
            let rhs: Vec<f64> = (0..k).map(|i| grads[i][c]).collect();
            let y = solve_f64(&gram, &rhs)?;
            for r in 0..d {
                p[r][c] = (0..k).map(|i| grads[i][r] * y[i]).sum();
            }
        }
        Some(p)
    }

    /// `d(q, p·T^H_p S)`: the horizontal part of `p⁻¹q` projected onto the gradients.
    pub fn tangent_coset_distance(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        let grads = self.horizontal_gradients(p);
        self.wedge_norm(&grads, p)?;
        let proj = Self::gradient_projector(&grads).ok_or_else(|| Error::Internal("singular Gram".into()))?;
        let z = mul_f64(self.n, &inverse_f64(p), q);
        let h = &z[..2 * self.n];
        let v: Vec<f64> = proj.iter().map(|row| row.iter().zip(h).map(|(a, b)| a * b).sum()).collect();
        Ok(v.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    /// Samples `q ∈ S` at each radius and reports `max d(q, p·T^H_pS)/d(p,q)`.
    pub fn blow_up_check(&self, p: &[f64], radii: &[f64], d: HomogeneousDistance) -> Result<BlowUpReport> {
        let grads = self.horizontal_gradients(p);
        self.wedge_norm(&grads, p)?;
        if self.residual(p) > 1e-9 {
            return Err(Error::InvalidScene(format!("blow-up centre {p:?} is not on the patch")));
        }
        let widx = self.splitting.w_indices();
        let (xi_p, _) = self.splitting.split(&Point::new(self.n, p.to_vec())?)?;
        let xi_p: Vec<f64> = widx.iter().map(|&i| xi_p.coords()[i]).collect();
        let m = widx.len();
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for a in 0..m {
            for s in [-1.0, 1.0] {
                let mut u = vec![0.0; m];
                u[a] = s;
                dirs.push(u);
            }
        }
        for a in 0..m {
            for b in a + 1..m {
                for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut u = vec![0.0; m];
                    u[a] = sa * std::f64::consts::FRAC_1_SQRT_2;
                    u[b] = sb * std::f64::consts::FRAC_1_SQRT_2;
                    dirs.push(u);
                }
            }
        }
        let xi_full = self.w_full(&xi_p);
        let mut ratios = Vec::new();
        for &r in radii {
            let mut worst: f64 = 0.0;
            for u in &dirs {
                let mut du = vec![0.0; 2 * self.n + 1];
                for (&i, c) in widx.iter().zip(u) {
                    du[i] = if i == 2 * self.n { r * r * c } else { r * c };
                }
                let xi_q_full = mul_f64(self.n, &xi_full, &du);
                let xi_q: Vec<f64> = widx.iter().map(|&i| xi_q_full[i]).collect();
                let q = self.graph_point(&xi_q)?;
                let dist = d.distance(&Point::new(self.n, p.to_vec())?, &Point::new(self.n, q.clone())?)?;
                if dist > 0.0 {
                    worst = worst.max(self.tangent_coset_distance(p, &q)? / dist);
                }
            }
            ratios.push(worst);
        }
        Ok(BlowUpReport { radii: radii.to_vec(), ratios })
    }

    /// Unit outward normal `ν = −P ∇_H f_{k+1}/|P ∇_H f_{k+1}|`, `P` projecting off the `∇_H f_i`.
    pub fn outward_normal(&self, z: &[f64]) -> Result<MultiVector<f64>> {
        let g = self.outward_normal_components(z)?;
        Ok(MultiVector::from_vector(self.n, &g))
    }

    fn outward_normal_components(&self, z: &[f64]) -> Result<Vec<f64>> {
        let bc = self.bc.as_ref().ok_or_else(|| Error::InvalidScene("patch has no boundary".into()))?;
        let grads = self.horizontal_gradients(z);
        let proj = Self::gradient_projector(&grads).ok_or_else(|| Error::Internal("singular Gram".into()))?;
        let gb = bc.horizontal_gradient(z);
        let pg: Vec<f64> = (0..gb.len())
            .map(|r| gb[r] - proj[r].iter().zip(&gb).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let norm = pg.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < CHARACTERISTIC_THRESHOLD {
            return Err(Error::DegenerateProjection(z.to_vec()));
        }
        Ok(pg.iter().map(|c| -c / norm).collect())
    }

    /// Induced tangent `t^H_{∂S} = ι_ν t^H_S`, so that `ν∧t^H_{∂S} = t^H_S`.
    pub fn boundary_tangent(&self, z: &[f64]) -> Result<MultiVector<f64>> {
        if self.codim() >= self.n {
            return Err(Error::InvalidScene("outward normals need codimension below n".into()));
        }
        let nu = self.outward_normal(z)?;
        let (t, _) = self.tangent_vector(z)?;
        Ok(t.interior(&nu))
    }

    /// Exact unnormalized `(ν̃, ι_ν̃ t̃_S)` at a rational point, polynomial data only.
    pub fn boundary_tangent_exact(&self, p: &Point<Rational>) -> Result<(MultiVector<Rational>, MultiVector<Rational>)> {
        let n = self.n;
        let b = self.boundary.as_ref().ok_or_else(|| Error::InvalidScene("patch has no boundary".into()))?;
        let grad = |s: &SmoothScalar| -> Result<Vec<Rational>> {
            (0..2 * n).map(|j| s.horizontal_derivative(j).eval_exact(p.coords())).collect()
        };
        let grads: Vec<Vec<Rational>> = self.f.iter().map(grad).collect::<Result<_>>()?;
        let gt = linalg::transpose(&grads);
        let proj = linalg::complement_projector(&gt, 2 * n);
        let nu: Vec<Rational> = linalg::mat_vec(&proj, &grad(b)?).into_iter().map(|c| -c).collect();
        if linalg::is_zero_vec(&nu) {
            return Err(Error::DegenerateProjection(p.to_f64().into_coords()));
        }
        let nu = MultiVector::from_vector(n, &nu);
        let t = self.normal_wedge_exact(p)?.hodge();
        let tb = t.interior(&nu);
        Ok((nu, tb))
    }

    /// The boundary `{f = 0, f_{k+1} = 0}` as a patch of codimension `k+1`.
    pub fn boundary_patch(&self) -> Result<LevelSetPatch> {
        let n = self.n;
        let k = self.codim();
        let b = self.boundary.clone().ok_or_else(|| Error::InvalidScene("patch has no boundary".into()))?;
        if k + 1 > n {
            return Err(Error::InvalidScene("critical-codimension boundaries must be given parametrically".into()));
        }
        let mut f = self.f.clone();
        f.push(b);
        let center = self.chart.center();
        let fc: Vec<CompiledFn> = f.iter().map(CompiledFn::new).collect();
        let grads: Vec<Vec<f64>> = fc.iter().map(|c| c.horizontal_gradient(&center)).collect();
        let v = best_vertical(n, &grads, self.splitting.v_indices())?;
        let mut p = LevelSetPatch::new(n, f, self.chart.clone(), self.orientation, None, Some(v))?;
        p.rule = TangentRule::BoundaryOf { parent_k: k, parent_orientation: self.orientation };
        Ok(p)
    }

    /// The tangent multivector paired with forms when integrating over this patch.
    pub fn integration_tangent(&self, z: &[f64]) -> Result<(MultiVector<f64>, f64)> {
        let grads = self.horizontal_gradients(z);
        let norm = self.wedge_norm(&grads, z)?;
        let t = match self.rule {
            TangentRule::Hodge => self.unit_normal(&grads, z, self.orientation)?.hodge(),
            TangentRule::BoundaryOf { parent_k, parent_orientation } => {
                let parent = &grads[..parent_k];
                let t_s = self.unit_normal(parent, z, parent_orientation)?.hodge();
                let proj = Self::gradient_projector(parent).ok_or_else(|| Error::Internal("singular Gram".into()))?;
                let gb = &grads[parent_k];
                let pg: Vec<f64> = (0..gb.len())
                    .map(|r| gb[r] - proj[r].iter().zip(gb).map(|(a, b)| a * b).sum::<f64>())
                    .collect();
                let pn = pg.iter().map(|c| c * c).sum::<f64>().sqrt();
                if pn < CHARACTERISTIC_THRESHOLD {
                    return Err(Error::DegenerateProjection(z.to_vec()));
                }
                let nu: Vec<f64> = pg.iter().map(|c| -c / pn).collect();
                t_s.interior(&MultiVector::from_vector(self.n, &nu))
            }
        };
        Ok((t, norm))
    }

    /// Signed covector rows (frame components, built from Euclidean partials) whose
    /// wedge orients the patch: a tangent frame `e` is positive iff `det[rows; e] > 0`.
    pub fn orientation_rows(&self, z: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut rows: Vec<Vec<f64>> = self
            .euclidean_gradients(z)
            .into_iter()
            .map(|g| {
                let mut r = g.clone();
                for j in 0..n {
                    r[j] = g[j] - 0.5 * z[n + j] * g[2 * n];
                    r[n + j] = g[n + j] + 0.5 * z[j] * g[2 * n];
                }
                r
            })
            .collect();
        match self.rule {
            TangentRule::Hodge => {
                let o = self.orientation as f64;
                rows[0].iter_mut().for_each(|c| *c *= o);
            }
            TangentRule::BoundaryOf { parent_k, parent_orientation } => {
                let o = parent_orientation as f64;
                rows[0].iter_mut().for_each(|c| *c *= o);
                // outward direction decreases the cutting function
                rows[parent_k].iter_mut().for_each(|c| *c = -*c);
            }
        }
        rows
    }

    /// `Δ = |det[v_j f_i]|` over the `V` directions.
    pub fn delta(&self, z: &[f64]) -> f64 {
        let vidx = self.splitting.v_indices();
        let jac: Vec<Vec<f64>> =
            self.fc.iter().map(|c| vidx.iter().map(|&j| c.frame[j].eval(z)).collect()).collect();
        det_f64(&jac).abs()
    }

    /// Area density `|∇_H f_1∧…∧∇_H f_k| / Δ` at `Φ(ξ)`.
    pub fn area_factor(&self, xi: &[f64]) -> Result<f64> {
        let z = self.graph_point(xi)?;
        self.area_factor_at(&z)
    }

    pub fn area_factor_at(&self, z: &[f64]) -> Result<f64> {
        let grads = self.horizontal_gradients(z);
        let norm = self.wedge_norm(&grads, z)?;
        let delta = self.delta(z);
        if delta < CHARACTERISTIC_THRESHOLD {
            return Err(Error::CharacteristicPoint { point: z.to_vec(), norm: delta });
        }
        Ok(norm / delta)
    }

    fn boundary_along(&self, xi: &mut [f64], axis: usize, s: f64) -> Result<f64> {
        xi[axis] = s;
        let z = self.graph_point(xi)?;
        Ok(self.eval_boundary(&z).unwrap())
    }

    fn choose_collar(&self) -> Result<Collar> {
        let wb = self.w_box();
        let c = wb.center();
        let mut best = (0usize, -1.0f64);
        for a in 0..wb.dim() {
            let h = 1e-4 * (wb.hi[a] - wb.lo[a]);
            let mut xi = c.clone();
            let gp = self.boundary_along(&mut xi, a, c[a] + h)?;
            let gm = self.boundary_along(&mut xi, a, c[a] - h)?;
            let slope = ((gp - gm) / (2.0 * h)).abs();
            if slope > best.1 {
                best = (a, slope);
            }
        }
        if best.1 < CHARACTERISTIC_THRESHOLD {
            return Err(Error::DegenerateProjection(c));
        }
        Ok(Collar { axis: best.0 })
    }

    /// Root of the boundary function along the collar axis, by the Illinois method.
    fn collar_root(&self, xi: &mut [f64], axis: usize, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> Result<f64> {
        let mut side = 0;
        for _ in 0..200 {
            let c = (a * gb - b * ga) / (gb - ga);
            let gc = self.boundary_along(xi, axis, c)?;
            if gc == 0.0 || (b - a).abs() < 1e-15 {
                return Ok(c);
            }
            if gc * gb > 0.0 {
                b = c;
                gb = gc;
                if side == -1 {
                    ga *= 0.5;
                }
                side = -1;
            } else {
                a = c;
                ga = gc;
                if side == 1 {
                    gb *= 0.5;
                }
                side = 1;
            }
            if gc.abs() < 1e-15 {
                return Ok(c);
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Integrates `g(ξ)` over the graph domain (the `W` box, cut to `{f_{k+1}∘Φ > 0}` if present).
    pub fn integrate_domain<F>(&self, order: usize, level: usize, g: &F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let wb = self.w_box();
        let Some(collar) = &self.collar else {
            return integrate_box_level(&wb, order, level, g);
        };
        let a = collar.axis;
        let rest_axes: Vec<usize> = (0..wb.dim()).filter(|&i| i != a).collect();
        let rest_box = wb.select(&rest_axes);
        let outer = |rest: &[f64]| -> Result<f64> {
            let mut xi = vec![0.0; wb.dim()];
            for (&i, c) in rest_axes.iter().zip(rest) {
                xi[i] = *c;
            }
            let (lo, hi) = (wb.lo[a], wb.hi[a]);
            let glo = self.boundary_along(&mut xi, a, lo)?;
            let ghi = self.boundary_along(&mut xi, a, hi)?;
            let (s0, s1) = match (glo > 0.0, ghi > 0.0) {
                (true, true) => (lo, hi),
                (false, false) => return Ok(0.0),
                (false, true) => (self.collar_root(&mut xi, a, lo, hi, glo, ghi)?, hi),
                (true, false) => (lo, self.collar_root(&mut xi, a, lo, hi, glo, ghi)?),
            };
            integrate_1d(s0, s1, order, level, |s| {
                let mut xi_inner = xi.clone();
                xi_inner[a] = s;
                g(&xi_inner)
            })
        };
        integrate_box_level(&rest_box, order, level, &outer)
    }

    /// Points `γ(s)` of a boundary curve must lie on `{f = 0, f_{k+1} = 0}`.
    pub fn check_boundary_curve(&self, curve: &LegendrianPatch) -> Result<()> {
        let b = self.bc.as_ref().ok_or_else(|| Error::InvalidScene("critical patch needs a boundary function".into()))?;
        for s in curve.sample_params(5) {
            let z = curve.point(&s);
            let r = self.residual(&z).max(b.value.eval(&z).abs());
            if r > 1e-9 {
                return Err(Error::InvalidScene(format!("boundary curve leaves the patch boundary at {z:?}")));
            }
        }
        Ok(())
    }

    /// Whether the patch lies above (`t` larger) its boundary curve, sampled along the curve.
    pub fn lies_above(&self, curve: &LegendrianPatch) -> Result<bool> {
        let bc = self.bc.as_ref().ok_or_else(|| Error::InvalidScene("critical patch needs a boundary function".into()))?;
        let n = self.n;
        let mut votes = (0usize, 0usize);
        for s in curve.sample_params(5) {
            let b = curve.point(&s);
            for delta in [1e-2, 1e-3, 1e-4] {
                let mut side = [0.0f64; 2];
                for (slot, sign) in [(0usize, 1.0), (1, -1.0)] {
                    let mut lift = vec![0.0; 2 * n + 1];
                    lift[2 * n] = sign * delta;
                    let moved = mul_f64(n, &b, &lift);
                    let (w, _) = self.splitting.split(&Point::new(n, moved)?)?;
                    let xi: Vec<f64> = self.splitting.w_indices().iter().map(|&i| w.coords()[i]).collect();
                    let q = self.graph_point(&xi)?;
                    side[slot] = bc.value.eval(&q);
                }
                if side.iter().any(|v| v.abs() < 1e-6 * delta) {
                    continue;
                }
                match (side[0] > 0.0, side[1] > 0.0) {
                    (true, false) => votes.0 += 1,
                    (false, true) => votes.1 += 1,
                    _ => {
                        return Err(Error::AmbiguousOrientation(format!(
                            "both vertical translates of {b:?} fall on the same side"
                        )))
                    }
                }
            }
        }
        match votes {
            (a, 0) if a > 0 => Ok(true),
            (0, b) if b > 0 => Ok(false),
            (0, 0) => Err(Error::AmbiguousOrientation("no informative samples".into())),
            _ => Err(Error::AmbiguousOrientation("samples on both sides of the boundary".into())),
        }
    }

    /// `τ_{∂S}` at a boundary point from `∓T∧τ_{∂S} = t_S` (upper sign when the patch lies above).
    pub fn critical_boundary_tau(&self, z: &[f64], lies_above: bool) -> Result<MultiVector<f64>> {
        let (_, tau) = self.tangent_vector(z)?;
        let n = self.n;
        // T∧τ = (−1)^n τ∧T
        let sigma = if lies_above { -1.0 } else { 1.0 };
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        Ok(tau.scale(&(sigma * parity)))
    }

    /// Induced boundary orientation data at a sample boundary point.
    pub fn induced_boundary_orientation(&self, curve: Option<&LegendrianPatch>) -> Result<BoundaryOrientation> {
        if self.codim() < self.n {
            let bp = self.boundary_patch()?;
            let wb = bp.w_box();
            let z = bp.graph_point(&wb.center())?;
            Ok(BoundaryOrientation::Outward { point: z.clone(), nu: self.outward_normal(&z)?, tangent: bp.integration_tangent(&z)?.0 })
        } else {
            let curve = curve.ok_or_else(|| Error::InvalidScene("critical patch needs a boundary curve".into()))?;
            self.check_boundary_curve(curve)?;
            let above = self.lies_above(curve)?;
            let z = curve.point(&curve.param_box().center());
            Ok(BoundaryOrientation::Critical { point: z.clone(), lies_above: above, tau: self.critical_boundary_tau(&z, above)? })
        }
    }
}

/// Picks an abelian set of `k` horizontal directions maximizing `|det|` of the gradient columns.
fn best_vertical(n: usize, grads: &[Vec<f64>], must_contain: &[usize]) -> Result<Vec<usize>> {
    let k = grads.len();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for v in subsets(2 * n, k) {
        if !abelian(n, &v) || !must_contain.iter().all(|c| v.contains(c)) {
            continue;
        }
        let m: Vec<Vec<f64>> = grads.iter().map(|g| v.iter().map(|&j| g[j]).collect()).collect();
        let d = det_f64(&m).abs();
        if best.as_ref().is_none_or(|(_, b)| d > *b) {
            best = Some((v, d));
        }
    }
    match best {
        Some((v, d)) if d > CHARACTERISTIC_THRESHOLD => Ok(v),
        _ => Err(Error::CharacteristicPoint {
            point: vec![],
            norm: best.map(|b| b.1).unwrap_or(0.0),
        }),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowUpReport {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl BlowUpReport {
    /// Non-increasing as the radius shrinks, up to `slack` of absolute noise.
    pub fn decreasing(&self, slack: f64) -> bool {
        self.ratios.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryOrientation {
    Outward { point: Vec<f64>, nu: MultiVector<f64>, tangent: MultiVector<f64> },
    Critical { point: Vec<f64>, lies_above: bool, tau: MultiVector<f64> },
}

/// `γ: box ⊂ R^m → H^n`, polynomial in the parameters.
#[derive(Clone, Debug)]
pub struct LegendrianPatch {
    n: usize,
    gamma: Vec<SmoothScalar>,
    param: ChartBox,
    orientation: i32,
    gc: Vec<CompiledScalar>,
    dgc: Vec<Vec<CompiledScalar>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LegendrianReport {
    pub valid: bool,
    /// Parameter directions whose `θ(∂_iγ)` does not vanish.
    pub offending: Vec<usize>,
    pub pullbacks: Vec<String>,
}

impl LegendrianPatch {
    pub fn new(n: usize, gamma: Vec<SmoothScalar>, param: ChartBox, orientation: i32) -> Result<Self> {
        let m = param.dim();
        if gamma.len() != 2 * n + 1 {
            return Err(Error::DimensionMismatch { expected: 2 * n + 1, found: gamma.len() });
        }
        if m > n {
            return Err(Error::InvalidScene(format!("Legendrian patches have dimension <= {n}, got {m}")));
        }
        if orientation != 1 && orientation != -1 {
            return Err(Error::InvalidScene(format!("orientation must be ±1, got {orientation}")));
        }
        for g in &gamma {
            if g.nvars() != m {
                return Err(Error::DimensionMismatch { expected: m, found: g.nvars() });
            }
        }
        let gc = gamma.iter().map(|g| g.compile()).collect();
        let dgc = (0..m).map(|i| gamma.iter().map(|g| g.partial(i).compile()).collect()).collect();
        Ok(LegendrianPatch { n, gamma, param, orientation, gc, dgc })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.param.dim()
    }

    pub fn param_box(&self) -> &ChartBox {
        &self.param
    }

    pub fn orientation(&self) -> i32 {
        self.orientation
    }

    pub fn components(&self) -> &[SmoothScalar] {
        &self.gamma
    }

    pub fn with_orientation(&self, orientation: i32) -> LegendrianPatch {
        LegendrianPatch { orientation, ..self.clone() }
    }

    pub fn point(&self, s: &[f64]) -> Vec<f64> {
        self.gc.iter().map(|g| g.eval(s)).collect()
    }

    /// Frame components of `∂_iγ(s)`, one row per parameter.
    pub fn tangents(&self, s: &[f64]) -> Vec<Vec<f64>> {
        let z = self.point(s);
        self.dgc
            .iter()
            .map(|row| {
                let w: Vec<f64> = row.iter().map(|d| d.eval(s)).collect();
                frame_components(self.n, &z, &w)
            })
            .collect()
    }

    /// `θ(∂_iγ) = ∂_iγ_t + ½Σ(γ_{y_j}∂_iγ_{x_j} − γ_{x_j}∂_iγ_{y_j})`, exactly.
    pub fn theta_pullback(&self) -> Result<Vec<Poly>> {
        let n = self.n;
        let polys: Vec<&Poly> = self
            .gamma
            .iter()
            .map(|g| g.as_poly().ok_or_else(|| Error::InvalidScene("Legendrian components must be polynomials".into())))
            .collect::<Result<_>>()?;
        Ok((0..self.dim())
            .map(|i| {
                let mut acc = polys[2 * n].partial(i);
                for j in 0..n {
                    let a = polys[n + j] * &polys[j].partial(i);
                    let b = polys[j] * &polys[n + j].partial(i);
                    acc = &acc + &(&a - &b).scale(&rat(1, 2));
                }
                acc
            })
            .collect())
    }

    pub fn validate(&self) -> Result<LegendrianReport> {
        let pulls = self.theta_pullback()?;
        let offending: Vec<usize> = pulls.iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(i, _)| i).collect();
        let mut valid = offending.is_empty();
        if valid {
            for s in self.sample_params(4) {
                if wedge_norm_f64(&self.tangents(&s)) < CHARACTERISTIC_THRESHOLD {
                    valid = false;
                }
            }
        }
        Ok(LegendrianReport { valid, offending, pullbacks: pulls.iter().map(|p| p.to_string()).collect() })
    }

    pub fn require_valid(&self) -> Result<()> {
        let r = self.validate()?;
        if !r.valid {
            return Err(Error::NonLegendrian(if r.offending.is_empty() {
                "tangent vectors degenerate".into()
            } else {
                format!("θ(∂γ) = {:?} in directions {:?}", r.pullbacks, r.offending)
            }));
        }
        Ok(())
    }

    /// Tensor grid of parameter samples (`per_axis` per axis, interior points).
    pub fn sample_params(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let m = self.dim();
        let mut out = vec![vec![]];
        for a in 0..m {
            let mut next = Vec::new();
            for base in &out {
                for i in 0..per_axis {
                    let s = self.param.lo[a] + (self.param.hi[a] - self.param.lo[a]) * (i as f64 + 0.5) / per_axis as f64;
                    let mut v: Vec<f64> = base.clone();
                    v.push(s);
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    /// Oriented boundary faces of the parameter box.
    pub fn faces(&self) -> Result<Vec<LegendrianPatch>> {
        let m = self.dim();
        if m == 0 {
            return Ok(vec![]);
        }
        let mut out = Vec::new();
        for i in 0..m {
            for (value, hi_face) in [(self.param.lo[i], false), (self.param.hi[i], true)] {
                let c = Rational::from_float(value)
                    .ok_or_else(|| Error::InvalidScene(format!("non-finite parameter bound {value}")))?;
                let args: Vec<Poly> = (0..m)
                    .map(|j| match j.cmp(&i) {
                        std::cmp::Ordering::Equal => Poly::constant(m - 1, c.clone()),
                        std::cmp::Ordering::Less => Poly::var(m - 1, j),
                        std::cmp::Ordering::Greater => Poly::var(m - 1, j - 1),
                    })
                    .collect();
                let gamma = self.gamma.iter().map(|g| g.compose(&args)).collect();
                let rest: Vec<usize> = (0..m).filter(|&j| j != i).collect();
                let parity = if i % 2 == 0 { 1 } else { -1 };
                let sign = if hi_face { parity } else { -parity };
                let face = LegendrianPatch::new(self.n, gamma, self.param.select(&rest), sign * self.orientation)?;
                out.push(face);
            }
        }
        Ok(out)
    }

    /// Integrates `g(s)` over the parameter box.
    pub fn integrate_params<F>(&self, order: usize, level: usize, g: &F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        integrate_box_level(&self.param, order, level, g)
    }
}

/// Maximum of `f` over sample points, evaluated in parallel.
pub fn par_max<F>(points: &[Vec<f64>], f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let vals: Vec<Result<f64>> = points.par_iter().map(|p| f(p)).collect();
    let mut m = f64::NEG_INFINITY;
    for v in vals {
        m = m.max(v?);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(n: usize, i: usize) -> SmoothScalar {
        SmoothScalar::var(2 * n + 1, i)
    }

    fn cube(n: usize) -> ChartBox {
        ChartBox::cube(2 * n + 1, -1.0, 1.0)
    }

    fn patch(n: usize, f: Vec<SmoothScalar>, boundary: Option<SmoothScalar>) -> LevelSetPatch {
        LevelSetPatch::new(n, f, cube(n), 1, boundary, None).unwrap()
    }

    fn close(a: &MultiVector<f64>, b: &MultiVector<f64>) -> bool {
        a.max_abs_diff(b) < 1e-14
    }

    #[test]
    fn normal_examples() {
        let s = patch(1, vec![var(1, 0)], None);
        assert!(close(&s.horizontal_normal(&[0.0, 0.3, -0.2]).unwrap(), &MultiVector::basis(1, &[0])));
        let x_minus_y = var(1, 0).try_sub(&var(1, 1)).unwrap();
        let s = patch(1, vec![x_minus_y], None);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expect = MultiVector::from_vector(1, &[r, -r]);
        assert!(close(&s.horizontal_normal(&[0.1, 0.1, 0.5]).unwrap(), &expect));
        let s = patch(2, vec![var(2, 0), var(2, 1)], None);
        assert!(close(&s.horizontal_normal(&[0.0; 5]).unwrap(), &MultiVector::basis(2, &[0, 1])));
    }

    #[test]
    fn tangent_examples() {
        let s = patch(1, vec![var(1, 0)], None);
        let (t, tau) = s.tangent_vector(&[0.0, 0.0, 0.0]).unwrap();
        assert!(close(&t, &MultiVector::basis(1, &[1, 2])));
        assert!(close(&tau, &MultiVector::basis(1, &[1])));
        let s = patch(2, vec![var(2, 0)], None);
        let (t, _) = s.tangent_vector(&[0.0; 5]).unwrap();
        assert!(close(&t, &MultiVector::basis(2, &[1, 2, 3, 4])));
        assert!((t.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tangent_group_examples() {
        let s = patch(1, vec![var(1, 0)], None);
        let b = s.tangent_group_exact(&Point::identity(1)).unwrap();
        assert_eq!(b, vec![vec![rat(0, 1), rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(0, 1), rat(1, 1)]]);
        let s = patch(2, vec![var(2, 0), var(2, 1)], None);
        let b = s.tangent_group_exact(&Point::identity(2)).unwrap();
        assert_eq!(b.len(), 3);
        for v in &b {
            assert_eq!((v[0].clone(), v[1].clone()), (rat(0, 1), rat(0, 1)));
        }
    }

    #[test]
    fn characteristic_point_is_rejected() {
        let s = LevelSetPatch::new(1, vec![var(1, 2)], cube(1), 1, None, Some(vec![0]));
        let s = s.unwrap();
        assert!(matches!(s.horizontal_normal(&[0.0, 0.0, 0.0]), Err(Error::CharacteristicPoint { .. })));
        assert!(s.blow_up_check(&[0.0, 0.0, 0.0], &[0.1], HomogeneousDistance::Koranyi).is_err());
    }

    #[test]
    fn graph_solves() {
        let f = var(1, 0).try_sub(&var(1, 2)).unwrap();
        let s = patch(1, vec![f], None);
        for xi in [[0.3, -0.4], [-0.9, 0.9], [0.0, 0.0]] {
            let z = s.graph_point(&xi).unwrap();
            assert!(s.eval_f(&z)[0].abs() < ROOT_TOLERANCE);
        }
    }

    #[test]
    fn area_factor_examples() {
        let s = LevelSetPatch::new(1, vec![var(1, 0)], cube(1), 1, None, Some(vec![0])).unwrap();
        assert!((s.area_factor(&[0.2, 0.7]).unwrap() - 1.0).abs() < 1e-15);
        let f = var(1, 0).try_sub(&var(1, 1)).unwrap();
        let s = LevelSetPatch::new(1, vec![f], cube(1), 1, None, Some(vec![0])).unwrap();
        assert!((s.area_factor(&[0.2, 0.7]).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn blow_up_examples() {
        let s = patch(1, vec![var(1, 0)], None);
        let r = s.blow_up_check(&[0.0, 0.0, 0.0], &[0.5, 0.1, 0.01], HomogeneousDistance::Koranyi).unwrap();
        assert!(r.ratios.iter().all(|&x| x < 1e-14));
        let f = var(1, 0).try_sub(&var(1, 2)).unwrap();
        let s = patch(1, vec![f], None);
        let r = s.blow_up_check(&[0.0, 0.0, 0.0], &[0.4, 0.1, 0.025, 0.00625], HomogeneousDistance::Koranyi).unwrap();
        assert!(r.decreasing(0.0), "{r:?}");
        assert!(*r.ratios.last().unwrap() < 0.1);
    }

    #[test]
    fn outward_normal_example() {
        let s = patch(2, vec![var(2, 0)], Some(var(2, 1)));
        let z = [0.0, 0.0, 0.2, -0.3, 0.1];
        let nu = s.outward_normal(&z).unwrap();
        assert!(close(&nu, &MultiVector::from_vector(2, &[0.0, -1.0])));
        let tb = s.boundary_tangent(&z).unwrap();
        assert!(close(&tb, &MultiVector::basis(2, &[2, 3, 4]).scale(&-1.0)));
        let (t, _) = s.tangent_vector(&z).unwrap();
        assert!(close(&nu.wedge(&tb), &t));
        let flipped = s.with_orientation(-1);
        assert!(close(&flipped.boundary_tangent(&z).unwrap(), &tb.scale(&-1.0)));
    }

    #[test]
    fn exact_boundary_tangent() {
        let s = patch(2, vec![var(2, 0)], Some(var(2, 1)));
        let (nu, tb) = s.boundary_tangent_exact(&Point::identity(2)).unwrap();
        assert_eq!(nu, MultiVector::from_vector(2, &[rat(0, 1), rat(-1, 1)]));
        assert_eq!(tb, MultiVector::basis(2, &[2, 3, 4]).scale(&rat(-1, 1)));
        assert_eq!(nu.wedge(&tb), MultiVector::basis(2, &[1, 2, 3, 4]));
    }

    #[test]
    fn critical_orientation_example() {
        let s = patch(1, vec![var(1, 0)], Some(var(1, 2)));
        let curve = LegendrianPatch::new(
            1,
            vec![SmoothScalar::zero(1), SmoothScalar::var(1, 0), SmoothScalar::zero(1)],
            ChartBox::cube(1, -0.5, 0.5),
            1,
        )
        .unwrap();
        assert!(s.lies_above(&curve).unwrap());
        let tau = s.critical_boundary_tau(&[0.0, 0.1, 0.0], true).unwrap();
        assert!(close(&tau, &MultiVector::basis(1, &[1])));
        let below = patch(1, vec![var(1, 0)], Some(var(1, 2).neg()));
        assert!(!below.lies_above(&curve).unwrap());
    }

    #[test]
    fn legendrian_examples() {
        let p1 = |c: &[(u32, i64, i64)]| {
            let mut p = Poly::zero(1);
            for &(e, a, b) in c {
                p.add_term(crate::poly::Monomial(vec![e]), rat(a, b));
            }
            SmoothScalar::from_poly(p)
        };
        let bx = ChartBox::cube(1, 0.0, 1.0);
        let seg = LegendrianPatch::new(1, vec![p1(&[(1, 1, 1)]), p1(&[]), p1(&[])], bx.clone(), 1).unwrap();
        assert!(seg.validate().unwrap().valid);
        let bad = LegendrianPatch::new(1, vec![p1(&[(1, 1, 1)]), p1(&[]), p1(&[(1, 1, 1)])], bx.clone(), 1).unwrap();
        let r = bad.validate().unwrap();
        assert!(!r.valid);
        assert_eq!(r.offending, vec![0]);
        assert!(matches!(bad.require_valid(), Err(Error::NonLegendrian(_))));
        let cubic = LegendrianPatch::new(1, vec![p1(&[(1, 1, 1)]), p1(&[(2, 1, 1)]), p1(&[(3, 1, 6)])], bx, 1).unwrap();
        assert!(cubic.validate().unwrap().valid);
        let plane = LegendrianPatch::new(
            2,
            vec![
                SmoothScalar::var(2, 0),
                SmoothScalar::var(2, 1),
                SmoothScalar::zero(2),
                SmoothScalar::zero(2),
                SmoothScalar::zero(2),
            ],
            ChartBox::cube(2, 0.0, 1.0),
            1,
        )
        .unwrap();
        assert!(plane.validate().unwrap().valid);
        assert_eq!(plane.faces().unwrap().len(), 4);
    }
}
