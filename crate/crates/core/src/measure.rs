//! Integrals of Heisenberg forms over patches, the Euclidean pullback oracle,
//! and the `C_{n,k}` slice-volume estimator.
//!
//! Graph-path integrals return the plain intrinsic-graph integral
//! `∫_A ⟨t^H_S∘Φ | ω∘Φ⟩ · (|∇_H f_1∧…∧∇_H f_k|/Δ)∘Φ dξ`. The constant of the
//! area formula and the normalization of the current cancel, so no estimate of
//! `C_{n,k}` enters the default path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{CoordinateForm, InvariantForm};
use crate::group::{HomogeneousDistance, Point, VerticalSplitting};
use crate::linalg::{det_f64, solve_f64};
use crate::quadrature::{integrate_1d, refine, CurrentValue, QuadratureSpec};
use crate::rumin::{Regime, RuminClass, RuminComplex};
use crate::submanifold::{frame_components, LegendrianPatch, LevelSetPatch};

/// `(|∇_H f_1∧…∧∇_H f_k|/Δ)(Φ(ξ))`.
pub fn area_factor(patch: &LevelSetPatch, xi: &[f64]) -> Result<f64> {
    patch.area_factor(xi)
}

fn check_lowcodim_degree(patch: &LevelSetPatch, degree: usize) -> Result<()> {
    if degree != patch.dim() {
        return Err(Error::DegreeMismatch { expected: patch.dim(), found: degree });
    }
    Ok(())
}

/// `⟦S⟧(ω)` for a `J`-class on a level-set patch of codimension `k ≤ n`.
pub fn integrate_lowcodim(patch: &LevelSetPatch, omega: &RuminClass, spec: &QuadratureSpec) -> Result<CurrentValue> {
    if omega.regime() != Regime::Subspace {
        return Err(Error::DegreeMismatch { expected: patch.n() + 1, found: omega.degree() });
    }
    integrate_lowcodim_form(patch, omega.representative(), spec)
}

/// As [`integrate_lowcodim`] on a raw form, after an exact `J` membership test.
pub fn integrate_lowcodim_form(patch: &LevelSetPatch, form: &InvariantForm, spec: &QuadratureSpec) -> Result<CurrentValue> {
    check_lowcodim_degree(patch, form.degree())?;
    let rc = RuminComplex::new(patch.n())?;
    if !rc.j_membership(form)? {
        return Err(Error::NotInJ { degree: form.degree() });
    }
    let levels = spec.levels;
    if form.is_zero() {
        return Ok(CurrentValue::exact(0.0, levels));
    }
    let cf = form.compile();
    let integrand = |xi: &[f64]| -> Result<f64> {
        let z = patch.graph_point(xi)?;
        let (t, norm) = patch.integration_tangent(&z)?;
        let delta = patch.delta(&z);
        if delta < crate::submanifold::CHARACTERISTIC_THRESHOLD {
            return Err(Error::CharacteristicPoint { point: z, norm: delta });
        }
        Ok(cf.pair(&t, &z) * norm / delta)
    };
    refine(spec, |level| patch.integrate_domain(spec.order, level, &integrand))
}

/// `C · ⟦S⟧(ω)`: the integral against spherical measure given an estimate of `C_{n,k}`.
pub fn spherical_integral(graph_value: &CurrentValue, cnk: f64) -> CurrentValue {
    graph_value.scaled(cnk)
}

/// Pullback integral of the form over a Legendrian patch.
pub fn integrate_lowdim(curve: &LegendrianPatch, omega: &RuminClass, spec: &QuadratureSpec) -> Result<CurrentValue> {
    if omega.regime() != Regime::Quotient {
        return Err(Error::DegreeMismatch { expected: curve.n(), found: omega.degree() });
    }
    integrate_lowdim_form(curve, omega.representative(), spec)
}

/// Pullback integral of an arbitrary representative; only horizontal terms contribute.
pub fn integrate_lowdim_form(curve: &LegendrianPatch, form: &InvariantForm, spec: &QuadratureSpec) -> Result<CurrentValue> {
    spec.validate()?;
    curve.require_valid()?;
    let m = curve.dim();
    if form.degree() != m {
        return Err(Error::DegreeMismatch { expected: m, found: form.degree() });
    }
    if form.is_zero() {
        return Ok(CurrentValue::exact(0.0, spec.levels));
    }
    let cf = form.compile();
    let sign = curve.orientation() as f64;
    let integrand = |s: &[f64]| -> Result<f64> {
        let z = curve.point(s);
        let tan = curve.tangents(s);
        let mut acc = 0.0;
        for (idx, c) in cf.eval(&z) {
            if c == 0.0 {
                continue;
            }
            let cols = idx.indices();
            let minor: Vec<Vec<f64>> = tan.iter().map(|row| cols.iter().map(|&j| row[j]).collect()).collect();
            acc += c * det_f64(&minor);
        }
        Ok(sign * acc)
    };
    refine(spec, |level| curve.integrate_params(spec.order, level, &integrand))
}

/// Coordinate derivatives `∂Φ/∂ξ_a` of the graph map by implicit differentiation.
fn graph_jacobian(patch: &LevelSetPatch, xi: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = patch.n();
    let dim = 2 * n + 1;
    let sp = patch.splitting();
    let widx = sp.w_indices();
    let vidx = sp.v_indices();
    let (z, v) = patch.graph_solve(xi)?;
    let mut xi_full = vec![0.0; dim];
    for (&i, c) in widx.iter().zip(xi) {
        xi_full[i] = *c;
    }
    let mut v_full = vec![0.0; dim];
    for (&i, c) in vidx.iter().zip(&v) {
        v_full[i] = *c;
    }
    // ∂(ξ·v)/∂ξ_i and ∂(ξ·v)/∂v_i in coordinates
    let d_xi = |i: usize| -> Vec<f64> {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        if i < n {
            e[2 * n] += 0.5 * v_full[n + i];
        } else if i < 2 * n {
            e[2 * n] -= 0.5 * v_full[i - n];
        }
        e
    };
    let d_v = |i: usize| -> Vec<f64> {
        let mut e = vec![0.0; dim];
        e[i] = 1.0;
        if i < n {
            e[2 * n] -= 0.5 * xi_full[n + i];
        } else {
            e[2 * n] += 0.5 * xi_full[i - n];
        }
        e
    };
    let grads = patch.euclidean_gradients(&z);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let dvs: Vec<Vec<f64>> = vidx.iter().map(|&i| d_v(i)).collect();
    let gv: Vec<Vec<f64>> = grads.iter().map(|g| dvs.iter().map(|e| dot(g, e)).collect()).collect();
    let mut cols = Vec::with_capacity(widx.len());
    for &i in &widx {
        let e = d_xi(i);
        let rhs: Vec<f64> = grads.iter().map(|g| -dot(g, &e)).collect();
        let dphi = solve_f64(&gv, &rhs).ok_or_else(|| Error::CharacteristicPoint { point: z.clone(), norm: 0.0 })?;
        let mut col = e.clone();
        for (b, dv) in dvs.iter().enumerate() {
            for c in 0..dim {
                col[c] += dphi[b] * dv[c];
            }
        }
        cols.push(col);
    }
    Ok((z, cols))
}

/// Classical integral of `ω` over the oriented graph, computed from the coordinate
/// expression of `ω` and the coordinate Jacobian of `Φ`.
pub fn euclidean_oracle_integral(patch: &LevelSetPatch, form: &InvariantForm, spec: &QuadratureSpec) -> Result<CurrentValue> {
    spec.validate()?;
    check_lowcodim_degree(patch, form.degree())?;
    if form.is_zero() {
        return Ok(CurrentValue::exact(0.0, spec.levels));
    }
    let n = patch.n();
    let cf = CoordinateForm::from_invariant(form)?.compile();
    let integrand = |xi: &[f64]| -> Result<f64> {
        let (z, cols) = graph_jacobian(patch, xi)?;
        let mut orient = patch.orientation_rows(&z);
        orient.extend(cols.iter().map(|c| frame_components(n, &z, c)));
        let sign = det_f64(&orient).signum();
        let mut acc = 0.0;
        for (idx, c) in cf.eval(&z) {
            if c == 0.0 {
                continue;
            }
            let ci = idx.indices();
            let minor: Vec<Vec<f64>> = cols.iter().map(|col| ci.iter().map(|&j| col[j]).collect()).collect();
            acc += c * det_f64(&minor);
        }
        Ok(sign * acc)
    };
    refine(spec, |level| patch.integrate_domain(spec.order, level, &integrand))
}

/// Resources for [`cnk_estimate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CnkBudget {
    /// The outer grid has `2^grid_level + 1` points per axis on `[−1,1]^{2n+1}`.
    pub grid_level: u32,
    pub inner_order: usize,
    pub inner_level: usize,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for CnkBudget {
    fn default() -> Self {
        CnkBudget { grid_level: 3, inner_order: 12, inner_level: 3, mc_samples: 400_000, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CnkEstimate {
    pub n: usize,
    pub k: usize,
    pub distance: &'static str,
    /// `1/sup`, from the refined grid maximum.
    pub c: f64,
    pub interval: (f64, f64),
    pub sup_volume: f64,
    /// Supremum over the raw grid, before local refinement.
    pub grid_sup: f64,
    pub argmax: Vec<f64>,
    pub grid_points: usize,
    pub mc_volume: f64,
    pub mc_stderr: f64,
    /// `1/mc_volume`, an estimate independent of the deterministic quadrature.
    pub c_mc: f64,
    pub seed: u64,
}

/// Integrates `g` over the Euclidean ball `|w − c| < r` in `R^m` by nested
/// sine substitutions, which keeps square-root edge behaviour smooth.
fn ball_integral<F>(c: &[f64], r: f64, order: usize, level: usize, g: &F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    fn rec<F: Fn(&[f64]) -> Result<f64>>(c: &[f64], r: f64, w: &[f64], order: usize, level: usize, g: &F) -> Result<f64> {
        let a = w.len();
        if a == c.len() {
            return g(w);
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        integrate_1d(-half_pi, half_pi, order, level, |phi| {
            let mut next = w.to_vec();
            next.push(c[a] + r * phi.sin());
            let rc = r * phi.cos();
            Ok(rc * rec(c, rc, &next, order, level, g)?)
        })
    }
    if r <= 0.0 {
        return Ok(0.0);
    }
    rec(c, r, &[], order, level, g)
}

/// Lebesgue volume of `W ∩ U(p,1)` over the `W` coordinates.
///
/// For fixed horizontal `W`-coordinates the slice is a `t`-interval of length
/// `2·vertical_extent(|(p⁻¹w)_h|)`, so only the horizontal part is integrated.
pub fn slice_volume(d: HomogeneousDistance, s: &VerticalSplitting, p: &[f64], order: usize, level: usize) -> Result<f64> {
    let n = s.n();
    let wh: Vec<usize> = s.w_indices().into_iter().filter(|&i| i < 2 * n).collect();
    let pv2: f64 = s.v_indices().iter().map(|&i| p[i] * p[i]).sum();
    if pv2 >= 1.0 {
        return Ok(0.0);
    }
    let centre: Vec<f64> = wh.iter().map(|&i| p[i]).collect();
    let g = |w: &[f64]| -> Result<f64> {
        let h2: f64 = w.iter().zip(&centre).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + pv2;
        Ok(2.0 * d.vertical_extent(h2.min(1.0).sqrt()))
    };
    ball_integral(&centre, (1.0 - pv2).sqrt(), order, level, &g)
}

/// Monte Carlo volume of `W ∩ U(p,1)` from the indicator `‖p⁻¹w‖ < 1`.
pub fn slice_volume_mc(d: HomogeneousDistance, s: &VerticalSplitting, p: &[f64], samples: usize, seed: u64) -> Result<(f64, f64)> {
    let n = s.n();
    let widx = s.w_indices();
    let ph: f64 = p[..2 * n].iter().map(|c| c * c).sum::<f64>().sqrt();
    let lo: Vec<f64> = widx
        .iter()
        .map(|&i| if i == 2 * n { p[i] - 0.25 - 0.5 * ph * (ph + 1.0) } else { p[i] - 1.0 })
        .collect();
    let hi: Vec<f64> = widx
        .iter()
        .map(|&i| if i == 2 * n { p[i] + 0.25 + 0.5 * ph * (ph + 1.0) } else { p[i] + 1.0 })
        .collect();
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let pinv = Point::new(n, p.to_vec())?.inverse();
    // fixed-size chunks, each with its own stream, reduced in chunk order
    const CHUNK: usize = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let hits: Vec<Result<usize>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut h = 0;
            let mut w = vec![0.0; 2 * n + 1];
            for _ in 0..count {
                for (j, &i) in widx.iter().enumerate() {
                    w[i] = rng.gen_range(lo[j]..hi[j]);
                }
                let q = pinv.mul(&Point::new(n, w.clone())?)?;
                if d.norm(&q) < 1.0 {
                    h += 1;
                }
            }
            Ok(h)
        })
        .collect();
    let mut total = 0usize;
    for h in hits {
        total += h?;
    }
    let frac = total as f64 / samples as f64;
    Ok((box_vol * frac, box_vol * (frac * (1.0 - frac) / samples as f64).sqrt()))
}

/// Estimates `C_{n,k} = (sup_{p∈U(0,1)} L(W∩U(p,1)))^{-1}`.
pub fn cnk_estimate(d: HomogeneousDistance, s: &VerticalSplitting, budget: &CnkBudget) -> Result<CnkEstimate> {
    let n = s.n();
    let dim = 2 * n + 1;
    let per_axis = (1usize << budget.grid_level) + 1;
    let total = per_axis.pow(dim as u32);
    let grid: Vec<Vec<f64>> = (0..total)
        .map(|mut c| {
            let mut p = vec![0.0; dim];
            for a in (0..dim).rev() {
                p[a] = -1.0 + 2.0 * (c % per_axis) as f64 / (per_axis - 1) as f64;
                c /= per_axis;
            }
            p
        })
        .filter(|p| Point::new(n, p.clone()).map(|q| d.norm(&q) < 1.0).unwrap_or(false))
        .collect();
    if grid.is_empty() {
        return Err(Error::Budget(format!(
            "grid level {} has no probe points inside the unit ball",
            budget.grid_level
        )));
    }
    let vol = |p: &[f64]| slice_volume(d, s, p, budget.inner_order, budget.inner_level);
    let vals: Vec<Result<f64>> = grid.par_iter().map(|p| vol(p)).collect();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, v) in vals.into_iter().enumerate() {
        let v = v?;
        if v > best.0 {
            best = (v, i);
        }
    }
    let grid_sup = best.0;
    let mut x = grid[best.1].clone();
    let mut fx = grid_sup;
    let mut step = 1.0 / (per_axis - 1) as f64;
    while step > 1e-4 {
        let mut improved = false;
        for a in 0..dim {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[a] += sgn * step;
                if d.norm(&Point::new(n, y.clone())?) >= 1.0 {
                    continue;
                }
                let fy = vol(&y)?;
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let coarse = if budget.inner_level > 1 {
        slice_volume(d, s, &x, budget.inner_order, budget.inner_level - 1)?
    } else {
        fx
    };
    let err = (fx - coarse).abs() + (fx - grid_sup).abs() + 1e-12;
    let (mc_volume, mc_stderr) = slice_volume_mc(d, s, &x, budget.mc_samples, budget.seed)?;
    Ok(CnkEstimate {
        n,
        k: s.codim(),
        distance: d.name(),
        c: 1.0 / fx,
        interval: (1.0 / (fx + err), 1.0 / (fx - err).max(1e-300)),
        sup_volume: fx,
        grid_sup,
        argmax: x,
        grid_points: grid.len(),
        mc_volume,
        mc_stderr,
        c_mc: 1.0 / mc_volume,
        seed: budget.seed,
    })
}
