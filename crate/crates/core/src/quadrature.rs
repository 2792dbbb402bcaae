//! Tensor Gauss–Legendre quadrature with uniform dyadic refinement.
//!
//! Level `ℓ` splits every axis into `2^(ℓ−1)` equal cells. Cells are visited in
//! lexicographic order; per-cell sums may be computed in parallel but are
//! always reduced in that order with compensated summation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub order: usize,
    pub levels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { order: 8, levels: 3 }
    }
}

impl QuadratureSpec {
    pub fn new(order: usize, levels: usize) -> Result<Self> {
        let s = QuadratureSpec { order, levels };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidScene(format!("quadrature order must be >= 2, got {}", self.order)));
        }
        if self.levels < 1 || self.levels > 12 {
            return Err(Error::InvalidScene(format!("refinement levels must be in 1..=12, got {}", self.levels)));
        }
        Ok(())
    }
}

/// Axis-aligned box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidScene(format!("degenerate box lo={lo:?} hi={hi:?}")));
        }
        Ok(ChartBox { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        ChartBox { lo: vec![lo; dim], hi: vec![hi; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter().zip(&self.lo).zip(&self.hi).all(|((v, a), b)| a <= v && v <= b)
    }

    /// Keeps the listed axes.
    pub fn select(&self, axes: &[usize]) -> ChartBox {
        ChartBox {
            lo: axes.iter().map(|&i| self.lo[i]).collect(),
            hi: axes.iter().map(|&i| self.hi[i]).collect(),
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Compensated summation in insertion order.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Result of a refined integral.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurrentValue {
    pub value: f64,
    pub trace: Vec<f64>,
    pub est_error: f64,
}

impl CurrentValue {
    pub fn from_trace(trace: Vec<f64>) -> Self {
        let value = *trace.last().unwrap_or(&0.0);
        let est_error = if trace.len() >= 2 { (value - trace[trace.len() - 2]).abs() } else { 0.0 };
        CurrentValue { value, trace, est_error }
    }

    pub fn exact(value: f64, levels: usize) -> Self {
        CurrentValue { value, trace: vec![value; levels], est_error: 0.0 }
    }

    pub fn combine(&self, other: &CurrentValue, a: f64, b: f64) -> CurrentValue {
        let trace = self.trace.iter().zip(&other.trace).map(|(x, y)| a * x + b * y).collect();
        CurrentValue::from_trace(trace)
    }

    pub fn scaled(&self, a: f64) -> CurrentValue {
        CurrentValue::from_trace(self.trace.iter().map(|x| a * x).collect())
    }
}

fn check_finite(v: f64, z: &[f64]) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(z.to_vec()))
    }
}

/// One-dimensional composite rule on `[a, b]` at a refinement level.
pub fn integrate_1d<F>(a: f64, b: f64, order: usize, level: usize, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (nodes, weights) = gauss_legendre(order);
    let cells = 1usize << (level - 1);
    let h = (b - a) / cells as f64;
    let mut acc = Kahan::default();
    for c in 0..cells {
        let left = a + h * c as f64;
        for (x, w) in nodes.iter().zip(&weights) {
            let s = left + 0.5 * h * (x + 1.0);
            acc.add(0.5 * h * w * check_finite(f(s)?, &[s])?);
        }
    }
    Ok(acc.value())
}

/// Tensor composite rule over a box at a single refinement level.
pub fn integrate_box_level<F>(bx: &ChartBox, order: usize, level: usize, f: &F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let dim = bx.dim();
    if dim == 0 {
        return check_finite(f(&[])?, &[]);
    }
    let (nodes, weights) = gauss_legendre(order);
    let per_axis = 1usize << (level - 1);
    let ncells = per_axis.pow(dim as u32);
    let h: Vec<f64> = (0..dim).map(|i| (bx.hi[i] - bx.lo[i]) / per_axis as f64).collect();
    let npts = order.pow(dim as u32);

    let cell_sum = |cell: usize| -> Result<f64> {
        let mut idx = vec![0usize; dim];
        let mut rem = cell;
        for d in (0..dim).rev() {
            idx[d] = rem % per_axis;
            rem /= per_axis;
        }
        let left: Vec<f64> = (0..dim).map(|d| bx.lo[d] + h[d] * idx[d] as f64).collect();
        let scale: f64 = h.iter().map(|hd| 0.5 * hd).product();
        let mut z = vec![0.0; dim];
        let mut acc = Kahan::default();
        for p in 0..npts {
            let mut rem = p;
            let mut w = scale;
            for d in (0..dim).rev() {
                let j = rem % order;
                rem /= order;
                z[d] = left[d] + 0.5 * h[d] * (nodes[j] + 1.0);
                w *= weights[j];
            }
            acc.add(w * check_finite(f(&z)?, &z)?);
        }
        Ok(acc.value())
    };

    let sums: Vec<Result<f64>> = (0..ncells).into_par_iter().map(cell_sum).collect();
    let mut acc = Kahan::default();
    for s in sums {
        acc.add(s?);
    }
    Ok(acc.value())
}

/// Runs every refinement level and reports the trace.
pub fn quadrature<F>(bx: &ChartBox, f: &F, spec: &QuadratureSpec) -> Result<CurrentValue>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    spec.validate()?;
    let trace = (1..=spec.levels)
        .map(|l| integrate_box_level(bx, spec.order, l, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(CurrentValue::from_trace(trace))
}

/// Runs a per-level evaluator for every refinement level.
pub fn refine<F>(spec: &QuadratureSpec, f: F) -> Result<CurrentValue>
where
    F: Fn(usize) -> Result<f64>,
{
    spec.validate()?;
    let trace = (1..=spec.levels).map(f).collect::<Result<Vec<_>>>()?;
    Ok(CurrentValue::from_trace(trace))
}
