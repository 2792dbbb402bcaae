//! The Heisenberg group `H^n` in exponential coordinates.
//!
//! Points are stored as a flat coordinate vector `(x_1..x_n, y_1..y_n, t)`,
//! matching the frame order `X_1..X_n, Y_1..Y_n, T` used everywhere else.
//! Coordinates are generic over [`Coord`], implemented for exact rationals and
//! for `f64`.

use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Num, ToPrimitive};

use crate::error::{Error, Result};
use crate::exterior::MultiVector;
use crate::poly::{rat, rat_to_f64, Rational};
use crate::scalar::SmoothScalar;

/// Scalar field for point coordinates.
pub trait Coord: Num + Clone + Neg<Output = Self> + PartialOrd + Debug + Send + Sync {
    fn ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn eval_scalar(s: &SmoothScalar, z: &[Self]) -> Result<Self>;

    fn half(&self) -> Self {
        self.clone() * Self::ratio(1, 2)
    }
}

impl Coord for f64 {
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn eval_scalar(s: &SmoothScalar, z: &[Self]) -> Result<Self> {
        Ok(s.eval_f64(z))
    }
}

impl Coord for Rational {
    fn ratio(num: i64, den: i64) -> Self {
        rat(num, den)
    }
    fn to_f64(&self) -> f64 {
        rat_to_f64(self)
    }
    fn eval_scalar(s: &SmoothScalar, z: &[Self]) -> Result<Self> {
        s.eval_exact(z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupParams {
    n: usize,
}

impl GroupParams {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidScene("Heisenberg group needs n >= 1".into()));
        }
        Ok(GroupParams { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Topological dimension `2n+1`.
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    /// Homogeneous dimension `Q = 2n+2`.
    pub fn homogeneous_dim(&self) -> usize {
        2 * self.n + 2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Point<S = f64> {
    n: usize,
    coords: Vec<S>,
}

impl<S: Coord> Point<S> {
    pub fn new(n: usize, coords: Vec<S>) -> Result<Self> {
        if coords.len() != 2 * n + 1 {
            return Err(Error::DimensionMismatch { expected: 2 * n + 1, found: coords.len() });
        }
        Ok(Point { n, coords })
    }

    pub fn from_xyt(x: Vec<S>, y: Vec<S>, t: S) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
        }
        let n = x.len();
        let mut coords = x;
        coords.extend(y);
        coords.push(t);
        Point::new(n, coords)
    }

    pub fn identity(n: usize) -> Self {
        Point { n, coords: vec![S::zero(); 2 * n + 1] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<S> {
        self.coords
    }

    pub fn x(&self, j: usize) -> &S {
        &self.coords[j]
    }

    pub fn y(&self, j: usize) -> &S {
        &self.coords[self.n + j]
    }

    pub fn t(&self) -> &S {
        &self.coords[2 * self.n]
    }

    pub fn to_f64(&self) -> Point<f64> {
        Point { n: self.n, coords: self.coords.iter().map(Coord::to_f64).collect() }
    }

    /// Group law `(x+x', y+y', t+t'+½<x,y'>-½<x',y>)`.
    pub fn mul(&self, other: &Point<S>) -> Result<Point<S>> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Point<S>) -> Point<S> {
        let n = self.n;
        let mut coords: Vec<S> = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        let mut twist = S::zero();
        for j in 0..n {
            twist = twist + self.coords[j].clone() * other.coords[n + j].clone()
                - other.coords[j].clone() * self.coords[n + j].clone();
        }
        coords[2 * n] = coords[2 * n].clone() + twist.half();
        Point { n, coords }
    }

    pub fn inverse(&self) -> Point<S> {
        Point { n: self.n, coords: self.coords.iter().map(|c| -c.clone()).collect() }
    }

    /// `δ_λ(x,y,t) = (λx, λy, λ²t)`.
    pub fn dilate(&self, lambda: &S) -> Result<Point<S>> {
        if *lambda <= S::zero() {
            return Err(Error::NonPositiveDilation(lambda.to_f64()));
        }
        let n = self.n;
        let mut coords: Vec<S> = self.coords.iter().map(|c| c.clone() * lambda.clone()).collect();
        coords[2 * n] = coords[2 * n].clone() * lambda.clone();
        Ok(Point { n, coords })
    }

    /// Horizontal part `(x, y)` as a vector in `R^{2n}`.
    pub fn horizontal(&self) -> &[S] {
        &self.coords[..2 * self.n]
    }
}

/// Left-invariant homogeneous distances with a closed-form norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HomogeneousDistance {
    /// `max{|(x,y)|, 2|t|^{1/2}}`
    Infinity,
    /// `((|x|²+|y|²)² + 16t²)^{1/4}`
    Koranyi,
}

impl HomogeneousDistance {
    pub fn name(&self) -> &'static str {
        match self {
            HomogeneousDistance::Infinity => "infinity",
            HomogeneousDistance::Koranyi => "koranyi",
        }
    }

    /// Norm as a function of `|(x,y)|` and `t`.
    pub fn norm_from_parts(&self, h: f64, t: f64) -> f64 {
        match self {
            HomogeneousDistance::Infinity => h.max(2.0 * t.abs().sqrt()),
            HomogeneousDistance::Koranyi => ((h * h).powi(2) + 16.0 * t * t).sqrt().sqrt(),
        }
    }

    pub fn norm<S: Coord>(&self, p: &Point<S>) -> f64 {
        let h = p.horizontal().iter().map(|c| c.to_f64().powi(2)).sum::<f64>().sqrt();
        self.norm_from_parts(h, p.t().to_f64())
    }

    /// `d(p, q) = ‖p⁻¹·q‖`.
    pub fn distance<S: Coord>(&self, p: &Point<S>, q: &Point<S>) -> Result<f64> {
        Ok(self.norm(&p.inverse().mul(q)?))
    }

    /// Half-width of `{τ : ‖(h, τ)‖ < 1}` for a horizontal part of length `h`.
    pub fn vertical_extent(&self, h: f64) -> f64 {
        if h >= 1.0 {
            return 0.0;
        }
        match self {
            HomogeneousDistance::Infinity => 0.25,
            HomogeneousDistance::Koranyi => (1.0 - h.powi(4)).sqrt() / 4.0,
        }
    }
}

/// Coordinate vectors of `X_1(p),…,Y_n(p),T` in `R^{2n+1}`.
pub fn frame_at<S: Coord>(p: &Point<S>) -> Vec<Vec<S>> {
    let n = p.n;
    let dim = 2 * n + 1;
    (0..dim)
        .map(|i| {
            let mut v = vec![S::zero(); dim];
            v[i] = S::one();
            if i < n {
                v[2 * n] = -p.y(i).half();
            } else if i < 2 * n {
                v[2 * n] = p.x(i - n).half();
            }
            v
        })
        .collect()
}

/// `π_p(q) = Σ x_j(q) X_j(p) + Σ y_j(q) Y_j(p)`, expressed in the left-invariant frame.
pub fn pi_p<S: Coord>(_p: &Point<S>, q: &Point<S>) -> MultiVector<S> {
    MultiVector::from_vector(q.n, q.horizontal())
}

/// Orthogonal splitting `H^n = W·V` with `V` spanned by horizontal frame directions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerticalSplitting {
    n: usize,
    v: Vec<usize>,
}

impl VerticalSplitting {
    /// `v` lists 0-based frame indices in `0..2n`; they must span an abelian subalgebra.
    pub fn new(n: usize, mut v: Vec<usize>) -> Result<Self> {
        v.sort_unstable();
        v.dedup();
        if v.is_empty() || v.len() > n {
            return Err(Error::InvalidScene(format!(
                "vertical subgroup must have dimension 1..={n}, got {}",
                v.len()
            )));
        }
        if let Some(&bad) = v.iter().find(|&&i| i >= 2 * n) {
            return Err(Error::InvalidScene(format!("frame index {bad} is not horizontal")));
        }
        for j in 0..n {
            if v.contains(&j) && v.contains(&(j + n)) {
                return Err(Error::InvalidScene(format!(
                    "X_{0} and Y_{0} do not span an abelian subgroup",
                    j + 1
                )));
            }
        }
        Ok(VerticalSplitting { n, v })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn codim(&self) -> usize {
        self.v.len()
    }

    pub fn v_indices(&self) -> &[usize] {
        &self.v
    }

    /// Coordinates of `W`, in increasing order (always ends with `t`).
    pub fn w_indices(&self) -> Vec<usize> {
        (0..2 * self.n + 1).filter(|i| !self.v.contains(i)).collect()
    }

    /// Embeds `V`-coordinates as a point of `V ⊂ H^n`.
    pub fn v_point<S: Coord>(&self, v: &[S]) -> Point<S> {
        let mut coords = vec![S::zero(); 2 * self.n + 1];
        for (&i, c) in self.v.iter().zip(v) {
            coords[i] = c.clone();
        }
        Point { n: self.n, coords }
    }

    /// Embeds `W`-coordinates as a point of `W ⊂ H^n`.
    pub fn w_point<S: Coord>(&self, w: &[S]) -> Point<S> {
        let mut coords = vec![S::zero(); 2 * self.n + 1];
        for (i, c) in self.w_indices().into_iter().zip(w) {
            coords[i] = c.clone();
        }
        Point { n: self.n, coords }
    }

    /// Returns `(π_W(p), π_V(p))` with `p = π_W(p)·π_V(p)`.
    pub fn split<S: Coord>(&self, p: &Point<S>) -> Result<(Point<S>, Point<S>)> {
        if p.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: p.n });
        }
        let vc: Vec<S> = self.v.iter().map(|&i| p.coords[i].clone()).collect();
        let v = self.v_point(&vc);
        let w = p.mul(&v.inverse())?;
        Ok((w, v))
    }
}

/// P-differential `d_H f_p(q) = Σ x_i(q) X_i f(p) + y_i(q) Y_i f(p)` for each component.
pub fn pansu_differential<S: Coord>(
    f: &[SmoothScalar],
    p: &Point<S>,
    q: &Point<S>,
) -> Result<Vec<S>> {
    let n = p.n;
    f.iter()
        .map(|fi| {
            let mut acc = S::zero();
            for j in 0..2 * n {
                let d = S::eval_scalar(&fi.horizontal_derivative(j), p.coords())?;
                acc = acc + q.coords[j].clone() * d;
            }
            Ok(acc)
        })
        .collect()
}

#[allow(dead_code)]
pub(crate) fn to_f64_vec<S: ToPrimitive>(v: &[S]) -> Vec<f64> {
    v.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, Poly};

    fn rp(c: &[(i64, i64)]) -> Point<Rational> {
        let n = (c.len() - 1) / 2;
        Point::new(n, c.iter().map(|&(a, b)| rat(a, b)).collect()).unwrap()
    }

    #[test]
    fn group_law_example() {
        let p = rp(&[(1, 1), (0, 1), (0, 1)]);
        let q = rp(&[(0, 1), (1, 1), (0, 1)]);
        assert_eq!(p.mul(&q).unwrap(), rp(&[(1, 1), (1, 1), (1, 2)]));
        assert_eq!(p.mul(&Point::identity(1)).unwrap(), p);
        assert_eq!(p.mul(&p.inverse()).unwrap(), Point::identity(1));
    }

    #[test]
    fn dimension_mismatch() {
        let p = Point::<f64>::identity(1);
        let q = Point::<f64>::identity(2);
        assert!(matches!(p.mul(&q), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn inverse_examples() {
        let p = rp(&[(1, 1), (2, 1), (3, 1)]);
        assert_eq!(p.inverse(), rp(&[(-1, 1), (-2, 1), (-3, 1)]));
        assert_eq!(Point::<Rational>::identity(1).inverse(), Point::identity(1));
        assert_eq!(p.inverse().inverse(), p);
    }

    #[test]
    fn dilation_examples() {
        let p = rp(&[(1, 1), (1, 1), (1, 1)]);
        assert_eq!(p.dilate(&rat(2, 1)).unwrap(), rp(&[(2, 1), (2, 1), (4, 1)]));
        assert_eq!(p.dilate(&rat(1, 1)).unwrap(), p);
        assert!(matches!(p.dilate(&rat(0, 1)), Err(Error::NonPositiveDilation(_))));
        assert!(p.to_f64().dilate(&-1.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let o = Point::<f64>::identity(1);
        let vert = Point::new(1, vec![0.0, 0.0, 1.0]).unwrap();
        let horiz = Point::new(1, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(HomogeneousDistance::Infinity.distance(&o, &vert).unwrap(), 2.0);
        assert_eq!(HomogeneousDistance::Koranyi.distance(&o, &horiz).unwrap(), 1.0);
    }

    #[test]
    fn vertical_extent_matches_bisection() {
        for d in [HomogeneousDistance::Infinity, HomogeneousDistance::Koranyi] {
            for h in [0.0, 0.3, 0.7, 0.95] {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if d.norm_from_parts(h, mid) < 1.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                assert!((d.vertical_extent(h) - lo).abs() < 1e-12, "{d:?} h={h}");
            }
        }
    }

    #[test]
    fn frame_examples() {
        let o = Point::<Rational>::identity(1);
        assert_eq!(frame_at(&o)[0], vec![rat(1, 1), rat(0, 1), rat(0, 1)]);
        let p = rp(&[(0, 1), (2, 1), (0, 1)]);
        assert_eq!(frame_at(&p)[0], vec![rat(1, 1), rat(0, 1), rat(-1, 1)]);
        let q = rp(&[(3, 1), (0, 1), (0, 1)]);
        assert_eq!(frame_at(&q)[1], vec![rat(0, 1), rat(1, 1), rat(3, 2)]);
    }

    #[test]
    fn pi_p_examples() {
        let o = Point::<Rational>::identity(1);
        let q = rp(&[(1, 1), (0, 1), (5, 1)]);
        assert_eq!(pi_p(&o, &q), MultiVector::basis(1, &[0]));
        assert!(pi_p(&q, &o).is_zero());
    }

    #[test]
    fn split_examples() {
        let s = VerticalSplitting::new(1, vec![0]).unwrap();
        let p = rp(&[(1, 1), (1, 1), (0, 1)]);
        let (w, v) = s.split(&p).unwrap();
        assert_eq!(w, rp(&[(0, 1), (1, 1), (1, 2)]));
        assert_eq!(v, rp(&[(1, 1), (0, 1), (0, 1)]));
        assert_eq!(w.mul(&v).unwrap(), p);

        let in_w = rp(&[(0, 1), (3, 1), (7, 2)]);
        let (w, v) = s.split(&in_w).unwrap();
        assert_eq!((w, v), (in_w, Point::identity(1)));

        let in_v = rp(&[(5, 2), (0, 1), (0, 1)]);
        let (w, v) = s.split(&in_v).unwrap();
        assert_eq!((w, v), (Point::identity(1), in_v));
    }

    #[test]
    fn splitting_rejects_non_abelian() {
        assert!(VerticalSplitting::new(1, vec![0, 1]).is_err());
        assert!(VerticalSplitting::new(2, vec![0, 1]).is_ok());
        assert!(VerticalSplitting::new(2, vec![4]).is_err());
    }

    #[test]
    fn pansu_examples() {
        let t = SmoothScalar::from_poly(Poly::var(3, 2));
        let p = rp(&[(1, 1), (0, 1), (0, 1)]);
        let q = rp(&[(0, 1), (1, 1), (0, 1)]);
        assert_eq!(pansu_differential(&[t], &p, &q).unwrap(), vec![rat(1, 2)]);

        let x = SmoothScalar::from_poly(Poly::var(3, 0));
        let q = rp(&[(4, 3), (-2, 1), (9, 1)]);
        assert_eq!(pansu_differential(&[x], &p, &q).unwrap(), vec![rat(4, 3)]);
    }
}
