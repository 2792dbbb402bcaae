//! Coefficient functions: a polynomial base plus an optional bump-supported part.
//!
//! A [`SmoothScalar`] is
//!
//! ```text
//!   base(z) + Σ_{e ≥ 1} B(z)^e · P_e(z) / u(z)^{m_e}
//! ```
//!
//! where `u = 1 − Σ_{i ∈ axes} (z_i − c_i)² / R²` and `B = exp(−1/u)` on `u > 0`,
//! `B = 0` elsewhere. Derivatives of `B^e·P/u^m` have the same shape, which keeps
//! the type closed under ∂ and under the frame fields.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde_json::json;

use crate::error::{Error, Result};
use crate::poly::{rat, rat_to_f64, CompiledPoly, Monomial, Poly, Rational};

/// Bump-evaluation cutoff, measured as coordinate distance to the support sphere.
pub const BUMP_EDGE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bump {
    center: Vec<Rational>,
    radius: Rational,
    axes: Vec<bool>,
    u: Poly,
}

impl Bump {
    /// `axes[i]` selects the coordinates contributing to the radius.
    pub fn new(center: Vec<Rational>, radius: Rational, axes: Vec<bool>) -> Result<Self> {
        if center.len() != axes.len() {
            return Err(Error::DimensionMismatch { expected: center.len(), found: axes.len() });
        }
        if radius <= Rational::zero() {
            return Err(Error::InvalidScene("bump radius must be positive".into()));
        }
        if !axes.iter().any(|&a| a) {
            return Err(Error::InvalidScene("bump needs at least one axis".into()));
        }
        let nvars = center.len();
        let inv_r2 = Rational::one() / (&radius * &radius);
        let mut u = Poly::one(nvars);
        for i in (0..nvars).filter(|&i| axes[i]) {
            let d = &Poly::var(nvars, i) - &Poly::constant(nvars, center[i].clone());
            u = &u - &(&d * &d).scale(&inv_r2);
        }
        Ok(Bump { center, radius, axes, u })
    }

    /// Round bump over every coordinate.
    pub fn ball(center: Vec<Rational>, radius: Rational) -> Result<Self> {
        let axes = vec![true; center.len()];
        Bump::new(center, radius, axes)
    }

    pub fn nvars(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[Rational] {
        &self.center
    }

    pub fn radius(&self) -> &Rational {
        &self.radius
    }

    pub fn axes(&self) -> &[bool] {
        &self.axes
    }

    /// The polynomial `u = 1 − r²`.
    pub fn u(&self) -> &Poly {
        &self.u
    }

    /// Normalized squared radius `r²` at a float point.
    pub fn r2_f64(&self, z: &[f64]) -> f64 {
        let r = rat_to_f64(&self.radius);
        self.center
            .iter()
            .zip(&self.axes)
            .zip(z)
            .filter(|((_, &a), _)| a)
            .map(|((c, _), zi)| (zi - rat_to_f64(c)).powi(2))
            .sum::<f64>()
            / (r * r)
    }

    /// Whether the float point is inside the support and away from the cutoff band.
    pub fn active_f64(&self, z: &[f64]) -> bool {
        let r = rat_to_f64(&self.radius);
        let rho = self.r2_f64(z).sqrt();
        r * (1.0 - rho) > BUMP_EDGE
    }
}

/// One bump-carrying summand `B^e · poly / u^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BumpTerm {
    m: u32,
    poly: Poly,
}

/// Equality is semantic: `P/u^m` and `P·u/u^{m+1}` compare equal.
#[derive(Clone, Debug)]
pub struct SmoothScalar {
    base: Poly,
    bump: Option<Arc<Bump>>,
    terms: BTreeMap<u32, BumpTerm>,
}

impl SmoothScalar {
    pub fn zero(nvars: usize) -> Self {
        SmoothScalar::from_poly(Poly::zero(nvars))
    }

    pub fn one(nvars: usize) -> Self {
        SmoothScalar::from_poly(Poly::one(nvars))
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        SmoothScalar::from_poly(Poly::constant(nvars, c))
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        SmoothScalar::from_poly(Poly::var(nvars, i))
    }

    pub fn from_poly(base: Poly) -> Self {
        SmoothScalar { base, bump: None, terms: BTreeMap::new() }
    }

    /// `B · p`, the standard compactly supported scalar.
    pub fn bumped(p: Poly, bump: Arc<Bump>) -> Result<Self> {
        if p.nvars() != bump.nvars() {
            return Err(Error::DimensionMismatch { expected: bump.nvars(), found: p.nvars() });
        }
        let nvars = p.nvars();
        let mut terms = BTreeMap::new();
        if !p.is_zero() {
            terms.insert(1, BumpTerm { m: 0, poly: p });
        }
        Ok(SmoothScalar { base: Poly::zero(nvars), bump: Some(bump), terms })
    }

    pub fn nvars(&self) -> usize {
        self.base.nvars()
    }

    pub fn base(&self) -> &Poly {
        &self.base
    }

    pub fn bump(&self) -> Option<&Arc<Bump>> {
        self.bump.as_ref()
    }

    pub fn has_bump_terms(&self) -> bool {
        !self.terms.is_empty()
    }

    /// The polynomial, if the scalar has no bump-carrying part.
    pub fn as_poly(&self) -> Option<&Poly> {
        self.terms.is_empty().then_some(&self.base)
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.terms.is_empty()
    }

    fn merged_bump(&self, other: &SmoothScalar) -> Result<Option<Arc<Bump>>> {
        if self.nvars() != other.nvars() {
            return Err(Error::DimensionMismatch { expected: self.nvars(), found: other.nvars() });
        }
        match (&self.bump, &other.bump) {
            (Some(a), Some(b)) if a != b => {
                if self.terms.is_empty() {
                    Ok(Some(b.clone()))
                } else if other.terms.is_empty() {
                    Ok(Some(a.clone()))
                } else {
                    Err(Error::IncompatibleBump)
                }
            }
            (Some(a), _) => Ok(Some(a.clone())),
            (None, b) => Ok(b.clone()),
        }
    }

    fn insert_term(terms: &mut BTreeMap<u32, BumpTerm>, u: &Poly, e: u32, t: BumpTerm) {
        if t.poly.is_zero() {
            return;
        }
        match terms.remove(&e) {
            None => {
                terms.insert(e, t);
            }
            Some(old) => {
                let m = old.m.max(t.m);
                let a = &old.poly * &u.pow(m - old.m);
                let b = &t.poly * &u.pow(m - t.m);
                let poly = &a + &b;
                if !poly.is_zero() {
                    terms.insert(e, BumpTerm { m, poly });
                }
            }
        }
    }

    pub fn try_add(&self, other: &SmoothScalar) -> Result<SmoothScalar> {
        let bump = self.merged_bump(other)?;
        let mut terms = self.terms.clone();
        if let Some(b) = &bump {
            for (&e, t) in &other.terms {
                Self::insert_term(&mut terms, b.u(), e, t.clone());
            }
        }
        Ok(SmoothScalar { base: &self.base + &other.base, bump, terms }.normalized())
    }

    pub fn try_sub(&self, other: &SmoothScalar) -> Result<SmoothScalar> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &SmoothScalar) -> Result<SmoothScalar> {
        let bump = self.merged_bump(other)?;
        let base = &self.base * &other.base;
        let mut terms = BTreeMap::new();
        if let Some(b) = &bump {
            let u = b.u();
            for (&e, t) in &self.terms {
                Self::insert_term(&mut terms, u, e, BumpTerm { m: t.m, poly: &t.poly * &other.base });
            }
            for (&e, t) in &other.terms {
                Self::insert_term(&mut terms, u, e, BumpTerm { m: t.m, poly: &t.poly * &self.base });
            }
            for (&ea, ta) in &self.terms {
                for (&eb, tb) in &other.terms {
                    Self::insert_term(
                        &mut terms,
                        u,
                        ea + eb,
                        BumpTerm { m: ta.m + tb.m, poly: &ta.poly * &tb.poly },
                    );
                }
            }
        }
        Ok(SmoothScalar { base, bump, terms }.normalized())
    }

    pub fn scale(&self, c: &Rational) -> SmoothScalar {
        SmoothScalar {
            base: self.base.scale(c),
            bump: self.bump.clone(),
            terms: self
                .terms
                .iter()
                .map(|(&e, t)| (e, BumpTerm { m: t.m, poly: t.poly.scale(c) }))
                .filter(|(_, t)| !t.poly.is_zero())
                .collect(),
        }
        .normalized()
    }

    /// Multiplication by a polynomial never conflicts with the bump.
    pub fn mul_poly(&self, p: &Poly) -> SmoothScalar {
        self.try_mul(&SmoothScalar::from_poly(p.clone())).expect("polynomial factor carries no bump")
    }

    pub fn neg(&self) -> SmoothScalar {
        self.scale(&rat(-1, 1))
    }

    fn normalized(mut self) -> SmoothScalar {
        if self.terms.is_empty() {
            self.bump = None;
        }
        self
    }

    /// Coordinate partial `∂/∂z_i`.
    pub fn partial(&self, i: usize) -> SmoothScalar {
        let base = self.base.partial(i);
        let mut terms = BTreeMap::new();
        if let Some(b) = &self.bump {
            let u = b.u();
            let du = u.partial(i);
            // ∂(B^e P u^{−m}) = B^e u^{−(m+2)} [e P ∂u + u² ∂P − m u P ∂u]
            for (&e, t) in &self.terms {
                let p = &t.poly;
                let e_term = (&du * p).scale(&Rational::from_integer(e.into()));
                let d_term = &(u * u) * &p.partial(i);
                let m_term = (&(u * p) * &du).scale(&Rational::from_integer(t.m.into()));
                let poly = &(&e_term + &d_term) - &m_term;
                Self::insert_term(&mut terms, u, e, BumpTerm { m: t.m + 2, poly });
            }
        }
        SmoothScalar { base, bump: self.bump.clone(), terms }.normalized()
    }

    /// Applies `X_1..X_n, Y_1..Y_n` (`j < 2n`) or `T` (`j = 2n`), 0-based.
    pub fn frame_derivative(&self, j: usize) -> SmoothScalar {
        let nvars = self.nvars();
        assert!(nvars % 2 == 1, "frame fields need 2n+1 coordinates");
        let n = (nvars - 1) / 2;
        assert!(j <= 2 * n, "frame index {j} out of range");
        let dj = self.partial(j);
        if j == 2 * n {
            return dj;
        }
        let dt = self.partial(2 * n);
        // X_j = ∂x_j − (y_j/2)∂t,  Y_j = ∂y_j + (x_j/2)∂t
        let (other, sign) = if j < n { (n + j, -1) } else { (j - n, 1) };
        let coeff = Poly::var(nvars, other).scale(&rat(sign, 2));
        dj.try_add(&dt.mul_poly(&coeff)).expect("same bump")
    }

    /// Horizontal derivative; `j < 2n` in 0-based frame order.
    pub fn horizontal_derivative(&self, j: usize) -> SmoothScalar {
        assert!(j < self.nvars() - 1, "horizontal index {j} out of range");
        self.frame_derivative(j)
    }

    /// Substitutes polynomial arguments for the variables; polynomial scalars only.
    pub fn compose(&self, args: &[Poly]) -> SmoothScalar {
        assert!(self.terms.is_empty(), "composition is only defined for polynomial scalars");
        SmoothScalar::from_poly(self.base.compose(args))
    }

    pub fn eval_f64(&self, z: &[f64]) -> f64 {
        self.compile().eval(z)
    }

    /// Exact value; bump-carrying scalars are exact only outside their support.
    pub fn eval_exact(&self, z: &[Rational]) -> Result<Rational> {
        let base = self.base.eval_rational(z);
        if let Some(b) = &self.bump {
            if b.u().eval_rational(z) > Rational::zero() {
                return Err(Error::Internal(
                    "bump-supported scalar has no exact value inside its support".into(),
                ));
            }
        }
        Ok(base)
    }

    pub fn compile(&self) -> CompiledScalar {
        CompiledScalar {
            base: self.base.compile(),
            bump: self.bump.clone(),
            terms: self.terms.iter().map(|(&e, t)| (e as f64, t.m as f64, t.poly.compile())).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "base": self.base.to_serial() });
        if let Some(b) = &self.bump {
            v["bump"] = json!({
                "center": b.center.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "radius": b.radius.to_string(),
                "axes": b.axes,
            });
            v["bump_terms"] = self
                .terms
                .iter()
                .map(|(e, t)| json!({ "power": e, "denominator_power": t.m, "poly": t.poly.to_serial() }))
                .collect();
        }
        v
    }
}

impl PartialEq for SmoothScalar {
    fn eq(&self, other: &Self) -> bool {
        if self.terms.is_empty() && other.terms.is_empty() {
            return self.base == other.base;
        }
        self.try_sub(other).map(|d| d.is_zero()).unwrap_or(false)
    }
}

impl Eq for SmoothScalar {}

impl From<Poly> for SmoothScalar {
    fn from(p: Poly) -> Self {
        SmoothScalar::from_poly(p)
    }
}

/// Float evaluator for a [`SmoothScalar`].
#[derive(Clone, Debug)]
pub struct CompiledScalar {
    base: CompiledPoly,
    bump: Option<Arc<Bump>>,
    terms: Vec<(f64, f64, CompiledPoly)>,
}

impl CompiledScalar {
    pub fn eval(&self, z: &[f64]) -> f64 {
        let mut v = self.base.eval(z);
        if let Some(b) = &self.bump {
            if self.terms.is_empty() || !b.active_f64(z) {
                return v;
            }
            let u = 1.0 - b.r2_f64(z);
            let lu = u.ln();
            for (e, m, p) in &self.terms {
                v += (-e / u - m * lu).exp() * p.eval(z);
            }
        }
        v
    }
}

/// Random polynomials and scalars for property tests.
#[doc(hidden)]
pub mod testing {
    use rand::Rng;

    use super::*;

    /// Random polynomial with up to `nterms` terms of degree ≤ `max_deg` and small rational coefficients.
    pub fn random_poly<R: Rng>(rng: &mut R, nvars: usize, max_deg: u32, nterms: usize) -> Poly {
        let mut p = Poly::zero(nvars);
        for _ in 0..nterms {
            let mut e = vec![0u32; nvars];
            let deg = rng.gen_range(0..=max_deg);
            for _ in 0..deg {
                e[rng.gen_range(0..nvars)] += 1;
            }
            let num = rng.gen_range(-5..=5);
            let den = rng.gen_range(1..=4);
            p.add_term(Monomial(e), rat(num, den));
        }
        p
    }

    pub fn random_rational<R: Rng>(rng: &mut R) -> Rational {
        rat(rng.gen_range(-20..=20), rng.gen_range(1..=7))
    }
}

#[cfg(test)]
mod tests {
    use super::testing::random_poly;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(i: usize) -> SmoothScalar {
        SmoothScalar::var(3, i)
    }

    fn unit_bump() -> Arc<Bump> {
        Arc::new(Bump::ball(vec![rat(0, 1); 3], rat(1, 1)).unwrap())
    }

    #[test]
    fn ring_examples() {
        let (x, y) = (v(0), v(1));
        let lhs = x.try_add(&y).unwrap().try_mul(&x.try_sub(&y).unwrap()).unwrap();
        let rhs = x.try_mul(&x).unwrap().try_sub(&y.try_mul(&y).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(x.try_add(&SmoothScalar::zero(3)).unwrap(), x);
        assert_eq!(x.scale(&rat(3, 1)).scale(&rat(2, 3)), x.scale(&rat(2, 1)));
    }

    #[test]
    fn incompatible_bumps() {
        let a = SmoothScalar::bumped(Poly::one(3), unit_bump()).unwrap();
        let other = Arc::new(Bump::ball(vec![rat(0, 1); 3], rat(1, 2)).unwrap());
        let b = SmoothScalar::bumped(Poly::one(3), other).unwrap();
        assert_eq!(a.try_mul(&b), Err(Error::IncompatibleBump));
        assert_eq!(a.try_add(&b), Err(Error::IncompatibleBump));
        assert!(a.try_mul(&a).is_ok());
    }

    #[test]
    fn partial_examples() {
        let xt2 = v(0).try_mul(&v(2)).unwrap().try_mul(&v(2)).unwrap();
        assert_eq!(xt2.partial(2), v(0).try_mul(&v(2)).unwrap().scale(&rat(2, 1)));
        assert!(SmoothScalar::constant(3, rat(7, 2)).partial(0).is_zero());
    }

    #[test]
    fn frame_examples() {
        assert_eq!(v(2).horizontal_derivative(0), v(1).scale(&rat(-1, 2)));
        assert_eq!(v(2).horizontal_derivative(1), v(0).scale(&rat(1, 2)));
        assert_eq!(v(0).horizontal_derivative(0), SmoothScalar::one(3));
    }

    #[test]
    fn evaluation_examples() {
        let p = v(0).try_mul(&v(0)).unwrap().try_add(&v(2)).unwrap();
        assert_eq!(p.eval_exact(&[rat(2, 1), rat(0, 1), rat(3, 1)]).unwrap(), rat(7, 1));
        let base = Poly::constant(3, rat(3, 1));
        let s = SmoothScalar::bumped(base, unit_bump()).unwrap();
        assert!((s.eval_f64(&[0.0, 0.0, 0.0]) - 3.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(s.eval_f64(&[1.5, 0.0, 0.0]), 0.0);
        assert_eq!(s.eval_f64(&[1.0 - 1e-12, 0.0, 0.0]), 0.0);
        assert_eq!(s.partial(0).eval_f64(&[0.0, 2.0, 0.0]), 0.0);
    }

    fn finite_difference_check(s: &SmoothScalar, rng: &mut ChaCha8Rng) {
        let h = 1e-5;
        let c = s.compile();
        for _ in 0..20 {
            let z: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.6..0.6)).collect();
            for i in 0..3 {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += h;
                zm[i] -= h;
                let fd = (c.eval(&zp) - c.eval(&zm)) / (2.0 * h);
                let exact = s.partial(i).eval_f64(&z);
                let scale = exact.abs().max(1.0);
                assert!((fd - exact).abs() / scale < 1e-6, "i={i} z={z:?} fd={fd} exact={exact}");
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let p = random_poly(&mut rng, 3, 3, 4);
            finite_difference_check(&SmoothScalar::from_poly(p.clone()), &mut rng);
            let s = SmoothScalar::bumped(p, unit_bump()).unwrap();
            finite_difference_check(&s, &mut rng);
            finite_difference_check(&s.partial(1), &mut rng);
        }
    }

    #[test]
    fn mixed_partials_commute_with_bump() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = SmoothScalar::bumped(random_poly(&mut rng, 3, 2, 3), unit_bump()).unwrap();
        assert_eq!(s.partial(0).partial(2), s.partial(2).partial(0));
    }

    #[test]
    fn commutator_on_bump_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = SmoothScalar::bumped(random_poly(&mut rng, 3, 2, 3), unit_bump()).unwrap();
        let xy = s.frame_derivative(1).frame_derivative(0);
        let yx = s.frame_derivative(0).frame_derivative(1);
        assert_eq!(xy.try_sub(&yx).unwrap(), s.frame_derivative(2));
    }
}
