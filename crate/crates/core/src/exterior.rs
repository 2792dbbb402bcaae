//! Exterior algebras over the left-invariant frame and coframe.
//!
//! Frame index `i` (0-based) means `X_{i+1}` for `i < n`, `Y_{i-n+1}` for
//! `n ≤ i < 2n` and `T` for `i = 2n`; dually `θ_{i+1}` and `θ`. The positive
//! volume element is `X_1∧…∧X_n∧Y_1∧…∧Y_n∧T`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::group::{Coord, Point};
use crate::poly::{rat, Poly, PolyTerm, Rational};
use crate::scalar::{CompiledScalar, SmoothScalar};

/// Strictly increasing set of frame indices, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(u32);

impl MultiIndex {
    pub const EMPTY: MultiIndex = MultiIndex(0);

    pub fn from_indices(indices: &[usize]) -> Self {
        let mut bits = 0u32;
        for &i in indices {
            assert!(i < 32, "frame index {i} too large");
            bits |= 1 << i;
        }
        MultiIndex(bits)
    }

    pub fn single(i: usize) -> Self {
        MultiIndex(1 << i)
    }

    pub fn bits(&self) -> u32 {
        self.0
    }

    pub fn degree(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }

    pub fn is_disjoint(&self, other: &MultiIndex) -> bool {
        self.0 & other.0 == 0
    }

    pub fn union(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0 | other.0)
    }

    pub fn without(&self, i: usize) -> MultiIndex {
        MultiIndex(self.0 & !(1 << i))
    }

    /// Complement inside `{0..dim}`.
    pub fn complement(&self, dim: usize) -> MultiIndex {
        MultiIndex(!self.0 & ((1u32 << dim) - 1))
    }

    /// Sign of `e_A ∧ e_B` relative to `e_{A∪B}`, or `None` if they overlap.
    pub fn wedge_sign(&self, other: &MultiIndex) -> Option<i32> {
        if !self.is_disjoint(other) {
            return None;
        }
        let mut inversions = 0u32;
        for b in other.indices() {
            inversions += (self.0 >> (b + 1)).count_ones();
        }
        Some(if inversions % 2 == 0 { 1 } else { -1 })
    }

    /// All subsets of `{0..dim}` of cardinality `k`, in increasing index order.
    pub fn all_of_degree(dim: usize, k: usize) -> Vec<MultiIndex> {
        let mut out: Vec<MultiIndex> =
            (0u32..(1u32 << dim)).filter(|b| b.count_ones() as usize == k).map(MultiIndex).collect();
        out.sort_by_key(|m| m.indices());
        out
    }

    /// 1-based indices, as used in scene files.
    pub fn to_one_based(&self) -> Vec<usize> {
        self.indices().into_iter().map(|i| i + 1).collect()
    }

    pub fn from_one_based(indices: &[usize], dim: usize) -> Result<Self> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(Error::Parse(format!("repeated index in {indices:?}")));
        }
        if let Some(&bad) = sorted.iter().find(|&&i| i == 0 || i > dim) {
            return Err(Error::Parse(format!("index {bad} outside 1..={dim}")));
        }
        Ok(MultiIndex::from_indices(&sorted.iter().map(|i| i - 1).collect::<Vec<_>>()))
    }

    pub fn is_horizontal(&self, n: usize) -> bool {
        !self.contains(2 * n)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_one_based())
    }
}

/// Names for basis elements, e.g. `θ_1∧θ` or `X_1∧T`.
pub fn basis_name(n: usize, idx: &MultiIndex, covector: bool) -> String {
    if idx.degree() == 0 {
        return "1".into();
    }
    idx.indices()
        .into_iter()
        .map(|i| match (covector, i) {
            (true, i) if i == 2 * n => "θ".to_string(),
            (true, i) => format!("θ_{}", i + 1),
            (false, i) if i == 2 * n => "T".to_string(),
            (false, i) if i < n => format!("X_{}", i + 1),
            (false, i) => format!("Y_{}", i - n + 1),
        })
        .collect::<Vec<_>>()
        .join("∧")
}

/// A differential form in the left-invariant coframe with [`SmoothScalar`] coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantForm {
    n: usize,
    degree: usize,
    terms: BTreeMap<MultiIndex, SmoothScalar>,
}

impl InvariantForm {
    pub fn zero(n: usize, degree: usize) -> Self {
        InvariantForm { n, degree, terms: BTreeMap::new() }
    }

    pub fn scalar(n: usize, s: SmoothScalar) -> Self {
        InvariantForm::basis(n, MultiIndex::EMPTY, s)
    }

    pub fn basis(n: usize, idx: MultiIndex, coeff: SmoothScalar) -> Self {
        assert_eq!(coeff.nvars(), 2 * n + 1, "coefficient arity");
        assert!(idx.bits() >> (2 * n + 1) == 0, "index outside the frame");
        let mut f = InvariantForm::zero(n, idx.degree());
        if !coeff.is_zero() {
            f.terms.insert(idx, coeff);
        }
        f
    }

    /// `θ_{i+1}` (or `θ` for `i = 2n`) with coefficient 1.
    pub fn coframe(n: usize, i: usize) -> Self {
        InvariantForm::basis(n, MultiIndex::single(i), SmoothScalar::one(2 * n + 1))
    }

    /// Basis element from 0-based indices with coefficient 1.
    pub fn basis_one(n: usize, indices: &[usize]) -> Self {
        InvariantForm::basis(n, MultiIndex::from_indices(indices), SmoothScalar::one(2 * n + 1))
    }

    pub fn theta(n: usize) -> Self {
        InvariantForm::coframe(n, 2 * n)
    }

    /// `dθ = −Σ_j θ_j∧θ_{j+n}`.
    pub fn dtheta(n: usize) -> Self {
        let mut f = InvariantForm::zero(n, 2);
        for j in 0..n {
            f.terms.insert(
                MultiIndex::from_indices(&[j, j + n]),
                SmoothScalar::constant(2 * n + 1, rat(-1, 1)),
            );
        }
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nvars(&self) -> usize {
        2 * self.n + 1
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &SmoothScalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> SmoothScalar {
        self.terms.get(idx).cloned().unwrap_or_else(|| SmoothScalar::zero(self.nvars()))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_compatible(&self, other: &InvariantForm) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if self.degree != other.degree && !self.is_zero() && !other.is_zero() {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        Ok(())
    }

    fn add_term(&mut self, idx: MultiIndex, c: SmoothScalar) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        match self.terms.remove(&idx) {
            None => {
                self.terms.insert(idx, c);
            }
            Some(old) => {
                let s = old.try_add(&c)?;
                if !s.is_zero() {
                    self.terms.insert(idx, s);
                }
            }
        }
        Ok(())
    }

    pub fn try_add(&self, other: &InvariantForm) -> Result<InvariantForm> {
        self.check_compatible(other)?;
        let mut out = if self.is_zero() {
            InvariantForm { degree: other.degree, ..self.clone() }
        } else {
            self.clone()
        };
        for (idx, c) in &other.terms {
            out.add_term(*idx, c.clone())?;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &InvariantForm) -> Result<InvariantForm> {
        self.try_add(&other.scale(&rat(-1, 1)))
    }

    pub fn scale(&self, c: &Rational) -> InvariantForm {
        InvariantForm {
            n: self.n,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(i, s)| (*i, s.scale(c)))
                .filter(|(_, s)| !s.is_zero())
                .collect(),
        }
    }

    pub fn mul_scalar(&self, s: &SmoothScalar) -> Result<InvariantForm> {
        let mut out = InvariantForm::zero(self.n, self.degree);
        for (idx, c) in &self.terms {
            out.add_term(*idx, c.try_mul(s)?)?;
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &InvariantForm) -> Result<InvariantForm> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let mut out = InvariantForm::zero(self.n, self.degree + other.degree);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                let Some(sign) = ia.wedge_sign(ib) else { continue };
                let c = ca.try_mul(cb)?;
                out.add_term(ia.union(ib), if sign < 0 { c.neg() } else { c })?;
            }
        }
        Ok(out)
    }

    /// `d(θ^I)` for a basis element with constant coefficient.
    fn d_basis(n: usize, idx: &MultiIndex) -> InvariantForm {
        if !idx.contains(2 * n) {
            return InvariantForm::zero(n, idx.degree() + 1);
        }
        // θ^I = θ^{I'}∧θ, so d(θ^I) = (−1)^{|I'|} θ^{I'}∧dθ
        let rest = idx.without(2 * n);
        let head = InvariantForm::basis(n, rest, SmoothScalar::one(2 * n + 1));
        let out = head.wedge(&InvariantForm::dtheta(n)).expect("constant coefficients");
        if rest.degree() % 2 == 1 {
            out.scale(&rat(-1, 1))
        } else {
            out
        }
    }

    pub fn exterior_derivative(&self) -> InvariantForm {
        let n = self.n;
        let mut out = InvariantForm::zero(n, self.degree + 1);
        for (idx, c) in &self.terms {
            for i in 0..=2 * n {
                if idx.contains(i) {
                    continue;
                }
                let dc = c.frame_derivative(i);
                if dc.is_zero() {
                    continue;
                }
                let sign = MultiIndex::single(i).wedge_sign(idx).unwrap();
                let dc = if sign < 0 { dc.neg() } else { dc };
                out.add_term(idx.union(&MultiIndex::single(i)), dc).expect("single bump per form");
            }
            let db = InvariantForm::d_basis(n, idx);
            for (j, b) in &db.terms {
                out.add_term(*j, b.try_mul(c).expect("constant factor")).expect("single bump per form");
            }
        }
        out
    }

    /// Splits `λ = λ_h1 + μ∧θ` with `λ_h1` free of `θ`.
    pub fn horizontal_decompose(&self) -> (InvariantForm, InvariantForm) {
        let n = self.n;
        let mut h1 = InvariantForm::zero(n, self.degree);
        let mut mu = InvariantForm::zero(n, self.degree.saturating_sub(1));
        for (idx, c) in &self.terms {
            if idx.contains(2 * n) {
                // θ is the largest index, so θ^I = θ^{I'}∧θ with no sign
                mu.terms.insert(idx.without(2 * n), c.clone());
            } else {
                h1.terms.insert(*idx, c.clone());
            }
        }
        (h1, mu)
    }

    pub fn is_horizontal(&self) -> bool {
        self.terms.keys().all(|i| i.is_horizontal(self.n))
    }

    /// Membership test via the θ-free part.
    pub fn horizontal_part(&self) -> InvariantForm {
        self.horizontal_decompose().0
    }

    pub fn map_coeffs<F: Fn(&SmoothScalar) -> SmoothScalar>(&self, f: F) -> InvariantForm {
        InvariantForm {
            n: self.n,
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|(i, c)| (*i, f(c)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// `⟨v | ω(p)⟩`.
    pub fn pair<S: Coord>(&self, v: &MultiVector<S>, p: &Point<S>) -> Result<S> {
        pair(v, self, p)
    }

    pub fn compile(&self) -> CompiledForm {
        CompiledForm {
            degree: self.degree,
            terms: self.terms.iter().map(|(i, c)| (*i, c.compile())).collect(),
        }
    }

    /// Canonical scene-file serialization; fails if a coefficient carries a bump part.
    pub fn to_serial(&self) -> Result<FormSerial> {
        let terms = self
            .sorted_terms()
            .into_iter()
            .map(|(i, c)| {
                let poly = c
                    .as_poly()
                    .ok_or_else(|| Error::Internal("bump-supported coefficient has no polynomial serialization".into()))?;
                Ok(FormTermSerial { indices: i.to_one_based(), coeff: poly.to_serial() })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FormSerial { degree: self.degree, terms })
    }

    pub fn from_serial(n: usize, s: &FormSerial) -> Result<InvariantForm> {
        let dim = 2 * n + 1;
        let mut out = InvariantForm::zero(n, s.degree);
        for t in &s.terms {
            let idx = MultiIndex::from_one_based(&t.indices, dim)?;
            if idx.degree() != s.degree {
                return Err(Error::DegreeMismatch { expected: s.degree, found: idx.degree() });
            }
            let p = Poly::from_serial(dim, &t.coeff)?;
            out.add_term(idx, SmoothScalar::from_poly(p))?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .sorted_terms()
            .into_iter()
            .map(|(i, c)| {
                json!({
                    "indices": i.to_one_based(),
                    "basis": basis_name(self.n, &i, true),
                    "coeff": match c.as_poly() {
                        Some(p) => serde_json::to_value(p.to_serial()).unwrap(),
                        None => c.to_json(),
                    },
                })
            })
            .collect();
        json!({ "degree": self.degree, "terms": terms })
    }

    fn sorted_terms(&self) -> Vec<(MultiIndex, &SmoothScalar)> {
        let mut v: Vec<(MultiIndex, &SmoothScalar)> = self.terms.iter().map(|(i, c)| (*i, c)).collect();
        v.sort_by_key(|(i, _)| i.indices());
        v
    }
}

impl fmt::Display for InvariantForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .sorted_terms()
            .into_iter()
            .map(|(i, c)| match c.as_poly() {
                Some(p) => format!("({p})·{}", basis_name(self.n, &i, true)),
                None => format!("(bump…)·{}", basis_name(self.n, &i, true)),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSerial {
    pub degree: usize,
    pub terms: Vec<FormTermSerial>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormTermSerial {
    pub indices: Vec<usize>,
    pub coeff: Vec<PolyTerm>,
}

/// Float evaluator for an [`InvariantForm`].
#[derive(Clone, Debug)]
pub struct CompiledForm {
    degree: usize,
    terms: Vec<(MultiIndex, CompiledScalar)>,
}

impl CompiledForm {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `⟨v | ω(z)⟩` at float coordinates `z`.
    pub fn pair(&self, v: &MultiVector<f64>, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(i, c)| match v.terms.get(i) {
                Some(vi) if *vi != 0.0 => vi * c.eval(z),
                _ => 0.0,
            })
            .sum()
    }

    pub fn eval(&self, z: &[f64]) -> Vec<(MultiIndex, f64)> {
        self.terms.iter().map(|(i, c)| (*i, c.eval(z))).collect()
    }
}

/// A form written in the coordinate coframe `dx_1..dx_n, dy_1..dy_n, dt`.
///
/// Index `i` refers to `dz_i` in the flat coordinate order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordinateForm(InvariantForm);

impl CoordinateForm {
    pub fn zero(n: usize, degree: usize) -> Self {
        CoordinateForm(InvariantForm::zero(n, degree))
    }

    pub fn basis(n: usize, idx: MultiIndex, coeff: SmoothScalar) -> Self {
        CoordinateForm(InvariantForm::basis(n, idx, coeff))
    }

    pub fn dz(n: usize, i: usize) -> Self {
        CoordinateForm(InvariantForm::coframe(n, i))
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn degree(&self) -> usize {
        self.0.degree
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &SmoothScalar)> {
        self.0.terms()
    }

    pub fn try_add(&self, other: &CoordinateForm) -> Result<CoordinateForm> {
        Ok(CoordinateForm(self.0.try_add(&other.0)?))
    }

    pub fn wedge(&self, other: &CoordinateForm) -> Result<CoordinateForm> {
        Ok(CoordinateForm(self.0.wedge(&other.0)?))
    }

    pub fn mul_scalar(&self, s: &SmoothScalar) -> Result<CoordinateForm> {
        Ok(CoordinateForm(self.0.mul_scalar(s)?))
    }

    pub fn compile(&self) -> CompiledForm {
        self.0.compile()
    }

    /// `dt = θ − ½Σ(y_j θ_j − x_j θ_{j+n})`, `dx_j = θ_j`, `dy_j = θ_{j+n}`.
    pub fn to_invariant(&self) -> Result<InvariantForm> {
        let n = self.n();
        let images: Vec<InvariantForm> = (0..=2 * n).map(|i| dz_image(n, i)).collect();
        substitute(&self.0, &images)
    }

    pub fn from_invariant(form: &InvariantForm) -> Result<CoordinateForm> {
        let n = form.n;
        let images: Vec<InvariantForm> = (0..=2 * n).map(|i| theta_image(n, i)).collect();
        Ok(CoordinateForm(substitute(form, &images)?))
    }
}

fn dz_image(n: usize, i: usize) -> InvariantForm {
    let nv = 2 * n + 1;
    let mut f = InvariantForm::coframe(n, i);
    if i == 2 * n {
        for j in 0..n {
            let y = SmoothScalar::var(nv, n + j).scale(&rat(-1, 2));
            let x = SmoothScalar::var(nv, j).scale(&rat(1, 2));
            f = f
                .try_add(&InvariantForm::basis(n, MultiIndex::single(j), y))
                .and_then(|f| f.try_add(&InvariantForm::basis(n, MultiIndex::single(n + j), x)))
                .expect("polynomial coefficients");
        }
    }
    f
}

fn theta_image(n: usize, i: usize) -> InvariantForm {
    let nv = 2 * n + 1;
    let mut f = InvariantForm::coframe(n, i);
    if i == 2 * n {
        for j in 0..n {
            let y = SmoothScalar::var(nv, n + j).scale(&rat(1, 2));
            let x = SmoothScalar::var(nv, j).scale(&rat(-1, 2));
            f = f
                .try_add(&InvariantForm::basis(n, MultiIndex::single(j), y))
                .and_then(|f| f.try_add(&InvariantForm::basis(n, MultiIndex::single(n + j), x)))
                .expect("polynomial coefficients");
        }
    }
    f
}

fn substitute(form: &InvariantForm, images: &[InvariantForm]) -> Result<InvariantForm> {
    let n = form.n;
    let mut out = InvariantForm::zero(n, form.degree);
    for (idx, c) in &form.terms {
        let mut prod = InvariantForm::scalar(n, c.clone());
        for i in idx.indices() {
            prod = prod.wedge(&images[i])?;
        }
        out = out.try_add(&prod)?;
    }
    Ok(out)
}

/// A multivector in the left-invariant frame with numeric coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiVector<S = f64> {
    n: usize,
    degree: usize,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Coord> MultiVector<S> {
    pub fn zero(n: usize, degree: usize) -> Self {
        MultiVector { n, degree, terms: BTreeMap::new() }
    }

    /// Basis element `W_I` from 0-based indices.
    pub fn basis(n: usize, indices: &[usize]) -> Self {
        MultiVector::from_terms(n, indices.len(), [(MultiIndex::from_indices(indices), S::one())])
    }

    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, S)>>(n: usize, degree: usize, terms: I) -> Self {
        let mut v = MultiVector::zero(n, degree);
        for (i, c) in terms {
            assert_eq!(i.degree(), degree, "multivector degree");
            v.add_term(i, c);
        }
        v
    }

    /// Degree-one vector with frame coefficients `c` (length ≤ 2n+1).
    pub fn from_vector(n: usize, c: &[S]) -> Self {
        MultiVector::from_terms(n, 1, c.iter().enumerate().map(|(i, ci)| (MultiIndex::single(i), ci.clone())))
    }

    pub fn scalar(n: usize, c: S) -> Self {
        MultiVector::from_terms(n, 0, [(MultiIndex::EMPTY, c)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn coeff(&self, i: &MultiIndex) -> S {
        self.terms.get(i).cloned().unwrap_or_else(S::zero)
    }

    fn add_term(&mut self, i: MultiIndex, c: S) {
        if c == S::zero() {
            return;
        }
        let new = self.terms.get(&i).cloned().unwrap_or_else(S::zero) + c;
        if new == S::zero() {
            self.terms.remove(&i);
        } else {
            self.terms.insert(i, new);
        }
    }

    pub fn add(&self, other: &MultiVector<S>) -> MultiVector<S> {
        let mut out = self.clone();
        if out.is_zero() {
            out.degree = other.degree;
        }
        for (i, c) in &other.terms {
            out.add_term(*i, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &MultiVector<S>) -> MultiVector<S> {
        self.add(&other.scale(&-S::one()))
    }

    pub fn scale(&self, c: &S) -> MultiVector<S> {
        MultiVector::from_terms(self.n, self.degree, self.terms.iter().map(|(i, v)| (*i, v.clone() * c.clone())))
    }

    pub fn wedge(&self, other: &MultiVector<S>) -> MultiVector<S> {
        let mut out = MultiVector::zero(self.n, self.degree + other.degree);
        for (ia, ca) in &self.terms {
            for (ib, cb) in &other.terms {
                if let Some(sign) = ia.wedge_sign(ib) {
                    let c = ca.clone() * cb.clone();
                    out.add_term(ia.union(ib), if sign < 0 { -c } else { c });
                }
            }
        }
        out
    }

    /// `*(W_I) = sign(I, I^c) W_{I^c}`.
    pub fn hodge(&self) -> MultiVector<S> {
        let dim = 2 * self.n + 1;
        let mut out = MultiVector::zero(self.n, dim - self.degree);
        for (i, c) in &self.terms {
            let comp = i.complement(dim);
            let sign = i.wedge_sign(&comp).unwrap();
            out.add_term(comp, if sign < 0 { -c.clone() } else { c.clone() });
        }
        out
    }

    /// Interior product by a degree-one vector using the frame inner product.
    pub fn interior(&self, v: &MultiVector<S>) -> MultiVector<S> {
        assert_eq!(v.degree, 1, "interior product needs a vector");
        let mut out = MultiVector::zero(self.n, self.degree.saturating_sub(1));
        for (vi, vc) in &v.terms {
            let i = vi.indices()[0];
            for (idx, c) in &self.terms {
                if !idx.contains(i) {
                    continue;
                }
                let before = (idx.bits() & ((1u32 << i) - 1)).count_ones();
                let v = vc.clone() * c.clone();
                out.add_term(idx.without(i), if before % 2 == 1 { -v } else { v });
            }
        }
        out
    }

    /// Inner product in the frame metric.
    pub fn dot(&self, other: &MultiVector<S>) -> S {
        self.terms
            .iter()
            .fold(S::zero(), |acc, (i, c)| acc + c.clone() * other.coeff(i))
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.to_f64().powi(2)).sum::<f64>().sqrt()
    }

    /// Strips the `T` slot: the `τ` with `τ∧T = self`, when every term contains `T`.
    pub fn split_t(&self) -> Option<MultiVector<S>> {
        let t = 2 * self.n;
        if !self.terms.keys().all(|i| i.contains(t)) {
            return None;
        }
        Some(MultiVector::from_terms(
            self.n,
            self.degree - 1,
            self.terms.iter().map(|(i, c)| (i.without(t), c.clone())),
        ))
    }

    pub fn to_f64(&self) -> MultiVector<f64> {
        MultiVector::from_terms(self.n, self.degree, self.terms.iter().map(|(i, c)| (*i, c.to_f64())))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut terms: Vec<(MultiIndex, f64)> = self.terms.iter().map(|(i, c)| (*i, c.to_f64())).collect();
        terms.sort_by_key(|(i, _)| i.indices());
        json!(terms
            .into_iter()
            .map(|(i, c)| json!({ "indices": i.to_one_based(), "basis": basis_name(self.n, &i, false), "coeff": c }))
            .collect::<Vec<_>>())
    }
}

impl<S: Coord> Serialize for MultiVector<S> {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        self.to_json().serialize(s)
    }
}

impl MultiVector<f64> {
    pub fn max_abs_diff(&self, other: &MultiVector<f64>) -> f64 {
        self.sub(other).terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }
}

/// `⟨v | ω⟩` evaluated at `p`, with `⟨W_I | θ^J⟩ = δ_{IJ}`.
pub fn pair<S: Coord>(v: &MultiVector<S>, omega: &InvariantForm, p: &Point<S>) -> Result<S> {
    if v.degree != omega.degree && !v.is_zero() && !omega.is_zero() {
        return Err(Error::DegreeMismatch { expected: omega.degree, found: v.degree });
    }
    let mut acc = S::zero();
    for (i, c) in &v.terms {
        if let Some(w) = omega.terms.get(i) {
            acc = acc + c.clone() * S::eval_scalar(w, p.coords())?;
        }
    }
    Ok(acc)
}

/// Random forms for property tests.
#[doc(hidden)]
pub mod testing {
    use rand::Rng;

    use super::*;
    use crate::scalar::testing::random_poly;

    pub fn random_form<R: Rng>(rng: &mut R, n: usize, degree: usize, max_deg: u32, nterms: usize) -> InvariantForm {
        let basis = MultiIndex::all_of_degree(2 * n + 1, degree);
        let mut f = InvariantForm::zero(n, degree);
        for _ in 0..nterms {
            let idx = basis[rng.gen_range(0..basis.len())];
            let c = SmoothScalar::from_poly(random_poly(rng, 2 * n + 1, max_deg, 2));
            f = f.try_add(&InvariantForm::basis(n, idx, c)).unwrap();
        }
        f
    }

    /// Random form built only from horizontal basis elements.
    pub fn random_horizontal_form<R: Rng>(rng: &mut R, n: usize, degree: usize, max_deg: u32, nterms: usize) -> InvariantForm {
        let basis = MultiIndex::all_of_degree(2 * n, degree);
        let mut f = InvariantForm::zero(n, degree);
        if basis.is_empty() {
            return f;
        }
        for _ in 0..nterms {
            let idx = basis[rng.gen_range(0..basis.len())];
            let c = SmoothScalar::from_poly(random_poly(rng, 2 * n + 1, max_deg, 2));
            f = f.try_add(&InvariantForm::basis(n, idx, c)).unwrap();
        }
        f
    }
}
