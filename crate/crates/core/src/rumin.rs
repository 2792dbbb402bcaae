//! The Rumin complex on `H^n`.
//!
//! Low degrees `k ≤ n` are quotients `Λ^k h / I^k`, represented by the unique
//! horizontal representative orthogonal to `Im(L)` ("primitive" normal form).
//! High degrees `k ≥ n+1` are the subspaces `J^k = {λ : λ∧θ = λ∧dθ = 0}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{InvariantForm, MultiIndex};
use crate::linalg::{self, RMatrix};
use crate::poly::rat;
use crate::scalar::SmoothScalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Quotient,
    Subspace,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuminClass {
    degree: usize,
    representative: InvariantForm,
    regime: Regime,
}

impl RuminClass {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn representative(&self) -> &InvariantForm {
        &self.representative
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn is_zero(&self) -> bool {
        self.representative.is_zero()
    }
}

/// Matrices of `L(λ) = λ∧dθ` between horizontal exterior powers.
#[derive(Clone, Debug)]
pub struct LefschetzTable {
    n: usize,
    /// `bases[k]`: canonical basis of `Λ^k h_1`.
    bases: Vec<Vec<MultiIndex>>,
    /// `matrices[k]`: `L: Λ^k h_1 → Λ^{k+2} h_1`, rows indexed by the target basis.
    matrices: Vec<RMatrix>,
    inverse: RMatrix,
}

impl LefschetzTable {
    pub fn new(n: usize) -> Result<Self> {
        let bases: Vec<Vec<MultiIndex>> = (0..=2 * n).map(|k| MultiIndex::all_of_degree(2 * n, k)).collect();
        let mut matrices = Vec::new();
        for k in 0..=2 * n {
            let target = bases.get(k + 2).cloned().unwrap_or_default();
            let mut m = vec![vec![rat(0, 1); bases[k].len()]; target.len()];
            for (col, src) in bases[k].iter().enumerate() {
                for j in 0..n {
                    let pair = MultiIndex::from_indices(&[j, j + n]);
                    if let Some(sign) = src.wedge_sign(&pair) {
                        let row = target.iter().position(|t| *t == src.union(&pair)).unwrap();
                        // dθ carries −1 on every θ_j∧θ_{j+n}
                        m[row][col] -= rat(sign as i64, 1);
                    }
                }
            }
            matrices.push(m);
        }
        let square = &matrices[n - 1];
        let inverse = linalg::inverse(square)
            .ok_or_else(|| Error::Internal(format!("L is not invertible on Λ^{} h_1", n - 1)))?;
        Ok(LefschetzTable { n, bases, matrices, inverse })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self, k: usize) -> &[MultiIndex] {
        &self.bases[k]
    }

    pub fn matrix(&self, k: usize) -> &RMatrix {
        &self.matrices[k]
    }

    pub fn inverse_matrix(&self) -> &RMatrix {
        &self.inverse
    }
}

/// Precomputed tables for one `n`; build once and share.
#[derive(Clone, Debug)]
pub struct RuminComplex {
    n: usize,
    lefschetz: LefschetzTable,
    /// Orthogonal projectors off `Im(L)` on `Λ^k h_1`, for `k ≤ n`.
    projectors: Vec<RMatrix>,
}

fn apply_matrix(
    n: usize,
    m: &RMatrix,
    src: &[MultiIndex],
    dst: &[MultiIndex],
    form: &InvariantForm,
    degree: usize,
) -> Result<InvariantForm> {
    let coeffs: Vec<SmoothScalar> = src.iter().map(|i| form.coeff(i)).collect();
    let mut out = InvariantForm::zero(n, degree);
    for (row, target) in m.iter().zip(dst) {
        let mut acc = SmoothScalar::zero(2 * n + 1);
        for (a, c) in row.iter().zip(&coeffs) {
            if *a != rat(0, 1) && !c.is_zero() {
                acc = acc.try_add(&c.scale(a))?;
            }
        }
        out = out.try_add(&InvariantForm::basis(n, *target, acc))?;
    }
    Ok(out)
}

impl RuminComplex {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidScene("Heisenberg group needs n >= 1".into()));
        }
        let lefschetz = LefschetzTable::new(n)?;
        let projectors = (0..=n)
            .map(|k| {
                let dim = lefschetz.bases[k].len();
                if k < 2 {
                    linalg::identity(dim)
                } else {
                    linalg::complement_projector(&lefschetz.matrices[k - 2], dim)
                }
            })
            .collect();
        Ok(RuminComplex { n, lefschetz, projectors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lefschetz_table(&self) -> &LefschetzTable {
        &self.lefschetz
    }

    fn check_n(&self, form: &InvariantForm) -> Result<()> {
        if form.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: form.n() });
        }
        Ok(())
    }

    /// Exact test of `λ∧θ = 0` and `λ∧dθ = 0`.
    pub fn j_membership(&self, form: &InvariantForm) -> Result<bool> {
        self.check_n(form)?;
        if form.degree() < self.n + 1 {
            return Err(Error::DegreeMismatch { expected: self.n + 1, found: form.degree() });
        }
        let n = self.n;
        Ok(form.wedge(&InvariantForm::theta(n))?.is_zero()
            && form.wedge(&InvariantForm::dtheta(n))?.is_zero())
    }

    /// Canonical representative of the class of `λ` in `Λ^k h / I^k`, `k ≤ n`.
    pub fn quotient_normal_form(&self, form: &InvariantForm) -> Result<RuminClass> {
        self.check_n(form)?;
        let k = form.degree();
        if k > self.n {
            return Err(Error::DegreeMismatch { expected: self.n, found: k });
        }
        let h1 = form.horizontal_part();
        let basis = &self.lefschetz.bases[k];
        let representative = apply_matrix(self.n, &self.projectors[k], basis, basis, &h1, k)?;
        Ok(RuminClass { degree: k, representative, regime: Regime::Quotient })
    }

    /// Wraps a `J^k` element, checking membership.
    pub fn subspace_class(&self, form: &InvariantForm) -> Result<RuminClass> {
        if !self.j_membership(form)? {
            return Err(Error::NotInJ { degree: form.degree() });
        }
        Ok(RuminClass { degree: form.degree(), representative: form.clone(), regime: Regime::Subspace })
    }

    /// The class of `λ` in whichever regime its degree falls.
    pub fn class_of(&self, form: &InvariantForm) -> Result<RuminClass> {
        if form.degree() <= self.n {
            self.quotient_normal_form(form)
        } else {
            self.subspace_class(form)
        }
    }

    /// `L(λ) = λ∧dθ`.
    pub fn lefschetz(&self, form: &InvariantForm) -> Result<InvariantForm> {
        self.check_n(form)?;
        form.wedge(&InvariantForm::dtheta(self.n))
    }

    /// `L^{-1}: Λ^{n+1} h_1 → Λ^{n-1} h_1`.
    pub fn lefschetz_inverse(&self, form: &InvariantForm) -> Result<InvariantForm> {
        self.check_n(form)?;
        let n = self.n;
        if form.degree() != n + 1 && !form.is_zero() {
            return Err(Error::DegreeMismatch { expected: n + 1, found: form.degree() });
        }
        if !form.is_horizontal() {
            return Err(Error::Internal("L^{-1} needs a horizontal form".into()));
        }
        let src = &self.lefschetz.bases[n + 1];
        let dst = &self.lefschetz.bases[n - 1];
        apply_matrix(n, &self.lefschetz.inverse, src, dst, form, n - 1)
    }

    /// `D(α) = d(α − θ∧L^{-1}((dα)_{h_1}))` on the stored representative.
    pub fn rumin_d(&self, alpha: &RuminClass) -> Result<RuminClass> {
        let n = self.n;
        if alpha.degree != n || alpha.regime != Regime::Quotient {
            return Err(Error::DegreeMismatch { expected: n, found: alpha.degree });
        }
        let rep = &alpha.representative;
        let d_alpha = rep.exterior_derivative();
        let beta = self.lefschetz_inverse(&d_alpha.horizontal_part())?;
        let corrected = rep.try_sub(&InvariantForm::theta(n).wedge(&beta)?)?;
        let out = corrected.exterior_derivative();
        if !self.j_membership(&out)? {
            return Err(Error::Internal("D produced a form outside J^{n+1}".into()));
        }
        Ok(RuminClass { degree: n + 1, representative: out, regime: Regime::Subspace })
    }

    /// `D` on the class of an arbitrary degree-`n` form.
    pub fn rumin_d_form(&self, form: &InvariantForm) -> Result<RuminClass> {
        self.rumin_d(&self.quotient_normal_form(form)?)
    }

    /// The Rumin differential: `d` off the middle degree, `D` at `k = n`.
    pub fn d_c(&self, omega: &RuminClass) -> Result<RuminClass> {
        let n = self.n;
        let k = omega.degree;
        let dim = 2 * n + 1;
        if k >= dim {
            return Ok(RuminClass {
                degree: k + 1,
                representative: InvariantForm::zero(n, k + 1),
                regime: Regime::Subspace,
            });
        }
        if k == n {
            return self.rumin_d(omega);
        }
        let d = omega.representative.exterior_derivative();
        if k < n {
            self.quotient_normal_form(&d)
        } else {
            if !self.j_membership(&d)? {
                return Err(Error::NotInJ { degree: k + 1 });
            }
            Ok(RuminClass { degree: k + 1, representative: d, regime: Regime::Subspace })
        }
    }

    /// `d_c` applied to the class of `form`.
    pub fn d_c_form(&self, form: &InvariantForm) -> Result<RuminClass> {
        self.d_c(&self.class_of(form)?)
    }

    /// Basis of `J^k`, as exact coefficient vectors over all `k`-subsets.
    pub fn j_basis(&self, k: usize) -> Vec<InvariantForm> {
        let n = self.n;
        let dim = 2 * n + 1;
        let basis = MultiIndex::all_of_degree(dim, k);
        let m = wedge_constraint_matrix(n, k);
        linalg::nullspace(&m, basis.len())
            .into_iter()
            .map(|v| {
                let mut f = InvariantForm::zero(n, k);
                for (c, idx) in v.iter().zip(&basis) {
                    if *c != rat(0, 1) {
                        let term = InvariantForm::basis(n, *idx, SmoothScalar::constant(dim, c.clone()));
                        f = f.try_add(&term).unwrap();
                    }
                }
                f
            })
            .collect()
    }
}

/// Coefficient matrix of `λ ↦ (λ∧θ, λ∧dθ)` on constant `k`-forms.
fn wedge_constraint_matrix(n: usize, k: usize) -> RMatrix {
    let dim = 2 * n + 1;
    let src = MultiIndex::all_of_degree(dim, k);
    let mut rows = Vec::new();
    for target_deg in [k + 1, k + 2] {
        if target_deg > dim {
            continue;
        }
        let dst = MultiIndex::all_of_degree(dim, target_deg);
        let factor = if target_deg == k + 1 { InvariantForm::theta(n) } else { InvariantForm::dtheta(n) };
        let mut block = vec![vec![rat(0, 1); src.len()]; dst.len()];
        for (col, idx) in src.iter().enumerate() {
            let img = InvariantForm::basis(n, *idx, SmoothScalar::one(dim)).wedge(&factor).unwrap();
            for (i, c) in img.terms() {
                let row = dst.iter().position(|d| d == i).unwrap();
                block[row][col] = c.as_poly().and_then(|p| p.as_constant()).unwrap();
            }
        }
        rows.extend(block);
    }
    rows
}

/// Spanning set of `I^k` (constant coefficients) as coordinate rows over `k`-subsets.
fn ideal_matrix(n: usize, k: usize) -> RMatrix {
    let dim = 2 * n + 1;
    let target = MultiIndex::all_of_degree(dim, k);
    let mut rows = Vec::new();
    let mut push = |f: InvariantForm| {
        let mut row = vec![rat(0, 1); target.len()];
        for (i, c) in f.terms() {
            let pos = target.iter().position(|t| t == i).unwrap();
            row[pos] = c.as_poly().and_then(|p| p.as_constant()).unwrap();
        }
        rows.push(row);
    };
    if k >= 1 {
        for a in MultiIndex::all_of_degree(dim, k - 1) {
            push(InvariantForm::theta(n).wedge(&InvariantForm::basis(n, a, SmoothScalar::one(dim))).unwrap());
        }
    }
    if k >= 2 {
        for b in MultiIndex::all_of_degree(dim, k - 2) {
            push(InvariantForm::basis(n, b, SmoothScalar::one(dim)).wedge(&InvariantForm::dtheta(n)).unwrap());
        }
    }
    rows
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DimensionRow {
    pub k: usize,
    /// `dim Λ^k h / I^k`
    pub quotient: usize,
    /// `dim J^k`
    pub subspace: usize,
    /// `dim Ω^k_H` (the quotient for `k ≤ n`, the subspace otherwise)
    pub dim: usize,
    pub regime: Regime,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DimensionTable {
    pub n: usize,
    pub rows: Vec<DimensionRow>,
}

impl DimensionTable {
    pub fn dims(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.dim).collect()
    }

    /// `dim(Λ^k h / I^k) = dim(J^{2n+1−k})` for every `k`.
    pub fn symmetric(&self) -> bool {
        let top = 2 * self.n + 1;
        self.rows.iter().all(|r| r.quotient == self.rows[top - r.k].subspace)
    }
}

/// Dimensions of both regimes in every degree, by exact rank computations.
pub fn dimension_table(n: usize) -> DimensionTable {
    let dim = 2 * n + 1;
    let rows = (0..=dim)
        .map(|k| {
            let total = binomial(dim, k);
            let quotient = total - linalg::rank(&ideal_matrix(n, k));
            let subspace = total - linalg::rank(&wedge_constraint_matrix(n, k));
            let (d, regime) = if k <= n { (quotient, Regime::Quotient) } else { (subspace, Regime::Subspace) };
            DimensionRow { k, quotient, subspace, dim: d, regime }
        })
        .collect();
    DimensionTable { n, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::testing::{random_form, random_horizontal_form};
    use crate::exterior::CoordinateForm;
    use crate::poly::Poly;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn var(i: usize) -> SmoothScalar {
        SmoothScalar::var(3, i)
    }

    #[test]
    fn membership_examples() {
        let c = RuminComplex::new(1).unwrap();
        let t1_th = InvariantForm::basis_one(1, &[0, 2]);
        assert!(c.j_membership(&t1_th).unwrap());
        assert!(!c.j_membership(&InvariantForm::basis_one(1, &[0, 1])).unwrap());
        assert!(c.j_membership(&InvariantForm::zero(1, 2)).unwrap());
        assert!(c.j_membership(&InvariantForm::coframe(1, 0)).is_err());
    }

    #[test]
    fn normal_form_examples() {
        let c = RuminComplex::new(1).unwrap();
        let dt = CoordinateForm::dz(1, 2).to_invariant().unwrap();
        let nf = c.quotient_normal_form(&dt).unwrap();
        let expect = InvariantForm::basis(1, MultiIndex::single(0), var(1).scale(&rat(-1, 2)))
            .try_add(&InvariantForm::basis(1, MultiIndex::single(1), var(0).scale(&rat(1, 2))))
            .unwrap();
        assert_eq!(nf.representative(), &expect);
        assert!(c.quotient_normal_form(&InvariantForm::theta(1)).unwrap().is_zero());
    }

    #[test]
    fn image_of_l_is_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 2..=3 {
            let c = RuminComplex::new(n).unwrap();
            for k in 2..=n {
                let mu = random_form(&mut rng, n, k - 2, 2, 3);
                let l = mu.wedge(&InvariantForm::dtheta(n)).unwrap();
                assert!(c.quotient_normal_form(&l).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn lefschetz_examples() {
        let c = RuminComplex::new(1).unwrap();
        let one = InvariantForm::scalar(1, SmoothScalar::one(3));
        assert_eq!(c.lefschetz(&one).unwrap(), InvariantForm::basis_one(1, &[0, 1]).scale(&rat(-1, 1)));
        assert_eq!(c.lefschetz_inverse(&InvariantForm::basis_one(1, &[0, 1])).unwrap(), one.scale(&rat(-1, 1)));
        assert!(c.lefschetz_inverse(&InvariantForm::coframe(1, 0)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=3 {
            let c = RuminComplex::new(n).unwrap();
            let mu = random_horizontal_form(&mut rng, n, n - 1, 2, 4);
            assert_eq!(c.lefschetz_inverse(&c.lefschetz(&mu).unwrap()).unwrap(), mu);
        }
    }

    #[test]
    fn d_examples() {
        let c = RuminComplex::new(1).unwrap();
        let x_dy = InvariantForm::basis(1, MultiIndex::single(1), var(0));
        assert!(c.rumin_d_form(&x_dy).unwrap().is_zero());
        let t_dx = InvariantForm::basis(1, MultiIndex::single(0), var(2));
        let d = c.rumin_d_form(&t_dx).unwrap();
        let expect = InvariantForm::theta(1).wedge(&InvariantForm::coframe(1, 0)).unwrap().scale(&rat(3, 2));
        assert_eq!(d.representative(), &expect);
        assert!(c.rumin_d_form(&InvariantForm::zero(1, 1)).unwrap().is_zero());
    }

    #[test]
    fn d_c_examples() {
        let c = RuminComplex::new(1).unwrap();
        let x = InvariantForm::scalar(1, var(0));
        assert_eq!(c.d_c_form(&x).unwrap().representative(), &InvariantForm::coframe(1, 0));
        let t1_th = InvariantForm::basis_one(1, &[0, 2]);
        assert!(c.d_c_form(&t1_th).unwrap().is_zero());
        let s = InvariantForm::scalar(1, SmoothScalar::from_poly(&Poly::var(3, 2) * &Poly::var(3, 0)));
        assert!(c.d_c(&c.d_c_form(&s).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn dimension_tables() {
        assert_eq!(dimension_table(1).dims(), vec![1, 2, 2, 1]);
        assert_eq!(dimension_table(2).dims(), vec![1, 4, 5, 5, 4, 1]);
        assert_eq!(dimension_table(3).dims(), vec![1, 6, 14, 14, 14, 14, 6, 1]);
        for n in 1..=3 {
            assert!(dimension_table(n).symmetric());
        }
    }

    #[test]
    fn j_basis_dimensions() {
        let c = RuminComplex::new(2).unwrap();
        for k in 3..=5 {
            let b = c.j_basis(k);
            assert_eq!(b.len(), dimension_table(2).rows[k].subspace);
            for f in &b {
                assert!(c.j_membership(f).unwrap());
            }
        }
    }
}
