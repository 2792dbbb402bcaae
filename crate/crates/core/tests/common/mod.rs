#![allow(dead_code)]

use std::path::PathBuf;

use heiscalc_core::exterior::testing::{random_form, random_horizontal_form};
use heiscalc_core::group::pi_p;
use heiscalc_core::scalar::testing::{random_poly, random_rational};
use heiscalc_core::scene::Scene;
use heiscalc_core::{rat, InvariantForm, Point, Rational, RuminClass, RuminComplex, SmoothScalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scenes_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenes")
}

pub fn scene(name: &str) -> Scene {
    let p = scenes_dir().join(format!("{name}.toml"));
    Scene::from_path(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// Every shipped scene file (not the invalid fixtures), sorted by file name.
pub fn shipped_scenes() -> Vec<Scene> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(scenes_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    paths.iter().map(|p| Scene::from_path(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point<R: Rng>(rng: &mut R, n: usize) -> Point<Rational> {
    Point::new(n, (0..2 * n + 1).map(|_| random_rational(rng)).collect()).unwrap()
}

fn positive_rational<R: Rng>(rng: &mut R) -> Rational {
    rat(rng.gen_range(1..=12), rng.gen_range(1..=5))
}

fn check(ok: bool, what: &str, n: usize, case: usize) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("{what} failed for n={n}, case {case}"))
    }
}

/// Associativity, identity, inverses, dilation homomorphism and `π_p` additivity in exact arithmetic.
pub fn group_suite(n: usize, cases: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let e = Point::<Rational>::identity(n);
    for c in 0..cases {
        let (p, q, s) = (random_point(&mut r, n), random_point(&mut r, n), random_point(&mut r, n));
        let pq = p.mul(&q).unwrap();
        check(pq.mul(&s).unwrap() == p.mul(&q.mul(&s).unwrap()).unwrap(), "associativity", n, c)?;
        check(p.mul(&e).unwrap() == p && e.mul(&p).unwrap() == p, "identity", n, c)?;
        check(p.mul(&p.inverse()).unwrap() == e && p.inverse().mul(&p).unwrap() == e, "inverse", n, c)?;
        let lambda = positive_rational(&mut r);
        let lhs = pq.dilate(&lambda).unwrap();
        let rhs = p.dilate(&lambda).unwrap().mul(&q.dilate(&lambda).unwrap()).unwrap();
        check(lhs == rhs, "dilation homomorphism", n, c)?;
        let mu = positive_rational(&mut r);
        let composed = p.dilate(&mu).unwrap().dilate(&lambda).unwrap();
        check(composed == p.dilate(&(lambda.clone() * mu)).unwrap(), "dilation composition", n, c)?;
        let sum = pi_p(&s, &p).add(&pi_p(&s, &q));
        check(pi_p(&s, &pq) == sum, "projection additivity", n, c)?;
        let scaled = pi_p(&s, &p.dilate(&lambda).unwrap());
        check(scaled == pi_p(&s, &p).scale(&lambda), "projection homogeneity", n, c)?;
    }
    Ok(())
}

/// `[X_j, Y_j] = T` and all other brackets of the frame vanish, applied to random polynomials.
pub fn commutator_suite(n: usize, cases: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let dim = 2 * n + 1;
    for c in 0..cases {
        let f = SmoothScalar::from_poly(random_poly(&mut r, dim, 4, 4));
        let a = r.gen_range(0..dim);
        let b = r.gen_range(0..dim);
        let bracket = f.frame_derivative(b).frame_derivative(a).try_sub(&f.frame_derivative(a).frame_derivative(b)).unwrap();
        let expected = if a < n && b == a + n {
            f.frame_derivative(2 * n)
        } else if b < n && a == b + n {
            f.frame_derivative(2 * n).neg()
        } else {
            SmoothScalar::zero(dim)
        };
        check(bracket == expected, &format!("[F{a}, F{b}]"), n, c)?;
        // [X_j, Y_j] is checked on every case, regardless of the random pair.
        let j = r.gen_range(0..n);
        let xy = f.frame_derivative(n + j).frame_derivative(j).try_sub(&f.frame_derivative(j).frame_derivative(n + j)).unwrap();
        check(xy == f.frame_derivative(2 * n), "[X_j, Y_j] = T", n, c)?;
    }
    Ok(())
}

/// `d_c∘d_c = 0` on random forms of every degree.
pub fn complex_suite(n: usize, per_degree: usize, seed: u64) -> Result<(), String> {
    let cx = RuminComplex::new(n).unwrap();
    let mut r = rng(seed);
    let dim = 2 * n + 1;
    for k in 0..dim {
        let mut nontrivial = 0;
        for c in 0..per_degree {
            let form = random_cochain(&cx, &mut r, n, k);
            let once = cx.d_c(&form).map_err(|e| format!("d_c on degree {k}: {e}"))?;
            nontrivial += usize::from(!once.is_zero());
            let twice = cx.d_c(&once).map_err(|e| format!("d_c∘d_c on degree {k}: {e}"))?;
            check(twice.is_zero(), &format!("d_c∘d_c = 0 in degree {k}"), n, c)?;
        }
        if 2 * nontrivial < per_degree {
            return Err(format!("degree {k}, n={n}: only {nontrivial} of {per_degree} samples have d_c ≠ 0"));
        }
    }
    Ok(())
}

/// A random element of `Ω^k_H`: a random form for `k ≤ n`; above that, `d_c` of a random
/// cochain one degree lower plus polynomial multiples of `J^k` basis elements.
fn random_cochain<R: Rng>(cx: &RuminComplex, r: &mut R, n: usize, k: usize) -> RuminClass {
    if k <= n {
        return cx.class_of(&random_form(r, n, k, 3, 4)).unwrap();
    }
    let lower = random_cochain(cx, r, n, k - 1);
    let mut form = cx.d_c(&lower).unwrap().representative().clone();
    for b in cx.j_basis(k) {
        let s = SmoothScalar::from_poly(random_poly(r, 2 * n + 1, 2, 2));
        form = form.try_add(&b.mul_scalar(&s).unwrap()).unwrap();
    }
    cx.class_of(&form).unwrap()
}

/// `D(α + θ∧β + μ∧dθ) = D(α)` for random `α`, `β`, `μ`.
pub fn well_defined_suite(n: usize, cases: usize, seed: u64) -> Result<(), String> {
    let cx = RuminComplex::new(n).unwrap();
    let mut r = rng(seed);
    let theta = InvariantForm::theta(n);
    let dtheta = InvariantForm::dtheta(n);
    for c in 0..cases {
        let alpha = random_form(&mut r, n, n, 3, 5);
        let beta = random_form(&mut r, n, n - 1, 3, 3);
        let mut perturbed = alpha.try_add(&theta.wedge(&beta).unwrap()).unwrap();
        if n >= 2 {
            let mu = random_horizontal_form(&mut r, n, n - 2, 3, 3);
            let mu = if mu.is_zero() { InvariantForm::scalar(n, SmoothScalar::one(2 * n + 1)) } else { mu };
            perturbed = perturbed.try_add(&mu.wedge(&dtheta).unwrap()).unwrap();
        }
        let a = cx.rumin_d_form(&alpha).map_err(|e| e.to_string())?;
        let b = cx.rumin_d_form(&perturbed).map_err(|e| e.to_string())?;
        check(a.representative() == b.representative(), "D well-defined on the quotient", n, c)?;
    }
    Ok(())
}
