mod common;

use heiscalc_core::exterior::testing::random_form;
use heiscalc_core::measure::{euclidean_oracle_integral, integrate_lowcodim_form, integrate_lowdim_form};
use heiscalc_core::quadrature::{ChartBox, QuadratureSpec};
use heiscalc_core::submanifold::{LegendrianPatch, LevelSetPatch};
use heiscalc_core::{rat, InvariantForm, Poly, RuminComplex, SmoothScalar};

fn v(n: usize, i: usize) -> SmoothScalar {
    SmoothScalar::var(2 * n + 1, i)
}

fn parse(src: &str, n: usize) -> SmoothScalar {
    SmoothScalar::from_poly(Poly::parse(src, &heiscalc_core::poly::coordinate_names(n)).unwrap())
}

fn plane() -> LevelSetPatch {
    LevelSetPatch::new(1, vec![v(1, 0)], ChartBox::cube(3, -1.0, 1.0), 1, None, None).unwrap()
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::new(6, 2).unwrap()
}

#[test]
fn closed_form_values_on_the_vertical_plane() {
    let yt = InvariantForm::basis_one(1, &[1, 2]);
    let odd = integrate_lowcodim_form(&plane(), &yt.mul_scalar(&v(1, 1)).unwrap(), &spec()).unwrap();
    assert!(odd.value.abs() < 1e-14);
    let y2 = parse("y^2", 1);
    let even = integrate_lowcodim_form(&plane(), &yt.mul_scalar(&y2).unwrap(), &spec()).unwrap();
    assert!((even.value - 4.0 / 3.0).abs() < 1e-13, "{}", even.value);
    let xt = InvariantForm::basis_one(1, &[0, 2]);
    assert!(integrate_lowcodim_form(&plane(), &xt, &spec()).unwrap().value.abs() < 1e-15);
    let flipped = plane().with_orientation(-1);
    let neg = integrate_lowcodim_form(&flipped, &yt.mul_scalar(&y2).unwrap(), &spec()).unwrap();
    assert_eq!(neg.value, -even.value);
}

#[test]
fn currents_are_linear() {
    let cx = RuminComplex::new(2).unwrap();
    let basis = cx.j_basis(3);
    // codimension 2 in H^2 integrates 3-forms of J^3
    let f = vec![parse("x1 + y2^2/4 - t/3", 2), parse("y1 - x2/2", 2)];
    let patch = LevelSetPatch::new(2, f, ChartBox::cube(5, -0.5, 0.5), 1, None, None).unwrap();
    let mut r = common::rng(5);
    let mut pick = || {
        let mut f = InvariantForm::zero(2, 3);
        for b in &basis {
            let s = SmoothScalar::from_poly(heiscalc_core::scalar::testing::random_poly(&mut r, 5, 2, 2));
            f = f.try_add(&b.mul_scalar(&s).unwrap()).unwrap();
        }
        f
    };
    let (w1, w2) = (pick(), pick());
    let (a, b) = (rat(3, 2), rat(-2, 5));
    let combo = w1.scale(&a).try_add(&w2.scale(&b)).unwrap();
    let s = QuadratureSpec::new(4, 2).unwrap();
    let i1 = integrate_lowcodim_form(&patch, &w1, &s).unwrap().value;
    let i2 = integrate_lowcodim_form(&patch, &w2, &s).unwrap().value;
    let ic = integrate_lowcodim_form(&patch, &combo, &s).unwrap().value;
    assert!((ic - (1.5 * i1 - 0.4 * i2)).abs() < 1e-10 * (1.0 + ic.abs()));
    let o1 = euclidean_oracle_integral(&patch, &w1, &s).unwrap().value;
    let o2 = euclidean_oracle_integral(&patch, &w2, &s).unwrap().value;
    let oc = euclidean_oracle_integral(&patch, &combo, &s).unwrap().value;
    assert!((oc - (1.5 * o1 - 0.4 * o2)).abs() < 1e-10 * (1.0 + oc.abs()));
    assert!((ic - oc).abs() < 1e-8 * (1.0 + oc.abs()));
    let zero = euclidean_oracle_integral(&patch, &InvariantForm::zero(2, 3), &s).unwrap();
    assert_eq!(zero.value, 0.0);
}

fn legendrians() -> Vec<LegendrianPatch> {
    let s = |i: usize, m: usize| SmoothScalar::var(m, i);
    let p = |src: &str, m: usize| {
        SmoothScalar::from_poly(Poly::parse(src, &heiscalc_core::poly::parameter_names(m)).unwrap())
    };
    vec![
        LegendrianPatch::new(1, vec![s(0, 1), p("s^2", 1), p("s^3/6", 1)], ChartBox::cube(1, -1.0, 1.0), 1).unwrap(),
        LegendrianPatch::new(1, vec![p("s^2 - 1", 1), p("s", 1), p("-s^3/6 - s/2", 1)], ChartBox::cube(1, 0.0, 1.0), 1).unwrap(),
        LegendrianPatch::new(
            2,
            vec![s(0, 2), s(1, 2), SmoothScalar::zero(2), SmoothScalar::zero(2), SmoothScalar::zero(2)],
            ChartBox::cube(2, 0.0, 1.0),
            1,
        )
        .unwrap(),
    ]
}

#[test]
fn legendrian_patches_validate() {
    for c in legendrians() {
        let report = c.validate().unwrap();
        assert!(report.valid, "{report:?}");
    }
    let bad = LegendrianPatch::new(1, vec![SmoothScalar::zero(1), SmoothScalar::var(1, 0), SmoothScalar::var(1, 0)], ChartBox::cube(1, 0.0, 1.0), 1)
        .unwrap();
    assert!(!bad.validate().unwrap().valid);
}

#[test]
fn contact_multiples_integrate_to_zero() {
    let mut r = common::rng(17);
    for c in legendrians() {
        let n = c.n();
        let m = c.dim();
        for _ in 0..5 {
            let lambda = random_form(&mut r, n, m - 1, 3, 3);
            let w = lambda.wedge(&InvariantForm::theta(n)).unwrap();
            let val = integrate_lowdim_form(&c, &w, &spec()).unwrap().value;
            assert!(val.abs() < 1e-10, "∫ λ∧θ = {val}");
            if m >= 2 {
                let mu = random_form(&mut r, n, m - 2, 3, 3);
                let w = mu.wedge(&InvariantForm::dtheta(n)).unwrap();
                let val = integrate_lowdim_form(&c, &w, &spec()).unwrap().value;
                assert!(val.abs() < 1e-10, "∫ μ∧dθ = {val}");
            }
            let f = random_form(&mut r, n, m, 2, 2);
            let a = integrate_lowdim_form(&c, &f, &spec()).unwrap().value;
            let shifted = f.try_add(&random_form(&mut r, n, m - 1, 2, 2).wedge(&InvariantForm::theta(n)).unwrap()).unwrap();
            let b = integrate_lowdim_form(&c, &shifted, &spec()).unwrap().value;
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "representative dependence: {a} vs {b}");
        }
    }
}

#[test]
fn horizontal_segment_integrals() {
    let seg = LegendrianPatch::new(1, vec![SmoothScalar::var(1, 0), SmoothScalar::zero(1), SmoothScalar::zero(1)], ChartBox::cube(1, 0.0, 1.0), 1).unwrap();
    let dx = InvariantForm::coframe(1, 0);
    assert!((integrate_lowdim_form(&seg, &dx, &spec()).unwrap().value - 1.0).abs() < 1e-15);
    assert_eq!(integrate_lowdim_form(&seg, &InvariantForm::theta(1), &spec()).unwrap().value, 0.0);
}
