//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and fails if any criterion fails.
//!
//! Built without the libtest harness so the lines always reach the terminal.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use heiscalc_core::group::VerticalSplitting;
use heiscalc_core::measure::{cnk_estimate, slice_volume, CnkBudget};
use heiscalc_core::quadrature::QuadratureSpec;
use heiscalc_core::rumin::dimension_table;
use heiscalc_core::scene::{SceneBody, SceneOutcome};
use heiscalc_core::stokes::{distance_independence, StokesRegime};
use heiscalc_core::HomogeneousDistance;
use serde::Deserialize;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn exact_algebra() -> Outcome {
    const CASES: usize = 1000;
    for n in 1..=3 {
        common::group_suite(n, CASES, 0xa1 + n as u64)?;
        common::commutator_suite(n, CASES, 0xb1 + n as u64)?;
    }
    Ok(format!("{CASES} cases per property for n = 1, 2, 3"))
}

fn complex_property() -> Outcome {
    const PER_DEGREE: usize = 200;
    for n in 1..=2 {
        common::complex_suite(n, PER_DEGREE, 0xc1 + n as u64)?;
    }
    Ok(format!("{PER_DEGREE} random cochains per degree for n = 1, 2"))
}

fn well_defined() -> Outcome {
    const CASES: usize = 200;
    for n in 1..=2 {
        common::well_defined_suite(n, CASES, 0xd1 + n as u64)?;
    }
    Ok(format!("{CASES} random pairs for n = 1, 2"))
}

#[derive(Deserialize)]
struct GoldenRow {
    n: usize,
    quotient: Vec<usize>,
    subspace: Vec<usize>,
    dims: Vec<usize>,
}

fn dimension_symmetry() -> Outcome {
    let text = include_str!("golden/rumin_dims.json");
    let golden: Vec<GoldenRow> = serde_json::from_str(text).map_err(|e| e.to_string())?;
    for g in &golden {
        let t = dimension_table(g.n);
        ensure(t.symmetric(), format!("asymmetric table for n={}", g.n))?;
        let q: Vec<usize> = t.rows.iter().map(|r| r.quotient).collect();
        let s: Vec<usize> = t.rows.iter().map(|r| r.subspace).collect();
        ensure(q == g.quotient && s == g.subspace && t.dims() == g.dims, format!("n={}: got {:?}", g.n, t.dims()))?;
    }
    ensure(golden.iter().map(|g| g.n).collect::<Vec<_>>() == [1, 2, 3], "golden table must cover n = 1, 2, 3".into())?;
    Ok("symmetric and equal to the golden table for n = 1, 2, 3".into())
}

fn oracle_equivalence() -> Outcome {
    let mut per_n = [0usize; 3];
    let mut worst: f64 = 0.0;
    for scene in common::shipped_scenes() {
        if !matches!(scene.body, SceneBody::Current { .. }) {
            continue;
        }
        let SceneOutcome::Current(r) = scene.run().map_err(|e| format!("{}: {e}", scene.id))? else {
            unreachable!()
        };
        ensure(r.relative_difference < 1e-6, format!("{}: relative difference {:e}", r.id, r.relative_difference))?;
        worst = worst.max(r.relative_difference);
        per_n[scene.n] += 1;
    }
    ensure(per_n[1] >= 5 && per_n[2] >= 5, format!("too few scenes: {per_n:?}"))?;
    Ok(format!("{} scenes for n=1, {} for n=2, worst relative difference {worst:.1e}", per_n[1], per_n[2]))
}

/// `∫₀¹ √(1−y⁴) dy = Γ(1/4) Γ(3/2) / (4 Γ(7/4))`.
fn koranyi_slice_reference() -> f64 {
    const GAMMA_QUARTER: f64 = 3.625_609_908_221_908_3;
    const GAMMA_SEVEN_QUARTERS: f64 = 0.919_062_526_848_883_2;
    let gamma_three_halves = std::f64::consts::PI.sqrt() / 2.0;
    GAMMA_QUARTER * gamma_three_halves / (4.0 * GAMMA_SEVEN_QUARTERS)
}

fn cnk_estimator() -> Outcome {
    let s = VerticalSplitting::new(1, vec![0]).map_err(|e| e.to_string())?;
    let est = cnk_estimate(HomogeneousDistance::Infinity, &s, &CnkBudget::default()).map_err(|e| e.to_string())?;
    ensure((est.c - 1.0).abs() < 1e-2, format!("C = {} for d_inf", est.c))?;
    for p1 in [0.0, 0.3, -0.6, 0.9] {
        let v = slice_volume(HomogeneousDistance::Infinity, &s, &[p1, 0.0, 0.0], 12, 3).map_err(|e| e.to_string())?;
        let want = (1.0f64 - p1 * p1).sqrt();
        ensure((v - want).abs() < 1e-6, format!("d_inf slice at p1={p1}: {v} vs {want}"))?;
    }
    let k = slice_volume(HomogeneousDistance::Koranyi, &s, &[0.0; 3], 12, 3).map_err(|e| e.to_string())?;
    let want = koranyi_slice_reference();
    ensure((k - want).abs() < 1e-4, format!("Koranyi slice {k} vs {want}"))?;
    Ok(format!("C = {:.6} for d_inf, Koranyi slice {k:.8} vs {want:.8}", est.c))
}

fn stokes_verification() -> Outcome {
    let mut regimes = Vec::new();
    let mut lines = Vec::new();
    for scene in common::shipped_scenes() {
        let SceneBody::Stokes(s) = &scene.body else { continue };
        ensure(s.spec.levels == 3, format!("{}: levels must be 3", s.id))?;
        let SceneOutcome::Stokes(r) = scene.run().map_err(|e| format!("{}: {e}", scene.id))? else {
            unreachable!()
        };
        ensure(r.residual < 1e-6, format!("{}: residual {:e}", r.id, r.residual))?;
        ensure(r.degenerate || r.flipped_residual > 1e-2, format!("{}: flipped residual {:e}", r.id, r.flipped_residual))?;
        ensure(r.passed, format!("{}: report not passing", r.id))?;
        regimes.push(r.regime);
        lines.push(format!("{} {:.1e}", r.id, r.residual));
    }
    for want in [StokesRegime::LowDimension, StokesRegime::Critical, StokesRegime::LowCodimension] {
        ensure(regimes.contains(&want), format!("no scene in regime {want:?}"))?;
    }
    Ok(lines.join(", "))
}

fn convergence() -> Outcome {
    let mut lines = Vec::new();
    for scene in common::shipped_scenes() {
        if !matches!(scene.body, SceneBody::Convergence(_)) {
            continue;
        }
        let SceneOutcome::Convergence(r) = scene.run().map_err(|e| format!("{}: {e}", scene.id))? else {
            unreachable!()
        };
        let gaps: Vec<f64> = r.rows.iter().map(|row| row.gap).collect();
        ensure(gaps.windows(2).all(|w| w[1] <= w[0]), format!("{}: gaps not decreasing {gaps:?}", r.id))?;
        ensure(r.final_gap < 1e-3, format!("{}: final gap {:e}", r.id, r.final_gap))?;
        ensure(r.unshifted_gap == 0.0, format!("{}: unshifted gap {:e}", r.id, r.unshifted_gap))?;
        lines.push(format!("{} final gap {:.1e}", r.id, r.final_gap));
    }
    ensure(!lines.is_empty(), "no convergence experiments shipped".into())?;
    Ok(lines.join(", "))
}

fn distance_independence_check() -> Outcome {
    let scene = common::scene("current-h1-tilted");
    let SceneBody::Current { patch, form, .. } = &scene.body else { unreachable!() };
    let spec = QuadratureSpec::new(8, 3).unwrap();
    let r = distance_independence(patch, form, &spec, &CnkBudget::default(), 2e-2).map_err(|e| e.to_string())?;
    ensure(r.graph_identical, "graph values differ between distances".into())?;
    ensure(r.rows[0].graph_value.to_bits() == r.rows[1].graph_value.to_bits(), "graph values differ bitwise".into())?;
    ensure(r.relative_gap < 2e-2, format!("relative gap {:e}", r.relative_gap))?;
    Ok(format!(
        "normalized {:.6} vs {:.6}, relative gap {:.1e}, graph value identical",
        r.rows[0].normalized_value, r.rows[1].normalized_value, r.relative_gap
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact group algebra", exact_algebra),
        ("d_c composed with d_c vanishes", complex_property),
        ("D is well defined on the quotient", well_defined),
        ("dimension symmetry", dimension_symmetry),
        ("graph path vs Euclidean oracle", oracle_equivalence),
        ("C_{n,k} estimator", cnk_estimator),
        ("Stokes residuals", stokes_verification),
        ("approximation convergence", convergence),
        ("distance independence", distance_independence_check),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.1} s): {detail}", i + 1),
            Err(why) => {
                println!("criterion {}: FAIL  {name} ({secs:.1} s): {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
