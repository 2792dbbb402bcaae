//! `heiscalc`: Rumin complex tables, Rumin differentials, Stokes verification,
//! `C_{n,k}` estimates and level-set convergence experiments from TOML scenes.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use heiscalc_core::group::VerticalSplitting;
use heiscalc_core::measure::{cnk_estimate, CnkBudget};
use heiscalc_core::rumin::dimension_table;
use heiscalc_core::scene::{expected_error_code, parse_form, Scene, SceneOutcome};
use heiscalc_core::{Error, HomogeneousDistance, RuminComplex};
use serde_json::json;

use report::{form_id, to_pretty, write_atomic, Report};

#[derive(Parser, Debug)]
#[command(name = "heiscalc", version, about = "Heisenberg-group currents, Rumin complex and Stokes verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for JSON reports (and CSV traces); reports go to stdout otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed recorded in every report and used by Monte Carlo sampling.
    #[arg(long, global = true, default_value_t = CnkBudget::default().seed)]
    seed: u64,
    /// Overrides the asserted tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Overrides the number of refinement levels.
    #[arg(long, global = true)]
    levels: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dimensions of both regimes of the Rumin complex in every degree.
    RuminTable {
        #[arg(long)]
        n: usize,
    },
    /// Applies the Rumin differential to a form given on the command line or by a scene.
    DcApply {
        #[arg(long, conflicts_with_all = ["n", "degree", "term"])]
        scene: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        degree: Option<usize>,
        /// `INDICES=COEFF` with 1-based comma separated coframe indices, e.g. `1=t` or `2,3=x*y`.
        #[arg(long)]
        term: Vec<String>,
    },
    /// Runs Stokes and current scenes and checks their tolerances.
    StokesVerify {
        #[arg(long, required = true, num_args = 1..)]
        scene: Vec<PathBuf>,
    },
    /// Estimates C_{n,k} for a vertical subgroup spanned by horizontal frame directions.
    CnkEstimate {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, value_enum, default_value_t = DistanceArg::Infinity)]
        distance: DistanceArg,
        /// 1-based horizontal frame indices spanning V.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        vertical: Vec<usize>,
        #[arg(long, default_value_t = CnkBudget::default().grid_level)]
        grid_level: u32,
        #[arg(long, default_value_t = CnkBudget::default().mc_samples)]
        samples: usize,
    },
    /// Runs level-set convergence experiments.
    ApproxConvergence {
        #[arg(long, required = true, num_args = 1..)]
        scene: Vec<PathBuf>,
        /// Also emit `h,value,gap` rows as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Checks scene files without running quadrature; negative fixtures pass when they raise their expected code.
    ValidateScene {
        #[arg(long, required = true, num_args = 1..)]
        scene: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistanceArg {
    Infinity,
    Koranyi,
}

impl From<DistanceArg> for HomogeneousDistance {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::Infinity => HomogeneousDistance::Infinity,
            DistanceArg::Koranyi => HomogeneousDistance::Koranyi,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(format!("[{}] {e}", e.code()))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(format!("[io] {e}"))
    }
}

struct Output {
    reports: Vec<Report>,
    csv: Vec<(String, String)>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("heiscalc: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(out) => match emit(&cli, &out) {
            Ok(()) if out.reports.iter().all(|r| r.passed) => ExitCode::SUCCESS,
            Ok(()) => ExitCode::from(1),
            Err(Failure::Invalid(m)) => {
                eprintln!("heiscalc: {m}");
                ExitCode::from(2)
            }
        },
        Err(Failure::Invalid(m)) => {
            eprintln!("heiscalc: {m}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("HEISCALC_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| format!("HEISCALC_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("HEISCALC_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn emit(cli: &Cli, out: &Output) -> Result<(), Failure> {
    match &cli.out {
        Some(dir) => {
            for r in &out.reports {
                let path = write_atomic(dir, &format!("{}.json", r.stem()), &to_pretty(r))?;
                println!("{} {}", if r.passed { "PASS" } else { "FAIL" }, path.display());
            }
            for (name, text) in &out.csv {
                let path = write_atomic(dir, name, text)?;
                println!("CSV  {}", path.display());
            }
        }
        None => {
            if out.reports.len() == 1 {
                print!("{}", to_pretty(&out.reports[0]));
            } else {
                print!("{}", to_pretty(&out.reports));
            }
            for (_, text) in &out.csv {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let reports = match &cli.command {
        Command::RuminTable { n } => vec![rumin_table(*n, cli.seed)?],
        Command::DcApply { scene, n, degree, term } => vec![dc_apply(scene.as_deref(), *n, *degree, term, cli.seed)?],
        Command::StokesVerify { scene } => scene.iter().map(|p| run_scene(cli, p, "stokes-verify")).collect::<Result<_, _>>()?,
        Command::CnkEstimate { n, distance, vertical, grid_level, samples } => {
            vec![cnk(cli, *n, (*distance).into(), vertical, *grid_level, *samples)?]
        }
        Command::ApproxConvergence { scene, csv } => {
            let reports: Vec<Report> =
                scene.iter().map(|p| run_scene(cli, p, "approx-convergence")).collect::<Result<_, _>>()?;
            let csv = if *csv { reports.iter().map(convergence_csv).collect() } else { Vec::new() };
            return Ok(Output { reports, csv });
        }
        Command::ValidateScene { scene } => scene.iter().map(|p| validate_scene(p, cli.seed)).collect::<Result<_, _>>()?,
    };
    Ok(Output { reports, csv: Vec::new() })
}

fn rumin_table(n: usize, seed: u64) -> Result<Report, Failure> {
    if !(1..=4).contains(&n) {
        return Err(Failure::Invalid(format!("--n must be in 1..=4, got {n}")));
    }
    let table = dimension_table(n);
    let mut r = Report::new("rumin-table", seed);
    r.value = json!(table.dims());
    r.passed = table.symmetric();
    r.details = json!({ "n": n, "symmetric": r.passed, "rows": table.rows });
    Ok(r)
}

fn parse_term(s: &str) -> Result<(Vec<usize>, String), Failure> {
    let (idx, coeff) = s.split_once('=').ok_or_else(|| Failure::Invalid(format!("term '{s}' must look like INDICES=COEFF")))?;
    let indices = idx
        .split(',')
        .map(|i| i.trim().parse::<usize>().map_err(|_| Failure::Invalid(format!("bad index '{i}' in term '{s}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((indices, coeff.trim().to_string()))
}

fn dc_apply(scene: Option<&Path>, n: Option<usize>, degree: Option<usize>, terms: &[String], seed: u64) -> Result<Report, Failure> {
    let mut r = Report::new("dc-apply", seed);
    let (n, form) = match scene {
        Some(p) => {
            let s = Scene::from_path(p)?;
            r.patch_id = Some(s.id.clone());
            (s.n, s.form().clone())
        }
        None => {
            let n = n.ok_or_else(|| Failure::Invalid("dc-apply needs --scene or --n".into()))?;
            let parsed = terms.iter().map(|t| parse_term(t)).collect::<Result<Vec<_>, _>>()?;
            let degree = match degree {
                Some(d) => d,
                None => parsed.first().map(|t| t.0.len()).ok_or_else(|| Failure::Invalid("dc-apply needs --degree or a --term".into()))?,
            };
            (n, parse_form(n, degree, &parsed)?)
        }
    };
    let cx = RuminComplex::new(n)?;
    let class = cx.class_of(&form)?;
    let out = cx.d_c(&class)?;
    r.form_id = Some(form_id(&form));
    r.value = out.representative().to_json();
    r.details = json!({
        "n": n,
        "input": form.to_json(),
        "input_class": class.representative().to_json(),
        "input_regime": class.regime(),
        "result_text": out.representative().to_string(),
        "result_degree": out.degree(),
        "result_regime": out.regime(),
    });
    Ok(r)
}

fn load_scene(cli: &Cli, path: &Path) -> Result<Scene, Failure> {
    let scene = Scene::from_path(path)?;
    if let Some(code) = &scene.expect_error {
        return Err(Failure::Invalid(format!("scene {} is a negative fixture (expects {code}); use validate-scene", scene.id)));
    }
    Ok(scene.with_overrides(cli.tol, cli.levels)?)
}

fn run_scene(cli: &Cli, path: &Path, command: &'static str) -> Result<Report, Failure> {
    let scene = load_scene(cli, path)?;
    let wanted = match command {
        "approx-convergence" => ["convergence", "convergence"],
        _ => ["stokes", "current"],
    };
    if !wanted.contains(&scene.kind()) {
        return Err(Failure::Invalid(format!("scene {} has kind {}; {command} expects {}", scene.id, scene.kind(), wanted[0])));
    }
    let outcome = scene.run().map_err(|e| Failure::Invalid(format!("[{}] scene {}: {e}", e.code(), scene.id)))?;
    let mut r = Report::new(command, cli.seed);
    r.patch_id = Some(scene.id.clone());
    r.form_id = Some(form_id(scene.form()));
    r.spec = Some(scene.spec.clone());
    let v = outcome.value();
    r.value = json!(v.value);
    r.trace = v.trace.clone();
    r.est_error = match &outcome {
        SceneOutcome::Stokes(s) => s.lhs.est_error.max(s.rhs.est_error),
        _ => v.est_error,
    };
    r.passed = outcome.passed();
    r.details = serde_json::to_value(&outcome).expect("reports serialize");
    Ok(r)
}

fn convergence_csv(r: &Report) -> (String, String) {
    let mut text = String::from("h,value,gap\n");
    if let Some(rows) = r.details.get("rows").and_then(|v| v.as_array()) {
        for row in rows {
            text.push_str(&format!("{},{},{}\n", row["h"], row["value"], row["gap"]));
        }
    }
    (format!("{}.csv", r.patch_id.as_deref().unwrap_or("convergence")), text)
}

fn cnk(cli: &Cli, n: usize, d: HomogeneousDistance, vertical: &[usize], grid_level: u32, samples: usize) -> Result<Report, Failure> {
    if !(1..=3).contains(&n) {
        return Err(Failure::Invalid(format!("--n must be in 1..=3, got {n}")));
    }
    if vertical.iter().any(|&i| i == 0 || i > 2 * n) {
        return Err(Failure::Invalid(format!("--vertical indices must be in 1..={}", 2 * n)));
    }
    if samples == 0 {
        return Err(Failure::Invalid("--samples must be positive".into()));
    }
    let s = VerticalSplitting::new(n, vertical.iter().map(|i| i - 1).collect())?;
    let mut budget = CnkBudget { grid_level, mc_samples: samples, seed: cli.seed, ..CnkBudget::default() };
    if let Some(l) = cli.levels {
        budget.inner_level = l;
    }
    let est = cnk_estimate(d, &s, &budget)?;
    let tol = cli.tol.unwrap_or(2e-2);
    let mut r = Report::new("cnk-estimate", cli.seed);
    r.value = json!(est.c);
    r.trace = vec![1.0 / est.grid_sup, est.c];
    r.est_error = 0.5 * (est.interval.1 - est.interval.0);
    r.passed = ((est.c_mc - est.c) / est.c).abs() < tol;
    r.details = json!({ "budget": budget, "tolerance": tol, "estimate": est });
    Ok(r)
}

fn validate_scene(path: &Path, seed: u64) -> Result<Report, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("[io] {}: {e}", path.display())))?;
    let expected = expected_error_code(&text);
    let result = Scene::from_path(path).and_then(|s| s.validate().map(|_| s));
    let mut r = Report::new("validate-scene", seed);
    let (id, error) = match &result {
        Ok(s) => (Some(s.id.clone()), None),
        Err(e) => (None, Some(e)),
    };
    r.patch_id = id.or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()));
    match (&expected, error) {
        (None, Some(e)) => return Err(e.clone().into()),
        (None, None) => r.passed = true,
        (Some(want), got) => r.passed = got.map(|e| e.code()) == Some(want.as_str()),
    }
    if let Ok(s) = &result {
        r.form_id = Some(form_id(s.form()));
        r.spec = Some(s.spec.clone());
    }
    r.value = json!(error.map(|e| e.code()));
    r.details = json!({
        "expected_error": expected,
        "error_code": error.map(|e| e.code()),
        "message": error.map(|e| e.to_string()),
        "kind": result.as_ref().ok().map(|s| s.kind()),
    });
    Ok(r)
}
