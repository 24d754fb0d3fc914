//! Scenario dispatch: builds specs from scenario definitions, runs the
//! requested verification or integration, and produces the report document
//! plus any CSV artifacts, with the exit status encoding the outcome
//! (0 pass, 1 residual failure, 2 usage/parse/singularity error).

use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

use crate::catalog;
use crate::chart::{Direction, GridSpec, ProfileFunction, SampleGrid, ScalarField, Signature};
use crate::curvature::{scalar_curvature, DerivativeMode, MetricField};
use crate::reduction::{
    admissible_initial_data, integrate_reduced, lift_and_verify, IntegrationOptions, LiftOptions,
    ReducedParams, ReducedState,
};
use crate::report::{write_atomic, Report};
use crate::scenario::{
    BaseDef, CatalogScenario, FiberDef, IntegrateScenario, ProfileDef, ReduceScenario,
    ScanScenario, Scenario, VerifyScenario,
};
use crate::warp::{
    assemble_warped_metric, einstein_residual, obstruction_margin, oneill_residuals, product_grid,
    scalar_identities, FiberDescriptor, WarpedProductSpec,
};
use crate::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_RESIDUAL_FAILURE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Command-line overrides applied on top of scenario fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tolerance: Option<f64>,
    pub mode: Option<DerivativeMode>,
    pub out: Option<String>,
    pub seed: Option<u64>,
}

/// A finished run: the report, any files written, and the exit status.
#[derive(Debug)]
pub struct RunOutput {
    pub report: Report,
    pub files_written: Vec<String>,
    pub exit_code: i32,
}

fn build_profile(def: &ProfileDef) -> Result<ProfileFunction, Error> {
    Ok(match def {
        ProfileDef::Constant { value } => ProfileFunction::constant(*value),
        ProfileDef::Affine { slope, intercept } => ProfileFunction::affine(*slope, *intercept),
        ProfileDef::Exponential { theta, rate } => ProfileFunction::exponential(*theta, *rate),
        ProfileDef::ReciprocalAffine { theta, g, c } => {
            ProfileFunction::reciprocal_affine(*theta, *g, *c)?
        }
    })
}

fn build_fiber(def: &FiberDef) -> Result<FiberDescriptor, Error> {
    match def {
        FiberDef::Flat { m, signature } => {
            let sig = match (signature, m) {
                (Some(s), _) => Signature::new(s.clone())?,
                (None, Some(m)) => Signature::euclidean(*m),
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "flat fiber needs m or signature".into(),
                    ))
                }
            };
            FiberDescriptor::flat(&sig)
        }
        FiberDef::Sphere { m } => FiberDescriptor::unit_sphere(*m),
        FiberDef::Hyperbolic { m } => FiberDescriptor::hyperbolic(*m),
    }
}

fn build_spec(def: &crate::scenario::WarpSpecDef) -> Result<WarpedProductSpec, Error> {
    let (base, base_sig, base_dir) = match &def.base {
        BaseDef::Flat { signature } => {
            let sig = Signature::new(signature.clone())?;
            (MetricField::flat(&sig), sig, None)
        }
        BaseDef::Conformal {
            signature,
            direction,
            phi,
        } => {
            let sig = Signature::new(signature.clone())?;
            let dir = Direction::new(direction.clone(), &sig)?;
            let profile = build_profile(phi)?;
            let field = ScalarField::from_profile(&profile, &dir);
            (MetricField::conformally_flat(&sig, &field), sig, Some(dir))
        }
    };
    let fiber = build_fiber(&def.fiber)?;
    let warp_dir = match (&def.warp_direction, &base_dir) {
        (Some(alpha), _) => Direction::new(alpha.clone(), &base_sig)?,
        (None, Some(dir)) => dir.clone(),
        (None, None) => Direction::axis(0, &base_sig)?, // constant warp: direction immaterial
    };
    let warp_profile = build_profile(&def.warp)?;
    let f = ScalarField::from_profile(&warp_profile, &warp_dir);
    WarpedProductSpec::new(base, fiber, f, def.lambda)
}

fn fiber_mu(def: &FiberDef) -> Result<f64, Error> {
    Ok(match def {
        FiberDef::Flat { .. } => 0.0,
        FiberDef::Sphere { m } => *m as f64 - 1.0,
        FiberDef::Hyperbolic { m } => -(*m as f64 - 1.0),
    })
}

fn apply_seed(mut grid: GridSpec, seed: Option<u64>) -> GridSpec {
    if let Some(s) = seed {
        grid.seed = s;
    }
    grid
}

fn scenario_value(scenario: &Scenario) -> Value {
    serde_json::to_value(scenario).unwrap_or(Value::Null)
}

fn run_verify(
    scenario: &Scenario,
    v: &VerifyScenario,
    direct: bool,
    overrides: &Overrides,
) -> Result<RunOutput, Error> {
    let start = Instant::now();
    let mode = overrides
        .mode
        .or(v.mode)
        .unwrap_or(DerivativeMode::Analytic);
    let tol = overrides.tolerance.unwrap_or(v.tolerances.for_mode(mode));
    let mut spec = build_spec(&v.spec)?;
    spec.base = spec.base.with_mode(mode);
    spec.fiber.metric = spec.fiber.metric.with_mode(mode);
    let n = spec.n();
    let m = spec.m();
    let mu = match v.spec.mu {
        Some(mu) => mu,
        None => fiber_mu(&v.spec.fiber)?,
    };
    let lambda = v.spec.lambda;

    let base_spec = apply_seed(
        v.grid.clone().unwrap_or_else(|| GridSpec::unit(n)),
        overrides.seed,
    );
    let fiber_spec = apply_seed(
        v.fiber_grid.clone().unwrap_or_else(|| GridSpec::unit(m)),
        overrides.seed,
    );
    let base_grid = SampleGrid::generate(&base_spec, spec.base.singular_loci())?;
    let fiber_grid = SampleGrid::generate(&fiber_spec, spec.fiber.metric.singular_loci())?;
    spec.validate_warp(&base_grid)?;

    let mut report = Report::new(scenario_value(scenario), mode, tol);
    if direct {
        let metric = assemble_warped_metric(&spec)?;
        let product = product_grid(&base_grid, &fiber_grid);
        let einstein = einstein_residual(&metric, lambda, &product, tol)?;
        report.absorb("direct", &einstein);
    }
    let blocks = oneill_residuals(&spec, lambda, mu, &base_grid, &fiber_grid, tol)?;
    report.absorb("blocks", &blocks);
    let identities = scalar_identities(&spec, lambda, mu, &base_grid, tol)?;
    report.absorb("identities", &identities);

    if mu == 0.0 {
        let margins: Vec<f64> = base_grid
            .points()
            .iter()
            .map(|p| scalar_curvature(&spec.base, p).map(|r| obstruction_margin(r, lambda, n, m).0))
            .collect::<Result<_, _>>()?;
        let min_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
        report.note(format!(
            "obstruction margin lambda(n-m) - R over the grid: min {min_margin:.6}"
        ));
        report.data = json!({ "min_obstruction_margin": min_margin });
    }

    report.finalize(start.elapsed().as_secs_f64() * 1e3);
    let files = write_outputs(&report, v.out.as_deref(), overrides)?;
    let exit = if report.passed() {
        EXIT_PASS
    } else {
        EXIT_RESIDUAL_FAILURE
    };
    Ok(RunOutput {
        report,
        files_written: files,
        exit_code: exit,
    })
}

fn run_catalog(
    scenario: &Scenario,
    c: &CatalogScenario,
    overrides: &Overrides,
) -> Result<RunOutput, Error> {
    let start = Instant::now();
    let mode = overrides
        .mode
        .or(c.mode)
        .unwrap_or(DerivativeMode::Analytic);
    let tol = overrides.tolerance.unwrap_or(c.tolerances.for_mode(mode));
    let mut entry = catalog::instantiate(
        &c.name,
        &catalog::FamilyParams {
            n: c.n,
            m: c.m,
            g: c.g,
            c: c.c,
            theta: c.theta,
            a: c.a,
            kappa: c.kappa,
        },
    )?;
    if let Some(grid) = &c.grid {
        entry.base_grid = grid.clone();
    }
    entry.base_grid = apply_seed(entry.base_grid.clone(), overrides.seed);
    entry.fiber_grid = apply_seed(entry.fiber_grid.clone(), overrides.seed);
    let entry = entry.with_mode(mode);

    let verification = catalog::verify_catalog_entry(&entry, tol)?;
    let mut report = Report::new(scenario_value(scenario), mode, tol);
    for run in &verification.runs {
        let prefix = format!("{} lambda={}", run.label, run.lambda);
        report.absorb(&format!("einstein [{prefix}]"), &run.einstein);
        report.absorb(&format!("blocks [{prefix}]"), &run.blocks);
        report.note(format!(
            "{} constant {}: max sup {:.6e} ({})",
            run.label,
            run.lambda,
            run.max_sup(),
            if run.passes() { "verified" } else { "refuted" }
        ));
    }
    for n in &verification.notes {
        report.note(n.clone());
    }
    if let Some(derived) = verification
        .runs
        .iter()
        .find(|r| r.label.contains("derived"))
        .or(verification.runs.first())
    {
        report.best_fit_lambda = derived.einstein.best_fit_lambda;
    }
    report.data = json!({
        "family": entry.name,
        "lambda_claimed": entry.lambda_claimed,
        "lambda_derived": entry.lambda_derived,
        "domain_constraints": entry.domain_constraints,
    });
    report.finalize(start.elapsed().as_secs_f64() * 1e3);
    let files = write_outputs(&report, c.out.as_deref(), overrides)?;
    let exit = if report.passed() {
        EXIT_PASS
    } else {
        EXIT_RESIDUAL_FAILURE
    };
    Ok(RunOutput {
        report,
        files_written: files,
        exit_code: exit,
    })
}

fn run_reduce(
    scenario: &Scenario,
    r: &ReduceScenario,
    overrides: &Overrides,
) -> Result<RunOutput, Error> {
    let start = Instant::now();
    let params = ReducedParams::new(r.n, r.m, r.lambda, r.kappa)?;
    let roots = admissible_initial_data(r.phi0, r.dphi0, &params)?;
    let mut report = Report::new(scenario_value(scenario), DerivativeMode::Analytic, 1e-9);
    for root in &roots {
        let monitor = params.monitor(r.phi0, r.dphi0, *root);
        report.push_row(format!("constraint at G0={root}"), monitor.abs(), 1e-9);
    }
    if roots.is_empty() {
        report.note("no real roots: no invariant solution passes through this data");
    }
    report.data = json!({ "roots": roots });
    report.finalize(start.elapsed().as_secs_f64() * 1e3);
    let files = write_outputs(&report, r.out.as_deref(), overrides)?;
    let exit = if report.passed() {
        EXIT_PASS
    } else {
        EXIT_RESIDUAL_FAILURE
    };
    Ok(RunOutput {
        report,
        files_written: files,
        exit_code: exit,
    })
}

fn run_integrate(
    scenario: &Scenario,
    i: &IntegrateScenario,
    overrides: &Overrides,
) -> Result<RunOutput, Error> {
    let start = Instant::now();
    let params = ReducedParams::new(i.n, i.m, i.lambda, i.kappa)?;
    let initial = ReducedState {
        xi: i.span[0],
        phi: i.phi0,
        dphi: i.dphi0,
        rate: i.rate0,
    };
    let bound = i.monitor_bound.as_ref().map(|t| t.value()).unwrap_or(1e-6);
    let opts = IntegrationOptions::new(i.step, i.span[1])
        .with_monitor_bound(bound)
        .with_halving_check(true);
    let traj = integrate_reduced(initial, &params, &opts)?;

    let mut report = Report::new(scenario_value(scenario), DerivativeMode::Analytic, bound);
    report.push_row("constraint monitor", traj.max_monitor(), bound);
    let end = traj.final_state();
    let mut data = json!({
        "final": { "xi": end.xi, "phi": end.phi, "dphi": end.dphi, "G": end.rate },
        "steps": traj.states().len() - 1,
        "error_estimate": traj.error_estimate(),
    });

    let mut exit = EXIT_PASS;
    if let Some(halt) = traj.halt() {
        report.note(format!("integration halted: {halt:?}"));
        data["halt"] = serde_json::to_value(halt).unwrap_or(Value::Null);
        exit = EXIT_ERROR;
    }

    if let Some(lift) = &i.lift {
        if traj.halt().is_none() {
            let fiber = FiberDescriptor::flat(&Signature::euclidean(i.m))?;
            let frame = params.canonical_frame();
            let lift_report = lift_and_verify(
                &traj,
                i.theta,
                &fiber,
                &frame,
                &LiftOptions {
                    count: lift.count,
                    tolerance: lift.tolerance.value(),
                    seed: overrides.seed.unwrap_or(0),
                    ..Default::default()
                },
            )?;
            report.absorb("lift", &lift_report);
        } else {
            report.note("lift skipped: trajectory halted before covering the span");
        }
    }

    report.data = data;
    report.finalize(start.elapsed().as_secs_f64() * 1e3);

    let mut csv = Vec::new();
    traj.write_csv(&mut csv)
        .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    let out = overrides
        .out
        .as_deref()
        .or(i.out.as_deref())
        .unwrap_or("trajectory.csv");
    write_atomic(Path::new(out), &csv)
        .map_err(|e| Error::InvalidParameter(format!("write {out}: {e}")))?;
    let files = vec![out.to_string()];

    if exit == EXIT_PASS && !report.passed() {
        exit = EXIT_RESIDUAL_FAILURE;
    }
    Ok(RunOutput {
        report,
        files_written: files,
        exit_code: exit,
    })
}

fn run_scan(
    scenario: &Scenario,
    s: &ScanScenario,
    overrides: &Overrides,
) -> Result<RunOutput, Error> {
    let start = Instant::now();
    let mut csv = String::from("n,m,kappa,lambda,phi0,dphi0,roots,max_monitors,verdicts\n");
    let mut rows = 0usize;
    for &n in &s.n {
        for &m in &s.m {
            for &kappa in &s.kappa {
                for &lambda in &s.lambda {
                    for &phi0 in &s.phi0 {
                        for &dphi0 in &s.dphi0 {
                            let params = ReducedParams::new(n, m, lambda, kappa)?;
                            let roots = admissible_initial_data(phi0, dphi0, &params)?;
                            let (roots_cell, monitors_cell, verdicts_cell) = if roots.is_empty() {
                                ("no real roots".to_string(), String::new(), String::new())
                            } else {
                                let mut monitors = Vec::new();
                                let mut verdicts = Vec::new();
                                for root in &roots {
                                    let initial = ReducedState {
                                        xi: 0.0,
                                        phi: phi0,
                                        dphi: dphi0,
                                        rate: *root,
                                    };
                                    let opts = IntegrationOptions::new(1e-3, 0.5);
                                    match integrate_reduced(initial, &params, &opts) {
                                        Ok(traj) => {
                                            monitors.push(format!("{:e}", traj.max_monitor()));
                                            verdicts.push(match traj.halt() {
                                                None => "ok".to_string(),
                                                Some(h) => format!("halted({h:?})"),
                                            });
                                        }
                                        Err(e) => {
                                            monitors.push(String::from("-"));
                                            verdicts.push(format!("error({e})"));
                                        }
                                    }
                                }
                                (
                                    roots
                                        .iter()
                                        .map(|r| r.to_string())
                                        .collect::<Vec<_>>()
                                        .join(";"),
                                    monitors.join(";"),
                                    verdicts.join(";"),
                                )
                            };
                            csv.push_str(&format!(
                                "{n},{m},{kappa},{lambda},{phi0},{dphi0},{roots_cell},{monitors_cell},{verdicts_cell}\n"
                            ));
                            rows += 1;
                        }
                    }
                }
            }
        }
    }

    let out = overrides
        .out
        .as_deref()
        .or(s.out.as_deref())
        .unwrap_or("scan.csv");
    write_atomic(Path::new(out), csv.as_bytes())
        .map_err(|e| Error::InvalidParameter(format!("write {out}: {e}")))?;

    let mut report = Report::new(scenario_value(scenario), DerivativeMode::Analytic, 0.0);
    report.data = json!({ "rows": rows, "csv": out });
    report.finalize(start.elapsed().as_secs_f64() * 1e3);
    Ok(RunOutput {
        report,
        files_written: vec![out.to_string()],
        exit_code: EXIT_PASS,
    })
}

fn write_outputs(
    report: &Report,
    scenario_out: Option<&str>,
    overrides: &Overrides,
) -> Result<Vec<String>, Error> {
    let target = overrides.out.as_deref().or(scenario_out);
    if let Some(path) = target {
        write_atomic(Path::new(path), report.to_json_pretty().as_bytes())
            .map_err(|e| Error::InvalidParameter(format!("write {path}: {e}")))?;
        Ok(vec![path.to_string()])
    } else {
        Ok(Vec::new())
    }
}

/// Runs a parsed scenario. Library errors bubble up for the caller to map to
/// exit status 2.
pub fn run_scenario(scenario: &Scenario, overrides: &Overrides) -> Result<RunOutput, Error> {
    match scenario {
        Scenario::Verify(v) => run_verify(scenario, v, true, overrides),
        Scenario::Oneill(v) => run_verify(scenario, v, false, overrides),
        Scenario::Catalog(c) => run_catalog(scenario, c, overrides),
        Scenario::Reduce(r) => run_reduce(scenario, r, overrides),
        Scenario::Integrate(i) => run_integrate(scenario, i, overrides),
        Scenario::Scan(s) => run_scan(scenario, s, overrides),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    #[test]
    fn catalog_scenario_runs_and_passes() {
        let scenario = parse_scenario(
            r#"{"kind":"catalog","name":"affine_conformal","n":3,"m":2,"G":1,"C":5}"#,
        )
        .unwrap();
        let out = run_scenario(&scenario, &Overrides::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_PASS);
        assert!(out.report.passed());
        let sup = out
            .report
            .results
            .iter()
            .map(|r| r.sup_norm)
            .fold(0.0f64, f64::max);
        assert!(sup < 1e-6, "sup {sup}");
    }

    #[test]
    fn hyperbolic_catalog_reports_both_constants() {
        let scenario =
            parse_scenario(r#"{"kind":"catalog","name":"hyperbolic_halfspace","n":3,"m":2}"#)
                .unwrap();
        let out = run_scenario(&scenario, &Overrides::default()).unwrap();
        // claimed fails, derived passes: overall verdict fail, exit 1
        assert_eq!(out.exit_code, EXIT_RESIDUAL_FAILURE);
        let claimed: Vec<_> = out
            .report
            .results
            .iter()
            .filter(|r| r.label.contains("claimed"))
            .collect();
        let derived: Vec<_> = out
            .report
            .results
            .iter()
            .filter(|r| r.label.contains("derived"))
            .collect();
        assert!(!claimed.is_empty() && !derived.is_empty());
        assert!(claimed.iter().any(|r| !r.pass));
        assert!(derived.iter().all(|r| r.pass));
    }

    #[test]
    fn verify_scenario_full_pipeline() {
        let scenario = parse_scenario(
            r#"{
            "kind": "verify",
            "spec": {
                "base": {"type": "conformal", "signature": [1,1,1],
                         "direction": [0.0,0.0,1.0],
                         "phi": {"form": "affine", "slope": -1.0, "intercept": 5.0}},
                "fiber": {"type": "flat", "m": 2},
                "warp": {"form": "reciprocal_affine", "theta": 1.0, "g": 1.0, "c": 5.0},
                "lambda": -4.0
            }}"#,
        )
        .unwrap();
        let out = run_scenario(&scenario, &Overrides::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_PASS, "{}", out.report.to_json_pretty());
        assert!((out.report.best_fit_lambda.unwrap() + 4.0).abs() < 1e-6);
    }

    #[test]
    fn reduce_scenario_reports_roots() {
        let scenario =
            parse_scenario(r#"{"kind":"reduce","lambda":-4.0,"phi0":5.0,"dphi0":-1.0}"#).unwrap();
        let out = run_scenario(&scenario, &Overrides::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_PASS);
        let roots = out.report.data["roots"].as_array().unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].as_f64().unwrap() + 5.0).abs() < 1e-12);
        assert!((roots[1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_scenario_writes_csv() {
        let dir = std::env::temp_dir().join("einwarp-runner-test");
        std::fs::create_dir_all(&dir).unwrap();
        let csv_path = dir.join("traj.csv");
        let scenario = parse_scenario(&format!(
            r#"{{"kind":"integrate","lambda":-4.0,"phi0":5.0,"dphi0":-1.0,"G0":1.0,
                "step":1e-3,"span":[0.0,4.0],"out":"{}"}}"#,
            csv_path.display()
        ))
        .unwrap();
        let out = run_scenario(&scenario, &Overrides::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_PASS);
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("xi,phi,dphi,G,monitor\n"));
        let phi_end = out.report.data["final"]["phi"].as_f64().unwrap();
        assert!((phi_end - 1.0).abs() < 1e-6);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn integrate_past_singularity_exits_with_diagnostic() {
        let dir = std::env::temp_dir().join("einwarp-runner-halt");
        std::fs::create_dir_all(&dir).unwrap();
        let csv_path = dir.join("halt.csv");
        let scenario = parse_scenario(&format!(
            r#"{{"kind":"integrate","lambda":-4.0,"phi0":5.0,"dphi0":-1.0,"G0":1.0,
                "step":1e-3,"span":[0.0,6.0],"out":"{}"}}"#,
            csv_path.display()
        ))
        .unwrap();
        let out = run_scenario(&scenario, &Overrides::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_ERROR);
        assert!(out.report.data["halt"]["xi"].as_f64().unwrap() > 4.9);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn scan_scenario_emits_expected_root_sets() {
        let dir = std::env::temp_dir().join("einwarp-runner-scan");
        std::fs::create_dir_all(&dir).unwrap();
        let csv_path = dir.join("scan.csv");
        let scenario = parse_scenario(&format!(
            r#"{{"kind":"scan","lambda":[-4.0,-2.0,0.0],"phi0":[5.0],"dphi0":[-1.0],
                "out":"{}"}}"#,
            csv_path.display()
        ))
        .unwrap();
        let out = run_scenario(&scenario, &Overrides::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_PASS);
        let text = std::fs::read_to_string(&csv_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4, "header + 3 rows");
        assert!(lines[1].contains("-5;1"), "lambda=-4 roots: {}", lines[1]);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn scan_with_empty_range_is_header_only() {
        let dir = std::env::temp_dir().join("einwarp-runner-scan-empty");
        std::fs::create_dir_all(&dir).unwrap();
        let csv_path = dir.join("scan.csv");
        let scenario = parse_scenario(&format!(
            r#"{{"kind":"scan","lambda":[],"phi0":[5.0],"dphi0":[-1.0],"out":"{}"}}"#,
            csv_path.display()
        ))
        .unwrap();
        let out = run_scenario(&scenario, &Overrides::default()).unwrap();
        assert_eq!(out.exit_code, EXIT_PASS);
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(text.lines().count(), 1);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn no_real_roots_cell_appears() {
        let dir = std::env::temp_dir().join("einwarp-runner-scan-noroots");
        std::fs::create_dir_all(&dir).unwrap();
        let csv_path = dir.join("scan.csv");
        let scenario = parse_scenario(&format!(
            r#"{{"kind":"scan","lambda":[1.0],"phi0":[1.0],"dphi0":[0.0],"out":"{}"}}"#,
            csv_path.display()
        ))
        .unwrap();
        let out = run_scenario(&scenario, &Overrides::default()).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(text.contains("no real roots"), "{text}");
        assert_eq!(out.exit_code, EXIT_PASS);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn identical_scenario_and_seed_reproduce_the_report() {
        let scenario = parse_scenario(
            r#"{"kind":"catalog","name":"affine_conformal","n":3,"m":2,"G":1,"C":5}"#,
        )
        .unwrap();
        let a = run_scenario(&scenario, &Overrides::default()).unwrap();
        let b = run_scenario(&scenario, &Overrides::default()).unwrap();
        let mut ja = serde_json::to_value(&a.report).unwrap();
        let mut jb = serde_json::to_value(&b.report).unwrap();
        ja["wall_time_ms"] = Value::Null;
        jb["wall_time_ms"] = Value::Null;
        assert_eq!(ja, jb);
    }
}
