use rayon::prelude::*;
use serde_json::{json, Value};
use smms::checks::{div_free_residual, report_json, suite_jobs, CheckResult, QeInput, SuiteConfig};
use smms::json::num;
use smms::numerics::observed_orders;
use smms::variational::{minimize_m_energy, minimize_mmu_energy, EnergyReport, Init, MinimizeOptions};
use smms::warped_smms::{shoot_closed_qe, solve_qe_ode, QeInit, QeSolution, WarpedSmms};
use smms::DimParam;

use crate::config::{InitKind, RunConfig, SweepParam, SweepTask};
use crate::output::{csv, write_atomic, write_json};
use crate::CliError;

/// What a command reports back to `main`: the process exit code and a
/// human summary derived from the written files.
pub struct Outcome {
    pub exit_code: i32,
    pub summary: String,
}

fn ok(summary: String) -> Outcome {
    Outcome { exit_code: 0, summary }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| CliError::Io(format!("thread pool: {e}")))
}

fn m_json(m: DimParam) -> Value {
    match m {
        DimParam::Finite(x) => num(x),
        DimParam::Infinite => Value::String("inf".into()),
    }
}

// ---- model ----

/// Midpoint of the range of both `Ric_φ^m` channels, which minimizes the
/// max-norm quasi-Einstein residual over constants.
fn fitted_lambda(s: &WarpedSmms) -> smms::Result<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in s.interior_nodes() {
        let c = s.curvature_at(r)?;
        lo = lo.min(c.ric_phi_rad.min(c.ric_phi_sph));
        hi = hi.max(c.ric_phi_rad.max(c.ric_phi_sph));
    }
    Ok(0.5 * (lo + hi))
}

fn has_kim_kim(s: &WarpedSmms) -> bool {
    match s.m {
        DimParam::Infinite => true,
        DimParam::Finite(m) => m > 0.0,
    }
}

pub struct ModelSummary {
    pub json: Value,
    pub rows: Vec<Vec<f64>>,
}

pub const MODEL_HEADER: &[&str] =
    &["r", "psi", "v", "f", "K_rad", "K_sph", "Ric_rad", "Ric_sph", "R", "Ric_phi_rad", "Ric_phi_sph", "R_phi", "qe_residual", "kim_kim_mu"];

pub fn model_summary(cfg: &RunConfig) -> smms::Result<ModelSummary> {
    let s = cfg.model.build()?;
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => fitted_lambda(&s)?,
    };
    let kk = has_kim_kim(&s);
    let mut rows = Vec::new();
    let mut mus = Vec::new();
    for r in s.interior_nodes() {
        let c = s.curvature_at(r)?;
        let v = if s.m.is_infinite() { f64::NAN } else { s.v_jet(r)?.v };
        let f = if s.m == DimParam::Finite(0.0) { 0.0 } else { s.phi_jet(r)?.v };
        let qe = (c.ric_phi_rad - lambda).abs().max((c.ric_phi_sph - lambda).abs());
        let mu = if kk { s.kim_kim_mu(lambda, r)? } else { f64::NAN };
        if kk {
            mus.push(mu);
        }
        rows.push(vec![
            r,
            s.psi.value(r),
            v,
            f,
            c.k_rad,
            c.k_sph,
            c.ric_rad,
            c.ric_sph,
            c.scalar,
            c.ric_phi_rad,
            c.ric_phi_sph,
            c.r_phi,
            qe,
            mu,
        ]);
    }
    let (qe_rad, qe_sph) = s.qe_residual(lambda)?;
    let (mu_mean, mu_spread) = if mus.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let lo = mus.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (mus.iter().sum::<f64>() / mus.len() as f64, hi - lo)
    };
    let (a, b) = s.domain();
    let json = json!({
        "model": s.label,
        "n": s.n,
        "m": m_json(s.m),
        "grid": s.grid_size,
        "domain": [num(a), num(b)],
        "volume": num(s.volume()),
        "weighted_volume": num(s.weighted_volume(0.0)?),
        "lambda": num(lambda),
        "lambda_fitted": cfg.lambda.is_none(),
        "qe_residual": {"radial": num(qe_rad), "spherical": num(qe_sph), "max": num(qe_rad.max(qe_sph))},
        "mu": if kk { num(mu_mean) } else { Value::Null },
        "mu_spread": if kk { num(mu_spread) } else { Value::Null },
        "mu_declared": s.mu.map(num).unwrap_or(Value::Null),
    });
    Ok(ModelSummary { json, rows })
}

pub fn cmd_model(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ms = model_summary(cfg)?;
    write_atomic(&cfg.out_dir, "model_profile.csv", &csv(MODEL_HEADER, &ms.rows))?;
    write_json(&cfg.out_dir, "model_summary.json", &ms.json)?;
    Ok(ok(format!(
        "{} n={} m={}: lambda={} qe_residual={} mu={}",
        ms.json["model"].as_str().unwrap_or(""),
        ms.json["n"],
        ms.json["m"],
        ms.json["lambda"],
        ms.json["qe_residual"]["max"],
        ms.json["mu"]
    )))
}

// ---- energy ----

fn minimize_options(cfg: &RunConfig) -> MinimizeOptions {
    let init = match cfg.init {
        InitKind::Constant => Init::Constant,
        InitKind::Random => Init::Random { seed: cfg.seed, amplitude: cfg.amplitude },
    };
    MinimizeOptions { tol: cfg.tol, max_iter: cfg.max_iter, init }
}

pub fn energy_run(cfg: &RunConfig) -> smms::Result<(WarpedSmms, EnergyReport)> {
    let s = cfg.model.build()?;
    let opts = minimize_options(cfg);
    let rep = if cfg.optimize_tau { minimize_m_energy(&s, &opts)? } else { minimize_mmu_energy(&s, &opts)? };
    Ok((s, rep))
}

pub fn energy_json(s: &WarpedSmms, rep: &EnergyReport) -> Value {
    json!({
        "model": s.label,
        "n": s.n,
        "m": m_json(s.m),
        "grid": s.grid_size,
        "mu": s.mu.map(num).unwrap_or(Value::Null),
        "objective": format!("{:?}", rep.objective),
        "sigma": num(rep.sigma),
        "lambda_mmu": num(rep.lambda_mmu),
        "lambda_m": num(rep.lambda_m),
        "lambda_bar": num(rep.lambda_bar),
        "tau_star": rep.tau_star.map(num).unwrap_or(Value::Null),
        "el_residual": num(rep.el_residual),
        "sc_crit_deviation": num(rep.sc_crit_deviation),
        "iterations": rep.iterations,
        "converged": rep.converged,
        "no_compactness": rep.no_compactness,
        "initial_value": rep.history.first().map(|&x| num(x)).unwrap_or(Value::Null),
        "final_value": rep.history.last().map(|&x| num(x)).unwrap_or(Value::Null),
    })
}

pub fn cmd_energy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (s, rep) = energy_run(cfg)?;
    let rows: Vec<Vec<f64>> = rep.nodes.iter().zip(&rep.w).map(|(&r, &w)| vec![r, w]).collect();
    write_atomic(&cfg.out_dir, "energy_minimizer.csv", &csv(&["r", "w"], &rows))?;
    let v = energy_json(&s, &rep);
    write_json(&cfg.out_dir, "energy_report.json", &v)?;
    let summary = format!(
        "{}: converged={} iterations={} sigma={} lambda_mmu={} lambda_m={} lambda_bar={}",
        s.label, rep.converged, rep.iterations, v["sigma"], v["lambda_mmu"], v["lambda_m"], v["lambda_bar"]
    );
    Ok(Outcome { exit_code: if rep.converged { 0 } else { 1 }, summary })
}

// ---- verify ----

pub fn run_checks(cfg: &RunConfig) -> Result<Vec<CheckResult>, CliError> {
    let suite = SuiteConfig { seed: cfg.seed, trials: cfg.trials, perturb: cfg.perturb, grid: cfg.model.grid };
    let jobs = suite_jobs(&suite);
    // Job order fixes result order regardless of scheduling.
    let batches: Vec<smms::Result<Vec<CheckResult>>> = pool(cfg.jobs)?.install(|| jobs.par_iter().map(|j| (j.run)()).collect());
    let mut out = Vec::new();
    for b in batches {
        out.extend(b?);
    }
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let results = run_checks(cfg)?;
    let report = report_json(&results);
    write_json(&cfg.out_dir, "verify_report.json", &report)?;
    let mut summary: Vec<String> = results.iter().map(CheckResult::summary_line).collect();
    let unexpected = results.iter().filter(|c| !c.as_expected()).count();
    summary.push(format!("{} checks, {} unexpected, {} skipped", results.len(), unexpected, report["skipped"]));
    Ok(Outcome { exit_code: if unexpected == 0 { 0 } else { 1 }, summary: summary.join("\n") })
}

// ---- qe-solve ----

fn qe_init(cfg: &RunConfig, grid: usize) -> Result<QeInit, CliError> {
    let m = cfg.model.m.require_finite("qe-solve")?;
    let mu = cfg.model.params.mu.ok_or_else(|| CliError::Config("qe-solve needs --mu".into()))?;
    Ok(QeInit { f0: 0.0, grid_size: grid, ..QeInit::new(cfg.model.n, m, mu, cfg.f2, cfg.r_end) })
}

fn qe_solve_at(cfg: &RunConfig, grid: usize) -> Result<QeSolution, CliError> {
    let init = qe_init(cfg, grid)?;
    Ok(if cfg.shoot { shoot_closed_qe(init, cfg.bracket, cfg.r_max(), cfg.keep)? } else { solve_qe_ode(init)? })
}

impl RunConfig {
    fn r_max(&self) -> f64 {
        self.model.params.r_max.unwrap_or(20.0)
    }
}

pub fn cmd_qe_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sol = qe_solve_at(cfg, cfg.model.grid)?;
    let res = sol.model.qe_scale_residual(&sol.u, sol.lambda)?;
    // The scale residual sits at the integrator floor on every grid, so
    // orders come from the divergence-free residual, which is O(h²).
    let div0 = div_free_residual(&QeInput::from_solution(&sol))?.max();
    let mut levels = vec![json!({"grid": cfg.model.grid, "scale_residual": num(res.max()), "div_free_residual": num(div0)})];
    let mut errs = vec![div0];
    let mut grid = cfg.model.grid;
    for _ in 0..cfg.refine {
        grid = 2 * grid - 1;
        let finer = qe_solve_at(cfg, grid)?;
        let input = QeInput::from_solution(&finer);
        let scale = input.scale_residual()?;
        let div = div_free_residual(&input)?.max();
        levels.push(json!({"grid": grid, "scale_residual": num(scale), "div_free_residual": num(div)}));
        errs.push(div);
    }
    let orders = observed_orders(&errs);
    let rows: Vec<Vec<f64>> = sol.model.grid().iter().map(|&r| vec![r, sol.model.psi.value(r), sol.f.value(r), sol.u.value(r)]).collect();
    write_atomic(&cfg.out_dir, "qe_solution.csv", &csv(&["r", "psi", "f", "u"], &rows))?;
    let (_, r_end) = sol.model.domain();
    let v = json!({
        "n": sol.model.n,
        "m": m_json(sol.model.m),
        "mu": sol.model.mu.map(num).unwrap_or(Value::Null),
        "f2": num(sol.f2),
        "lambda": num(sol.lambda),
        "r_end": num(r_end),
        "grid": cfg.model.grid,
        "closing_radius": sol.closing_radius.map(num).unwrap_or(Value::Null),
        "qe_scale_residual": {
            "trace_free": num(res.trace_free),
            "lambda": num(res.lambda),
            "mu": num(res.mu),
            "max": num(res.max()),
        },
        "refinement": levels,
        "orders": orders.iter().map(|&p| num(p)).collect::<Vec<_>>(),
    });
    write_json(&cfg.out_dir, "qe_residual.json", &v)?;
    Ok(ok(format!("lambda={} residual={} orders={}", v["lambda"], v["qe_scale_residual"]["max"], v["orders"])))
}

// ---- sweep ----

fn point_config(cfg: &RunConfig, value: f64) -> Result<RunConfig, CliError> {
    let mut c = cfg.clone();
    let as_count = |x: f64, what: &str| -> Result<usize, CliError> {
        if x.fract() != 0.0 || x < 0.0 {
            return Err(CliError::Config(format!("{what} values must be non-negative integers, got {x}")));
        }
        Ok(x as usize)
    };
    match cfg.param {
        SweepParam::M => c.model.m = DimParam::finite(value).map_err(|e| CliError::Config(e.to_string()))?,
        SweepParam::N => c.model.n = as_count(value, "n")?,
        SweepParam::Grid => c.model.grid = as_count(value, "grid")?,
        SweepParam::Mu => c.model.params.mu = Some(value),
    }
    Ok(c)
}

const SWEEP_MODEL_HEADER: &[&str] = &["value", "lambda", "qe_residual", "mu", "mu_spread", "weighted_volume"];
const SWEEP_ENERGY_HEADER: &[&str] = &["value", "sigma", "lambda_mmu", "lambda_m", "lambda_bar", "el_residual", "converged"];

fn sweep_point(cfg: &RunConfig, value: f64) -> Result<(Vec<f64>, Value), CliError> {
    let c = point_config(cfg, value)?;
    let f = |v: &Value| v.as_f64().unwrap_or(f64::NAN);
    match cfg.task {
        SweepTask::Model => {
            let ms = model_summary(&c)?;
            let j = &ms.json;
            let row = vec![value, f(&j["lambda"]), f(&j["qe_residual"]["max"]), f(&j["mu"]), f(&j["mu_spread"]), f(&j["weighted_volume"])];
            Ok((row, ms.json))
        }
        SweepTask::Energy => {
            let (s, rep) = energy_run(&c)?;
            let row = vec![value, rep.sigma, rep.lambda_mmu, rep.lambda_m, rep.lambda_bar, rep.el_residual, if rep.converged { 1.0 } else { 0.0 }];
            Ok((row, energy_json(&s, &rep)))
        }
    }
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.values.is_empty() {
        return Err(CliError::Config("sweep needs --values".into()));
    }
    let points: Vec<Result<(Vec<f64>, Value), CliError>> =
        pool(cfg.jobs)?.install(|| cfg.values.par_iter().map(|&v| sweep_point(cfg, v)).collect());
    let mut rows = Vec::new();
    let mut items = Vec::new();
    for (&value, p) in cfg.values.iter().zip(points) {
        let (row, mut j) = p?;
        j["value"] = num(value);
        rows.push(row);
        items.push(j);
    }
    let header = match cfg.task {
        SweepTask::Model => SWEEP_MODEL_HEADER,
        SweepTask::Energy => SWEEP_ENERGY_HEADER,
    };
    write_atomic(&cfg.out_dir, "sweep.csv", &csv(header, &rows))?;
    let param = format!("{:?}", cfg.param).to_lowercase();
    write_json(&cfg.out_dir, "sweep.json", &json!({"param": param, "points": items}))?;
    let all_converged = cfg.task == SweepTask::Model || rows.iter().all(|r| r[6] == 1.0);
    Ok(Outcome {
        exit_code: if all_converged { 0 } else { 1 },
        summary: format!("{} points over {param}, written to sweep.csv", rows.len()),
    })
}
