//! One function per subcommand. Each writes its JSON report and field dumps
//! into the output directory and returns a short summary for stdout.

use std::fs;
use std::path::Path;

use serde::Serialize;

use slipplap::continuation::run_continuation;
use slipplap::exponents::{critical_r, mu_exponent, q_hat};
use slipplap::grid::{lq_norm, sym_grad, write_tensor_csv, write_vector_csv, Domain, VectorField};
use slipplap::identities::identity_battery;
use slipplap::linear::{assemble, estimate_constants, solve_linear_with, ConstantsEstimate, CqOptions, LinearStats};
use slipplap::oracle::{minimize_with, EnergyFunctional, MinimizeReport};
use slipplap::solver::{fixed_point, strong_residual, weak_residual, SolveReport};
use slipplap::Error;

use crate::config::RunConfig;

/// Failure classes mapped onto exit statuses.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, bad config, unwritable output: exit 1.
    Usage(String),
    /// The solver ran and failed for another reason: exit 1.
    Run(String),
    /// The contraction gate was violated and the iteration diverged: exit 2.
    Divergence(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Run(_) => 1,
            Failure::Divergence(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Run(m) | Failure::Divergence(m) => m,
        }
    }
}

type Outcome = Result<String, Failure>;

fn run_err(e: Error) -> Failure {
    Failure::Run(e.to_string())
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Run(e.to_string()))?;
    fs::write(dir.join(name), text + "\n").map_err(|e| Failure::Usage(format!("cannot write {name}: {e}")))
}

fn write_fields(dir: &Path, stem: &str, u: &VectorField, dom: &Domain) -> Result<(), Failure> {
    write_vector_csv(&dir.join(format!("{stem}.csv")), u, dom).map_err(run_err)?;
    write_tensor_csv(&dir.join(format!("{stem}_du.csv")), &sym_grad(u, dom), dom).map_err(run_err)
}

fn rel_l2(a: &VectorField, b: &VectorField, dom: &Domain) -> slipplap::Result<f64> {
    let den = lq_norm(b, 2.0, dom)?;
    let num = lq_norm(&a.sub(b), 2.0, dom)?;
    Ok(if den == 0.0 { num } else { num / den })
}

fn constants_for(cfg: &RunConfig, dom: &Domain) -> Result<Option<ConstantsEstimate>, Failure> {
    if !cfg.constants.estimate {
        return Ok(None);
    }
    let op = assemble(dom, cfg.bc);
    let opts = CqOptions {
        samples: cfg.constants.samples,
        seed: cfg.seed,
        ascent_sweeps: cfg.constants.ascent_sweeps,
        ..CqOptions::default()
    };
    estimate_constants(&op, cfg.p, cfg.q, &opts).map(Some).map_err(run_err)
}

/// Divergence counts as a gate violation only when the estimated gate says so.
fn classify(e: Error, dir: &Path, report_name: &str) -> Failure {
    match e {
        Error::NonConvergence { report } => {
            let msg = format!(
                "fixed-point iteration did not converge after {} iterations",
                report.iterations
            );
            if let Err(w) = write_json(dir, report_name, &report) {
                return w;
            }
            if report.gate.is_some_and(|g| !g.satisfied) {
                Failure::Divergence(format!("{msg}; contraction gate violated"))
            } else {
                Failure::Run(msg)
            }
        }
        Error::Continuation { step, reports, source } => {
            let gate_violated = reports.iter().any(|r| r.gate.is_some_and(|g| !g.satisfied));
            if let Err(w) = write_json(dir, report_name, &reports) {
                return w;
            }
            let msg = format!("continuation aborted at step {step}: {source}");
            if gate_violated && matches!(*source, Error::NonConvergence { .. }) {
                Failure::Divergence(msg)
            } else {
                Failure::Run(msg)
            }
        }
        other => Failure::Run(other.to_string()),
    }
}

#[derive(Serialize)]
struct SingularSolveReport {
    p: f64,
    mu: f64,
    nx: usize,
    ny: usize,
    method: &'static str,
    minimizer: MinimizeReport,
    strong_residual: Option<f64>,
    weak_residual: f64,
    error_vs_exact: Option<f64>,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    report: &'a SolveReport,
    constants: Option<&'a ConstantsEstimate>,
    error_vs_exact: Option<f64>,
}

pub fn cmd_solve(cfg: &RunConfig) -> Outcome {
    prepare_out(&cfg.out)?;
    let prob = cfg.problem().map_err(run_err)?;
    let dom = &prob.dom;
    let exact = cfg.exact_on(dom);
    if cfg.mu == 0.0 && cfg.p < 2.0 {
        // the fixed-point map is undefined where Du = 0; minimise the energy instead
        let j = EnergyFunctional::new(*dom, prob.params, prob.f.clone()).map_err(run_err)?;
        let (u, mr) = minimize_with(&j, &cfg.minimizer, None).map_err(run_err)?;
        let err = exact
            .as_ref()
            .map(|e| rel_l2(&u, e, dom))
            .transpose()
            .map_err(run_err)?;
        let report = SingularSolveReport {
            p: cfg.p,
            mu: cfg.mu,
            nx: dom.nx,
            ny: dom.ny,
            method: "energy minimisation",
            strong_residual: strong_residual(&u, &prob).ok(),
            weak_residual: weak_residual(&u, &prob, 8).map_err(run_err)?,
            error_vs_exact: err,
            minimizer: mr,
        };
        write_json(&cfg.out, "solve_report.json", &report)?;
        write_fields(&cfg.out, "u", &u, dom)?;
        return Ok(format!(
            "mu = 0: energy minimiser converged in {} iterations; weak residual {:.3e}",
            report.minimizer.iterations, report.weak_residual
        ));
    }
    let consts = constants_for(cfg, dom)?;
    let (u, report) =
        fixed_point(&prob, consts.as_ref(), &cfg.solver).map_err(|e| classify(e, &cfg.out, "solve_report.json"))?;
    let err = exact
        .as_ref()
        .map(|e| rel_l2(&u, e, dom))
        .transpose()
        .map_err(run_err)?;
    write_json(
        &cfg.out,
        "solve_report.json",
        &SolveOutput {
            report: &report,
            constants: consts.as_ref(),
            error_vs_exact: err,
        },
    )?;
    write_fields(&cfg.out, "u", &u, dom)?;
    let mut s = format!(
        "converged: {} applications of T, {} corrections; strong residual {:.3e}",
        report.iterations, report.corrections, report.strong_residual
    );
    if let Some(g) = report.gate {
        s += &format!("; gate alpha = {:.4}", g.alpha);
    }
    if let Some(e) = err {
        s += &format!("; relative L2 error vs exact {e:.3e}");
    }
    Ok(s)
}

pub fn cmd_continuation(cfg: &RunConfig) -> Outcome {
    prepare_out(&cfg.out)?;
    let dom = cfg.domain().map_err(run_err)?;
    // the path targets mu = 0, so manufactured data are built there
    let f = cfg.forcing_on(&dom, 0.0).map_err(run_err)?;
    let prob =
        slipplap::solver::SlipProblem::new(dom, cfg.params().map_err(run_err)?, cfg.q, f, cfg.bc).map_err(run_err)?;
    let consts = constants_for(cfg, &dom)?;
    let (u0, report) = run_continuation(&prob, &cfg.schedule, consts.as_ref(), &cfg.solver)
        .map_err(|e| classify(e, &cfg.out, "continuation_report.json"))?;
    write_json(&cfg.out, "continuation_report.json", &report)?;
    write_fields(&cfg.out, "u0", &u0, &dom)?;
    Ok(format!(
        "{} steps down to mu = {:.3e}; surrogate spread {:.4}; mu = 0 weak residual {:.3e}",
        report.steps.len(),
        cfg.schedule.final_mu(),
        report.w2q_spread,
        report.singular_weak_residual
    ))
}

#[derive(Serialize)]
struct LinsolveReport {
    nx: usize,
    ny: usize,
    variant: &'static str,
    dofs: usize,
    stats: LinearStats,
    error_vs_exact: Option<f64>,
}

/// The linear slip problem `-div(Du) = F`, i.e. the case `p = 2`.
pub fn cmd_linsolve(cfg: &RunConfig) -> Outcome {
    prepare_out(&cfg.out)?;
    let dom = cfg.domain().map_err(run_err)?;
    let linear = RunConfig { p: 2.0, ..cfg.clone() };
    let f = linear.forcing_on(&dom, cfg.mu).map_err(run_err)?;
    let op = assemble(&dom, cfg.bc);
    let (u, stats) = solve_linear_with(&op, &f, &cfg.solver.linear).map_err(run_err)?;
    let err = linear
        .exact_on(&dom)
        .map(|e| rel_l2(&u, &e, &dom))
        .transpose()
        .map_err(run_err)?;
    let report = LinsolveReport {
        nx: dom.nx,
        ny: dom.ny,
        variant: cfg.bc.name(),
        dofs: op.n_dofs(),
        stats,
        error_vs_exact: err,
    };
    write_json(&cfg.out, "linsolve_report.json", &report)?;
    write_fields(&cfg.out, "u", &u, &dom)?;
    let mut s = format!(
        "{} iterations, relative residual {:.3e}",
        report.stats.iterations, report.stats.relative_residual
    );
    if let Some(e) = err {
        s += &format!("; relative L2 error vs exact {e:.3e}");
    }
    Ok(s)
}

#[derive(Serialize)]
struct ConstantsReport {
    p: f64,
    q: f64,
    estimate: ConstantsEstimate,
    alpha: f64,
    gate_satisfied: bool,
}

pub fn cmd_constants(cfg: &RunConfig) -> Outcome {
    prepare_out(&cfg.out)?;
    let dom = cfg.domain().map_err(run_err)?;
    let forced = RunConfig {
        constants: crate::config::ConstantsConfig {
            estimate: true,
            ..cfg.constants
        },
        ..cfg.clone()
    };
    let est = constants_for(&forced, &dom)?.expect("estimation forced on");
    let gate = est.gate(cfg.p);
    let report = ConstantsReport {
        p: cfg.p,
        q: cfg.q,
        alpha: gate.alpha,
        gate_satisfied: gate.satisfied,
        estimate: est,
    };
    write_json(&cfg.out, "constants_report.json", &report)?;
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    Ok(format!(
        "C_q = {:.4}, C_hat = {}, Korn = {}; alpha = {:.4} (gate {})",
        report.estimate.cq_disc,
        opt(report.estimate.chat_disc),
        opt(report.estimate.korn_disc),
        gate.alpha,
        if gate.satisfied { "satisfied" } else { "violated" }
    ))
}

/// Runs the battery; failed checks are reported, not turned into an exit status.
pub fn cmd_identities(cfg: &RunConfig) -> Outcome {
    prepare_out(&cfg.out)?;
    let battery = identity_battery(&cfg.identity_grids, cfg.seed).map_err(run_err)?;
    write_json(&cfg.out, "identities_report.json", &battery)?;
    let failed: Vec<&str> = battery
        .reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.name.as_str())
        .chain(battery.exact.iter().filter(|c| !c.pass).map(|c| c.name.as_str()))
        .chain(battery.inequalities.iter().filter(|c| !c.pass).map(|c| c.name.as_str()))
        .collect();
    Ok(format!(
        "{}{} checks, {} failed{}",
        battery.table(),
        battery.reports.len() + battery.exact.len() + battery.inequalities.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(": {}", failed.join(", "))
        }
    ))
}

#[derive(Serialize)]
struct MmsLevel {
    n: usize,
    h: f64,
    error_l2: f64,
    method: &'static str,
    iterations: usize,
}

#[derive(Serialize)]
struct MmsReport {
    p: f64,
    mu: f64,
    variant: &'static str,
    amplitude: f64,
    levels: Vec<MmsLevel>,
    orders: Vec<f64>,
    min_order: f64,
    wall_time_s: f64,
}

/// Manufactured-solution refinement study over `mms_grids`.
pub fn cmd_mms(cfg: &RunConfig) -> Outcome {
    prepare_out(&cfg.out)?;
    let t0 = std::time::Instant::now();
    let mms = RunConfig {
        forcing: crate::config::ForcingConfig {
            kind: crate::config::ForcingKind::Manufactured,
            ..cfg.forcing.clone()
        },
        ..cfg.clone()
    };
    let params = cfg.params().map_err(run_err)?;
    let mut levels = Vec::new();
    for &n in &cfg.mms_grids {
        let dom = mms.domain_at(n).map_err(run_err)?;
        let f = mms.forcing_on(&dom, cfg.mu).map_err(run_err)?;
        let exact = mms.exact_on(&dom).expect("manufactured");
        let (u, method, iterations) = if cfg.mu == 0.0 && cfg.p < 2.0 {
            let j = EnergyFunctional::new(dom, params, f).map_err(run_err)?;
            let (u, r) = minimize_with(&j, &cfg.minimizer, None).map_err(run_err)?;
            (u, "energy minimisation", r.iterations)
        } else {
            let prob = slipplap::solver::SlipProblem::new(dom, params, cfg.q, f, cfg.bc).map_err(run_err)?;
            let (u, r) = fixed_point(&prob, None, &cfg.solver).map_err(|e| classify(e, &cfg.out, "mms_report.json"))?;
            (u, "fixed point", r.iterations)
        };
        levels.push(MmsLevel {
            n,
            h: dom.h(),
            error_l2: rel_l2(&u, &exact, &dom).map_err(run_err)?,
            method,
            iterations,
        });
    }
    let orders: Vec<f64> = levels
        .windows(2)
        .map(|w| (w[0].error_l2 / w[1].error_l2).ln() / (w[0].h / w[1].h).ln())
        .collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let report = MmsReport {
        p: cfg.p,
        mu: cfg.mu,
        variant: cfg.bc.name(),
        amplitude: cfg.forcing.scale,
        levels,
        orders,
        min_order,
        wall_time_s: t0.elapsed().as_secs_f64(),
    };
    write_json(&cfg.out, "mms_report.json", &report)?;
    let mut s = format!("{:>6} {:>12} {:>14} {:>8}\n", "n", "h", "L2 error", "order");
    for (k, l) in report.levels.iter().enumerate() {
        let o = if k == 0 {
            "-".to_string()
        } else {
            format!("{:.3}", report.orders[k - 1])
        };
        s += &format!("{:>6} {:>12.4e} {:>14.4e} {:>8}\n", l.n, l.h, l.error_l2, o);
    }
    s += &format!("observed order {:.3}", report.min_order);
    Ok(s)
}

#[derive(Debug, Serialize)]
pub struct ExponentsReport {
    pub p: f64,
    pub n: f64,
    pub q: f64,
    pub q_hat: Option<f64>,
    pub r_of_2: Option<f64>,
    pub r_of_q: Option<f64>,
    pub mu_exponent: f64,
}

pub fn exponents_report(p: f64, q: f64, n: f64) -> Result<ExponentsReport, Failure> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Failure::Usage(format!("p must lie in (1, 2], got {p}")));
    }
    if !(n >= 2.0) {
        return Err(Failure::Usage(format!("n must be at least 2, got {n}")));
    }
    Ok(ExponentsReport {
        p,
        n,
        q,
        q_hat: q_hat(n, p).ok(),
        r_of_2: critical_r(2.0, n, p).ok(),
        r_of_q: critical_r(q, n, p).ok(),
        mu_exponent: mu_exponent(p),
    })
}

/// Pure exponent algebra; prints JSON to stdout and writes nothing.
pub fn cmd_exponents(p: f64, q: f64, n: f64) -> Outcome {
    let r = exponents_report(p, q, n)?;
    serde_json::to_string_pretty(&r).map_err(|e| Failure::Run(e.to_string()))
}
