//! The five commands. Each returns its report as text; the binary decides
//! where it goes.

use lastiter_core::accountant::{
    best_bound, bound_tstar, guarantee_reports, pabi_baseline, rdp_to_dp,
};
use lastiter_core::divergence::residual_schedule;
use lastiter_core::planner::{
    epoch_independent_bound, epoch_independent_stepsize, plan_for_epsilon,
};
use lastiter_core::sim::{run_pair, Trajectory};
use lastiter_core::{lipschitz_constant, theta, BoundReport, Regime};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, Suite, SweepParam};
use crate::error::{config_err, Error, Result};
use crate::oracle::{
    density_propagate_1d, empirical_lipschitz, neighbor_displacement, prox_defect,
    qp_residual_oracle, renyi_divergence_grid,
};
use crate::report::{fmt_num, regime_label, ser_num, to_csv, to_json, BoundJson};

#[derive(Debug, Clone, Default)]
pub struct Output {
    /// Main report.
    pub body: String,
    /// Extra named files; written next to each other when an output
    /// directory is given.
    pub files: Vec<(String, String)>,
    pub warnings: Vec<String>,
    /// False when a verification suite failed.
    pub passed: bool,
}

impl Output {
    fn report(body: String) -> Self {
        Self {
            body,
            passed: true,
            ..Self::default()
        }
    }
}

#[derive(Serialize)]
struct DpJson {
    #[serde(serialize_with = "ser_num")]
    delta: f64,
    #[serde(serialize_with = "ser_num")]
    epsilon: f64,
}

#[derive(Serialize)]
struct BoundOutput {
    #[serde(serialize_with = "ser_num")]
    alpha: f64,
    regimes: Vec<BoundJson>,
    best: BoundJson,
    pabi: BoundJson,
    dp: Vec<DpJson>,
}

pub fn cmd_bound(cfg: &RunConfig) -> Result<Output> {
    let p = cfg.params();
    let c = cfg.curvature();
    let mut regimes: Vec<BoundReport> = guarantee_reports(&p, &c).into();
    if let Some(t_star) = cfg.targets.t_star {
        regimes.push(bound_tstar(&p, &c, t_star));
    }
    let best = best_bound(&p, &c);
    let pabi = pabi_baseline(&p, cfg.targets.pabi_lipschitz)?;
    let dp = cfg
        .targets
        .deltas
        .iter()
        .map(|&delta| {
            let epsilon = if best.value.is_finite() {
                rdp_to_dp(best.value, p.alpha, delta)?
            } else {
                f64::INFINITY
            };
            Ok(DpJson { delta, epsilon })
        })
        .collect::<Result<_>>()?;
    let mut out = Output::report(to_json(&BoundOutput {
        alpha: p.alpha,
        regimes: regimes.iter().map(BoundJson::new).collect(),
        best: BoundJson::best(&best),
        pabi: BoundJson::new(&pabi),
        dp,
    })?);
    if !best.valid {
        out.warnings
            .push("no regime applies to this configuration; best bound is inf".into());
    }
    Ok(out)
}

#[derive(Serialize)]
struct EpochIndependentJson {
    #[serde(serialize_with = "ser_num")]
    stepsize: f64,
    ell: u64,
    #[serde(serialize_with = "ser_num")]
    bound: f64,
}

#[derive(Serialize)]
struct PlanOutput {
    #[serde(serialize_with = "ser_num")]
    epsilon: f64,
    epochs: u64,
    #[serde(serialize_with = "ser_num")]
    lam_bar: f64,
    #[serde(serialize_with = "ser_num")]
    sigma_bar: f64,
    #[serde(serialize_with = "ser_num")]
    sigma_closed_form: f64,
    #[serde(serialize_with = "ser_num")]
    sigma_inflation: f64,
    #[serde(serialize_with = "ser_num")]
    ell_bar: f64,
    min_cycle_length: Option<u64>,
    convex_degenerate: bool,
    #[serde(serialize_with = "ser_num")]
    achieved_bound: f64,
    epoch_independent: EpochIndependentJson,
}

pub fn cmd_plan(cfg: &RunConfig) -> Result<Output> {
    let epsilon = cfg
        .targets
        .epsilon
        .ok_or_else(|| config_err("plan needs targets.epsilon"))?;
    let epochs = cfg.plan_epochs();
    if epochs == 0 {
        return Err(config_err(
            "plan needs at least one epoch; set targets.epochs",
        ));
    }
    let (pr, cu) = (&cfg.privacy, &cfg.curvature);
    let plan = plan_for_epsilon(
        cu.m,
        cu.upper,
        pr.clip_norm,
        pr.batch_size,
        epochs,
        pr.alpha,
        epsilon,
    )?;
    let stepsize = epoch_independent_stepsize(epochs, cu.m, cu.upper)?;
    let ell = cfg.params().ell();
    let bound = epoch_independent_bound(
        stepsize,
        cu.m,
        cu.upper,
        pr.clip_norm,
        pr.batch_size,
        plan.sigma_bar,
        pr.alpha,
        ell,
    );
    Ok(Output::report(to_json(&PlanOutput {
        epsilon,
        epochs,
        lam_bar: plan.lam_bar,
        sigma_bar: plan.sigma_bar,
        sigma_closed_form: plan.sigma_bar / plan.sigma_inflation,
        sigma_inflation: plan.sigma_inflation,
        ell_bar: plan.ell_bar,
        min_cycle_length: plan.min_cycle_length(),
        convex_degenerate: plan.is_convex_degenerate(),
        achieved_bound: plan.achieved_bound,
        epoch_independent: EpochIndependentJson {
            stepsize,
            ell,
            bound,
        },
    })?))
}

#[derive(Serialize)]
struct SimulateOutput {
    seed: u64,
    iterations: u64,
    differing_index: Option<usize>,
    t_star: Option<u64>,
    first_divergence: Option<u64>,
    #[serde(serialize_with = "ser_vec")]
    final_original: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    final_neighbor: Vec<f64>,
}

fn ser_vec<S: serde::Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_finite() {
            seq.serialize_element(x)?;
        } else {
            seq.serialize_element(&fmt_num(*x))?;
        }
    }
    seq.end()
}

fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let dim = traj.iterates[0].len();
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=dim).map(|j| format!("x{j}")))
        .collect();
    let rows: Vec<Vec<String>> = traj
        .iterates
        .iter()
        .enumerate()
        .map(|(t, x)| {
            std::iter::once(t.to_string())
                .chain(x.iter().map(|&v| fmt_num(v)))
                .collect()
        })
        .collect();
    to_csv(&header, &rows)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Output> {
    let (ds, ds_prime) = cfg.datasets()?;
    let pair = run_pair(
        &ds,
        &ds_prime,
        &cfg.regularizer(),
        &cfg.params(),
        &cfg.x0(),
        cfg.seed,
    )?;
    let summary = to_json(&SimulateOutput {
        seed: cfg.seed,
        iterations: cfg.privacy.iterations,
        differing_index: pair.differing_index,
        t_star: pair.t_star,
        first_divergence: pair.first_divergence,
        final_original: pair.original.last().iter().copied().collect(),
        final_neighbor: pair.neighbor.last().iter().copied().collect(),
    })?;
    let mut out = Output::report(summary.clone());
    out.files = vec![
        ("original.csv".into(), trajectory_csv(&pair.original)?),
        ("neighbor.csv".into(), trajectory_csv(&pair.neighbor)?),
        ("summary.json".into(), summary),
    ];
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub status: Status,
    /// Largest observed excess over the tolerated value; nonpositive on pass.
    #[serde(serialize_with = "ser_num")]
    pub max_violation: f64,
    pub checks: usize,
    pub detail: String,
}

impl SuiteResult {
    fn judged(suite: Suite, max_violation: f64, checks: usize, detail: String) -> Self {
        Self {
            suite: suite.name(),
            status: if max_violation <= 0.0 {
                Status::Pass
            } else {
                Status::Fail
            },
            max_violation,
            checks,
            detail,
        }
    }

    fn skipped(suite: Suite, detail: String) -> Self {
        Self {
            suite: suite.name(),
            status: Status::Skipped,
            max_violation: f64::NEG_INFINITY,
            checks: 0,
            detail,
        }
    }
}

/// Residual grid shared by the `residual-qp` suite and the tests.
pub fn residual_grid() -> Vec<(f64, u64, f64, f64)> {
    let mut grid = Vec::new();
    for &l in &[1.0, 1.25, 2.0] {
        for horizon in 1..=6 {
            for &tau in &[0.0, 0.5] {
                for &gap in &[0.2, 1.0] {
                    grid.push((l, horizon, tau, gap));
                }
            }
        }
    }
    grid
}

/// Largest componentwise and objective gaps between the brute-force QP and
/// the closed-form schedule, relative to the tolerances 1e-6 and 1e-8.
pub fn residual_qp_violation() -> Result<(f64, usize)> {
    let grid = residual_grid();
    let mut worst = f64::NEG_INFINITY;
    for &(l, horizon, tau, gap) in &grid {
        let qp = qp_residual_oracle(l, horizon, tau, gap)?;
        let sched = residual_schedule(l, horizon, tau, gap)?;
        let comp = qp
            .iter()
            .zip(&sched.residuals)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let obj = 0.5 * qp.iter().map(|a| a * a).sum::<f64>();
        let budget = l * tau + gap;
        let closed = 0.5 * budget * budget * theta(l, horizon)?;
        worst = worst.max(comp - 1e-6).max((obj - closed).abs() - 1e-8);
    }
    Ok((worst, grid.len()))
}

/// Oracle divergence `D_alpha(X_T || X'_T)` for a one-dimensional config.
pub fn oracle_divergence(cfg: &RunConfig) -> Result<f64> {
    if cfg.dataset.dim != 1 {
        return Err(Error::Oracle(format!(
            "density oracle needs dataset.dim = 1, got {}",
            cfg.dataset.dim
        )));
    }
    let (ds, ds_prime) = cfg.datasets()?;
    let p = cfg.params();
    let (a, b) = density_propagate_1d(
        &ds,
        &ds_prime,
        &cfg.regularizer(),
        &p,
        cfg.dataset.x0,
        &cfg.grid(),
    )?;
    renyi_divergence_grid(&a, &b, p.alpha)
}

fn run_suite(cfg: &RunConfig, suite: Suite) -> Result<SuiteResult> {
    let p = cfg.params();
    let c = cfg.curvature();
    let n = cfg.oracle.n_pairs;
    let seed = cfg.seed;
    Ok(match suite {
        Suite::Lipschitz => {
            if p.lam > c.stepsize_cap() {
                return Ok(SuiteResult::skipped(
                    suite,
                    format!("lam = {} exceeds 1/(2(m+M)) = {}", p.lam, c.stepsize_cap()),
                ));
            }
            let (ds, _) = cfg.datasets()?;
            let claimed = lipschitz_constant(p.lam, c.m, c.upper)? * cfg.oracle.lipschitz_scale;
            let emp = empirical_lipschitz(&ds, &cfg.regularizer(), p.lam, p.clip_norm, n, seed);
            SuiteResult::judged(
                suite,
                emp / claimed - (1.0 + 1e-6),
                n,
                format!("empirical {} vs claimed {}", fmt_num(emp), fmt_num(claimed)),
            )
        }
        Suite::Displacement => {
            let (ds, ds_prime) = cfg.datasets()?;
            let b = p.batch_size as usize;
            let disp = neighbor_displacement(&ds, &ds_prime, p.lam, p.clip_norm, b, n, seed)?;
            let bound = 2.0 * p.lam * p.clip_norm / b as f64;
            SuiteResult::judged(
                suite,
                disp - bound - 1e-12,
                n,
                format!(
                    "displacement {} vs 2 lam C / b = {}",
                    fmt_num(disp),
                    fmt_num(bound)
                ),
            )
        }
        Suite::Prox => {
            let defect = prox_defect(
                &cfg.regularizer(),
                p.lam,
                p.clip_norm,
                cfg.dataset.dim,
                n,
                seed,
            );
            SuiteResult::judged(
                suite,
                defect - 1e-14,
                n,
                format!("largest firm-nonexpansiveness defect {}", fmt_num(defect)),
            )
        }
        Suite::ResidualQp => {
            let (worst, count) = residual_qp_violation()?;
            SuiteResult::judged(
                suite,
                worst,
                count,
                "QP minimizer vs closed-form schedule".into(),
            )
        }
        Suite::DensityBound => {
            let d = match oracle_divergence(cfg) {
                Ok(d) => d,
                Err(Error::Oracle(reason)) => return Ok(SuiteResult::skipped(suite, reason)),
                Err(e) => return Err(e),
            };
            let valid: Vec<BoundReport> = guarantee_reports(&p, &c)
                .into_iter()
                .filter(|r| r.valid)
                .collect();
            let Some(tightest) = valid.iter().min_by(|a, b| a.value.total_cmp(&b.value)) else {
                return Ok(SuiteResult::skipped(
                    suite,
                    "no bound regime applies".into(),
                ));
            };
            SuiteResult::judged(
                suite,
                d - tightest.value,
                valid.len(),
                format!(
                    "oracle divergence {} vs {} bound {}",
                    fmt_num(d),
                    tightest.regime,
                    fmt_num(tightest.value)
                ),
            )
        }
    })
}

#[derive(Serialize)]
struct VerifyOutput {
    passed: bool,
    suites: Vec<SuiteResult>,
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Output> {
    let mut suites = cfg.oracle.suites.clone();
    suites.sort_unstable();
    suites.dedup();
    let results: Vec<SuiteResult> = suites
        .par_iter()
        .map(|&s| run_suite(cfg, s))
        .collect::<Result<_>>()?;
    let passed = results.iter().all(|r| r.status != Status::Fail);
    let mut out = Output::report(to_json(&VerifyOutput {
        passed,
        suites: results,
    })?);
    out.passed = passed;
    Ok(out)
}

pub const SWEEP_COLUMNS: [&str; 7] = [
    "curvature_independent",
    "diameter",
    "multi_epoch",
    "multi_epoch_convex",
    "best_regime",
    "best_value",
    "oracle_divergence",
];

fn sweep_row(cfg: &RunConfig, point: &[(SweepParam, f64)]) -> Result<Vec<String>> {
    let cfg = cfg
        .with_point(point)
        .map_err(|e| config_err(format!("sweep point {point:?}: {e}")))?;
    let p = cfg.params();
    let c = cfg.curvature();
    let mut row: Vec<String> = point.iter().map(|&(_, v)| fmt_num(v)).collect();
    let reports = guarantee_reports(&p, &c);
    debug_assert_eq!(
        reports.iter().map(|r| r.regime).collect::<Vec<_>>(),
        [
            Regime::CurvatureIndependent,
            Regime::Diameter,
            Regime::MultiEpoch,
            Regime::MultiEpochConvex
        ]
    );
    row.extend(reports.iter().map(|r| fmt_num(r.value)));
    let best = best_bound(&p, &c);
    row.push(regime_label(&best).into());
    row.push(fmt_num(best.value));
    row.push(if cfg.oracle.enabled && cfg.dataset.dim == 1 {
        match oracle_divergence(&cfg) {
            Ok(d) => fmt_num(d),
            Err(Error::Oracle(_)) => String::new(),
            Err(e) => return Err(e),
        }
    } else {
        String::new()
    });
    Ok(row)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Output> {
    let points = cfg.sweep_points();
    let rows: Vec<Vec<String>> = points
        .par_iter()
        .map(|pt| sweep_row(cfg, pt))
        .collect::<Result<_>>()?;
    let header: Vec<String> = cfg
        .sweep
        .axes
        .iter()
        .map(|a| a.param.name().to_string())
        .chain(SWEEP_COLUMNS.iter().map(|s| s.to_string()))
        .collect();
    Ok(Output::report(to_csv(&header, &rows)?))
}
