//! `verify`: analytic and Monte Carlo check suites.

use drawdown_cds::mc_oracle::{martingale_scan, oracle_suite, two_sided_level, MartingaleReport, OracleCheck};
use drawdown_cds::quadrature::integrate;
use drawdown_cds::stopping::{candidate_j, OptimalSwitch};
use drawdown_cds::verification::{generator_residual_g, interior_grid, variational_check};
use drawdown_cds::{DrawdownSimulator, RunConfig, ScaleEvaluator, SwitchPayoff};
use serde::Serialize;

use crate::report::evaluator;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Headline number of the check (a gap, a residual or a reproduced value).
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct McSection {
    pub max_z: f64,
    pub oracle: Vec<OracleCheck>,
    pub martingale: MartingaleReport,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub sigma: f64,
    pub h_star: f64,
    pub analytic: Option<Vec<Check>>,
    pub mc: Option<McSection>,
    pub failures: Vec<String>,
    pub passed: bool,
}

const SCAN_POINTS: usize = 50;
const OPTIMALITY_MARGIN: f64 = -1e-12;
const TRANSFORM_REL_TOL: f64 = 1e-6;
const MARTINGALE_TIMES: [f64; 3] = [0.5, 1.0, 2.0];

fn analytic_checks(cfg: &RunConfig, eval: &ScaleEvaluator, optimal: &OptimalSwitch<'_>) -> Result<Vec<Check>, CliError> {
    let tol = &cfg.numerics.checks;
    let model = cfg.model()?;
    let b = cfg.contract.b;
    let payoff = optimal.payoff();
    let sol = optimal.solution();
    let mut checks = vec![
        Check::at_most(
            "continuous_pasting",
            sol.continuity_gap,
            tol.continuity_gap,
            format!("h* = {:.6}", sol.h_star),
        ),
        Check::at_most("smooth_pasting", sol.pasting_gap, tol.pasting_gap, format!("h* = {:.6}", sol.h_star)),
    ];

    let grid = interior_grid(b, cfg.numerics.grid_n);
    let residuals = generator_residual_g(&model, payoff, &grid, &cfg.numerics.generator)?;
    let worst = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let target = cfg.contract.r * cfg.switch.gamma;
    checks.push(Check::at_most(
        "generator_flatness",
        worst,
        tol.generator_flatness,
        format!("(L - r) G = {target} + residual on {} points", grid.len()),
    ));

    let report = variational_check(
        &model,
        optimal,
        &grid,
        tol.kink_exclusion,
        tol.variational,
        &cfg.numerics.generator,
    )?;
    checks.push(Check {
        name: "variational_inequality".into(),
        passed: report.passed(),
        value: report.max_continuation_residual.max(report.max_stopping_generator),
        tolerance: tol.variational,
        detail: format!(
            "{} violations; max |(L - r) V| on continuation {:.3e}, max (L - r) V on stopping {:.3e}",
            report.violations.len(),
            report.max_continuation_residual,
            report.max_stopping_generator
        ),
    });

    checks.push(optimality_scan(payoff, optimal.h_star(), b)?);
    checks.push(transform_check(eval)?);
    checks.push(ratio_check(eval)?);
    Ok(checks)
}

/// `J_h*(y) >= J_h(y)` on a grid of thresholds and starting points.
fn optimality_scan(payoff: &SwitchPayoff<'_>, h_star: f64, b: f64) -> Result<Check, CliError> {
    let mut worst = f64::INFINITY;
    for i in 1..=SCAN_POINTS {
        let h = b * i as f64 / (SCAN_POINTS + 1) as f64;
        for j in 0..SCAN_POINTS {
            let y = (h + (b - h) * j as f64 / (SCAN_POINTS - 1) as f64).min(b);
            let best = if y >= h_star {
                candidate_j(payoff, h_star, y)?
            } else {
                payoff.value(y)?
            };
            worst = worst.min(best - candidate_j(payoff, h, y)?);
        }
    }
    Ok(Check {
        name: "optimality_scan".into(),
        passed: worst >= OPTIMALITY_MARGIN,
        value: worst,
        tolerance: OPTIMALITY_MARGIN,
        detail: "min over the grid of J_h*(y) - J_h(y)".into(),
    })
}

/// `int_0^inf exp(-l x) W(x) dx = 1 / (psi(l) - r)` for `l > Phi(r)`.
fn transform_check(eval: &ScaleEvaluator) -> Result<Check, CliError> {
    let phi = eval.phi();
    let model = eval.model();
    let mut worst = 0.0f64;
    for offset in [0.5, 1.0, 3.0] {
        let lambda = phi + offset;
        let upper = 40.0 / offset;
        let integral = integrate(|x| (-lambda * x).exp() * eval.w(x), 0.0, upper, 1e-15, 1e-12)?;
        let exact = 1.0 / (model.laplace_exponent(lambda)? - eval.rate());
        worst = worst.max((integral.value - exact).abs() / exact.abs());
    }
    Ok(Check::at_most(
        "scale_transform",
        worst,
        TRANSFORM_REL_TOL,
        "relative error at Phi(r) + {0.5, 1, 3}".into(),
    ))
}

/// `W / W'` strictly increasing and below `1 / Phi(r)` on `[0, 5]`, read off
/// the gap `1 / Phi(r) - W / W'`, which must stay positive and decrease.
fn ratio_check(eval: &ScaleEvaluator) -> Result<Check, CliError> {
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut min_gap = f64::INFINITY;
    for i in 0..=500 {
        let gap = eval.ratio_w_gap(5.0 * i as f64 / 500.0)?;
        monotone &= gap < prev;
        prev = gap;
        min_gap = min_gap.min(gap);
    }
    Ok(Check {
        name: "ratio_monotone_bounded".into(),
        passed: monotone && min_gap > 0.0,
        value: min_gap,
        tolerance: 0.0,
        detail: format!("min of 1/Phi - W/W' on [0, 5]; strictly increasing: {monotone}"),
    })
}

fn mc_checks(cfg: &RunConfig, h_star: f64) -> Result<McSection, CliError> {
    let model = cfg.model()?;
    let terms = cfg.cds_terms()?;
    let switch = cfg.switch_terms()?;
    let mc = cfg.numerics.mc;
    let b = terms.b;
    let mut oracle = Vec::new();
    for y in [0.5 * b, 0.75 * b] {
        oracle.extend(oracle_suite(&model, &terms, &switch, y, &mc)?);
    }
    let sim = DrawdownSimulator::new(model, terms.r, b, mc)?;
    let y = 0.75 * b;
    let martingale = martingale_scan(&sim, y, two_sided_level(h_star, y), terms.r, &MARTINGALE_TIMES)?;
    Ok(McSection {
        max_z: cfg.numerics.checks.mc_z,
        oracle,
        martingale,
    })
}

pub fn build_report(cfg: &RunConfig, analytic: bool, mc: bool) -> Result<VerifyReport, CliError> {
    let eval = evaluator(cfg)?;
    let switch = cfg.switch_terms()?;
    let optimal = OptimalSwitch::solve(&eval, switch, cfg.contract.b)?;
    let h_star = optimal.h_star();

    let analytic = if analytic {
        Some(analytic_checks(cfg, &eval, &optimal)?)
    } else {
        None
    };
    let mc = if mc { Some(mc_checks(cfg, h_star)?) } else { None };

    let mut failures = Vec::new();
    for c in analytic.iter().flatten().filter(|c| !c.passed) {
        failures.push(format!("{}: {} (tolerance {}) {}", c.name, c.value, c.tolerance, c.detail));
    }
    if let Some(section) = &mc {
        for c in section.oracle.iter().filter(|c| !c.passed(section.max_z)) {
            failures.push(format!(
                "{} at y = {:.4}: analytic {} vs estimate {} (z = {:.2})",
                c.name, c.y, c.analytic, c.estimate.mean, c.z_score
            ));
        }
        for (label, i, j) in &section.martingale.flagged {
            failures.push(format!(
                "martingale {label}: t = {} and t = {} differ by more than 3 SE",
                section.martingale.times[*i], section.martingale.times[*j]
            ));
        }
    }
    Ok(VerifyReport {
        sigma: cfg.model.sigma,
        h_star,
        analytic,
        mc,
        passed: failures.is_empty(),
        failures,
    })
}

pub fn run(cfg: &RunConfig, analytic: bool, mc: bool, json: bool) -> Result<(), CliError> {
    let report = build_report(cfg, analytic, mc)?;
    if json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Usage(e.to_string()))?;
        println!("{text}");
    } else {
        println!("sigma {}  h* {:.6}", report.sigma, report.h_star);
        for c in report.analytic.iter().flatten() {
            let status = if c.passed { "pass" } else { "FAIL" };
            println!("[{status}] {:<24} {:>12.4e}  (tol {:.1e})  {}", c.name, c.value, c.tolerance, c.detail);
        }
        if let Some(section) = &report.mc {
            for c in &section.oracle {
                let status = if c.passed(section.max_z) { "pass" } else { "FAIL" };
                println!(
                    "[{status}] {:<16} y={:.4} h={:.4}  analytic {:.8}  mc {:.8} ± {:.2e}  z {:+.2}",
                    c.name, c.y, c.h, c.analytic, c.estimate.mean, c.estimate.std_error, c.z_score
                );
            }
            let m = &section.martingale;
            let status = if m.constant() { "pass" } else { "FAIL" };
            for (k, t) in m.times.iter().enumerate() {
                println!(
                    "[{status}] martingale t={t:<4} W {:.8} ± {:.2e} (start {:.8})  Z {:.8} ± {:.2e} (start {:.8})",
                    m.w_estimates[k].mean,
                    m.w_estimates[k].std_error,
                    m.w_initial,
                    m.z_estimates[k].mean,
                    m.z_estimates[k].std_error,
                    m.z_initial
                );
            }
        }
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed(report.failures))
    }
}
