//! `price` and `boundary` reports.

use drawdown_cds::stopping::{f_r_of_b, solve_h_star_with_tol, total_value};
use drawdown_cds::{par_spread_perpetual, BoundarySolution, Error, RunConfig, ScaleEvaluator};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct PriceReport {
    pub y: f64,
    pub sigma: f64,
    pub b: f64,
    /// Value of the outright contract to the buyer.
    pub cds_value: f64,
    /// Value of the option to switch.
    pub switch_value: f64,
    pub total_value: f64,
    pub h_star: f64,
    /// Premium rate setting the outright contract value to zero; `null`
    /// when no premium is ever paid (immediate default).
    pub par_spread: Option<f64>,
}

pub fn evaluator(cfg: &RunConfig) -> Result<ScaleEvaluator, CliError> {
    let model = cfg.model()?;
    Ok(ScaleEvaluator::with_root_tol(model, cfg.contract.r, cfg.numerics.root_tol)?)
}

pub fn price_report(cfg: &RunConfig, y: f64) -> Result<PriceReport, CliError> {
    let terms = cfg.cds_terms()?;
    let switch = cfg.switch_terms()?;
    let eval = evaluator(cfg)?;
    let value = total_value(&eval, &terms, &switch, y)?;
    let par_spread = match par_spread_perpetual(&eval, terms.alpha, terms.b, y) {
        Ok(s) => Some(s),
        Err(Error::DivisionByZero(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(PriceReport {
        y,
        sigma: cfg.model.sigma,
        b: terms.b,
        cds_value: value.cds,
        switch_value: value.option,
        total_value: value.total,
        h_star: value.h_star,
        par_spread,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn price(cfg: &RunConfig, y: f64, json: bool) -> Result<(), CliError> {
    let r = price_report(cfg, y)?;
    if json {
        println!("{}", to_json(&r)?);
        return Ok(());
    }
    println!("y            {}", r.y);
    println!("sigma        {}", r.sigma);
    println!("b            {}", r.b);
    println!("cds value    {:.10}", r.cds_value);
    println!("switch value {:.10}", r.switch_value);
    println!("total value  {:.10}", r.total_value);
    println!("h*           {:.6}", r.h_star);
    match r.par_spread {
        Some(s) => println!("par spread   {s:.10}"),
        None => println!("par spread   undefined"),
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct BoundaryReport {
    pub sigma: f64,
    pub gamma: f64,
    pub alpha_tilde: f64,
    /// `f_r(b)`; the window width is `alpha_tilde * f_r(b)`.
    pub f_r_of_b: f64,
    #[serde(flatten)]
    pub solution: BoundarySolution,
}

pub fn boundary_report(cfg: &RunConfig) -> Result<BoundaryReport, CliError> {
    let switch = cfg.switch_terms()?;
    let eval = evaluator(cfg)?;
    let b = cfg.contract.b;
    let solution = solve_h_star_with_tol(&eval, &switch, b, cfg.numerics.boundary_tol)?;
    Ok(BoundaryReport {
        sigma: cfg.model.sigma,
        gamma: switch.gamma,
        alpha_tilde: switch.alpha_tilde,
        f_r_of_b: f_r_of_b(&eval, b)?,
        solution,
    })
}

pub fn boundary(cfg: &RunConfig, json: bool) -> Result<(), CliError> {
    let r = boundary_report(cfg)?;
    if json {
        println!("{}", to_json(&r)?);
        return Ok(());
    }
    let s = &r.solution;
    println!("sigma           {}", r.sigma);
    println!("gamma           {}", r.gamma);
    println!("gamma window    ({}, {})", s.gamma_window.lower, s.gamma_window.upper);
    println!("f(0)            {:.12}", s.f_at_0);
    println!("f(b)            {:.12}", s.f_at_b);
    println!("h*              {:.6}", s.h_star);
    println!("residual        {:.3e}", s.residual);
    println!("continuity gap  {:.3e}", s.continuity_gap);
    println!("pasting gap     {:.3e}", s.pasting_gap);
    println!("iterations      {}", s.iterations);
    Ok(())
}
