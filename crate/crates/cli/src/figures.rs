//! `figures`: CSV data behind the scale-function, boundary-equation, value
//! and generator plots.

use std::fs;
use std::path::Path;

use drawdown_cds::stopping::{boundary_f, candidate_j, f_r_of_b, OptimalSwitch};
use drawdown_cds::verification::{discounted_generator, interior_grid};
use drawdown_cds::{RunConfig, ScaleEvaluator, SwitchPayoff};
use serde::Serialize;

use crate::report::evaluator;
use crate::CliError;

/// Diffusion coefficients always plotted; the configured one is added.
const REFERENCE_SIGMAS: [f64; 2] = [0.0, 0.2];
/// Range of the scale-function plot.
const SCALE_X_MAX: f64 = 5.0;
/// Range of `b` for the `f_r` plot.
const F_R_B_MAX: f64 = 2.0;

#[derive(Serialize)]
struct ScaleRow {
    sigma: f64,
    x: f64,
    w_esscher: f64,
    ratio_w: f64,
}

#[derive(Serialize)]
struct RootsRow {
    sigma: f64,
    b: f64,
    f_r: f64,
    h: f64,
    f_h: f64,
}

#[derive(Serialize)]
struct ValueRow {
    sigma: f64,
    y: f64,
    g: f64,
    j_minus: f64,
    j_plus: f64,
    v: f64,
}

#[derive(Serialize)]
struct GeneratorRow {
    sigma: f64,
    y: f64,
    generator_g: f64,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Value of the rule `tau_h-` at `y`, stopping at once below `h`.
fn threshold_value(payoff: &SwitchPayoff<'_>, h: f64, y: f64) -> Result<f64, CliError> {
    Ok(if y < h {
        payoff.value(y)?
    } else {
        candidate_j(payoff, h, y)?
    })
}

struct Curves {
    scale: Vec<ScaleRow>,
    roots: Vec<RootsRow>,
    value: Vec<ValueRow>,
    generator: Vec<GeneratorRow>,
}

fn curves_for(cfg: &RunConfig, eval: &ScaleEvaluator, curves: &mut Curves) -> Result<(), CliError> {
    let sigma = cfg.model.sigma;
    let b = cfg.contract.b;
    let n = cfg.numerics.grid_n;
    let switch = cfg.switch_terms()?;
    let model = cfg.model()?;
    let optimal = OptimalSwitch::solve(eval, switch, b)?;
    let payoff = optimal.payoff();
    let h_star = optimal.h_star();
    let eps = cfg.numerics.epsilon;
    let h_minus = (h_star - eps).max(0.5 * h_star);
    let h_plus = (h_star + eps).min(b);
    let step = |max: f64, i: usize| max * i as f64 / (n - 1) as f64;

    for i in 0..n {
        let x = step(SCALE_X_MAX, i);
        curves.scale.push(ScaleRow {
            sigma,
            x,
            w_esscher: eval.w_esscher(x),
            ratio_w: eval.ratio_w(x)?,
        });
    }
    for i in 0..n {
        let bb = step(F_R_B_MAX, i);
        let h = step(b, i).min(b);
        curves.roots.push(RootsRow {
            sigma,
            b: bb,
            f_r: f_r_of_b(eval, bb)?,
            h,
            f_h: boundary_f(eval, &switch, b, h)?,
        });
    }
    for i in 0..n {
        let y = step(b, i).min(b);
        curves.value.push(ValueRow {
            sigma,
            y,
            g: payoff.value(y)?,
            j_minus: threshold_value(payoff, h_minus, y)?,
            j_plus: threshold_value(payoff, h_plus, y)?,
            v: optimal.value(y)?,
        });
    }
    let r = cfg.contract.r;
    for y in interior_grid(b, n) {
        curves.generator.push(GeneratorRow {
            sigma,
            y,
            generator_g: discounted_generator(&model, payoff, r, y, &cfg.numerics.generator)?,
        });
    }
    Ok(())
}

pub fn write_all(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut sigmas = REFERENCE_SIGMAS.to_vec();
    if !sigmas.contains(&cfg.model.sigma) {
        sigmas.push(cfg.model.sigma);
    }
    let mut curves = Curves {
        scale: Vec::new(),
        roots: Vec::new(),
        value: Vec::new(),
        generator: Vec::new(),
    };
    for sigma in sigmas {
        let run = cfg.with_sigma(sigma);
        run.validate()?;
        let eval = evaluator(&run)?;
        curves_for(&run, &eval, &mut curves)?;
    }
    write_csv(&out.join("fig1_scale.csv"), &curves.scale)?;
    write_csv(&out.join("fig2_roots.csv"), &curves.roots)?;
    write_csv(&out.join("fig3_value.csv"), &curves.value)?;
    write_csv(&out.join("fig4_generator.csv"), &curves.generator)?;
    for name in ["fig1_scale.csv", "fig2_roots.csv", "fig3_value.csv", "fig4_generator.csv"] {
        println!("{}", out.join(name).display());
    }
    Ok(())
}
