//! Numerical checks of the generator equation and the variational inequality.
//!
//! Away from zero the drawdown `Y = S - X` moves like `-X`, so its generator
//! acting on a function `F` of the drawdown is
//!
//! ```text
//! L F(z) = -mu F'(z) + sigma^2 / 2 F''(z) + a int_0^inf [F(z + s) - F(z)] c exp(-c s) ds
//! ```
//!
//! (a downward jump of `X` of size `s` pushes the drawdown up by `s`). The
//! jump measure has finite mass, so no compensator is needed. Targets are
//! evaluated beyond the default level `b` through their closed forms with
//! `W = 0` and `Z = 1` on the negative half-line.

use serde::{Deserialize, Serialize};

use crate::cds::SwitchPayoff;
use crate::error::{Error, Result};
use crate::levy_model::JumpDiffusionModel;
use crate::quadrature::integrate_pieces;
use crate::stopping::OptimalSwitch;

/// Numerical settings for [`apply_generator`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub quad_rel_tol: f64,
    pub quad_abs_tol: f64,
    /// Exponential jump-size mass ignored beyond the truncation point.
    pub tail_cutoff: f64,
    /// Step for finite-difference derivatives of targets without analytic ones.
    pub fd_step: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            quad_rel_tol: 1e-9,
            quad_abs_tol: 1e-13,
            tail_cutoff: 1e-14,
            fd_step: 1e-5,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [self.quad_rel_tol, self.quad_abs_tol, self.tail_cutoff, self.fd_step];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(
                "generator tolerances, tail_cutoff and fd_step must be positive".into(),
            ));
        }
        if self.tail_cutoff >= 1.0 {
            return Err(Error::Config("tail_cutoff must be < 1".into()));
        }
        Ok(())
    }

    fn truncation(&self, jump_decay: f64) -> f64 {
        -self.tail_cutoff.ln() / jump_decay
    }
}

/// A function of the drawdown that the generator can be applied to.
pub trait GeneratorTarget {
    fn value(&self, y: f64) -> f64;
    fn derivative(&self, y: f64) -> f64;
    fn second_derivative(&self, y: f64) -> f64;
    /// Points where the function or its derivatives are not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl GeneratorTarget for SwitchPayoff<'_> {
    fn value(&self, y: f64) -> f64 {
        self.value_extended(y)
    }
    fn derivative(&self, y: f64) -> f64 {
        self.derivative_extended(y)
    }
    fn second_derivative(&self, y: f64) -> f64 {
        self.second_derivative_extended(y)
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.b()]
    }
}

impl GeneratorTarget for OptimalSwitch<'_> {
    fn value(&self, y: f64) -> f64 {
        self.value_extended(y)
    }
    fn derivative(&self, y: f64) -> f64 {
        self.derivative_extended(y)
    }
    fn second_derivative(&self, y: f64) -> f64 {
        self.second_derivative_extended(y)
    }
    fn breakpoints(&self) -> Vec<f64> {
        vec![self.h_star(), self.solution().b]
    }
}

/// Wraps a plain function and differentiates it with central differences.
pub struct FiniteDifference<F> {
    f: F,
    step: f64,
    breakpoints: Vec<f64>,
}

impl<F: Fn(f64) -> f64> FiniteDifference<F> {
    pub fn new(f: F, step: f64, breakpoints: Vec<f64>) -> Self {
        Self {
            f,
            step,
            breakpoints,
        }
    }
}

impl<F: Fn(f64) -> f64> GeneratorTarget for FiniteDifference<F> {
    fn value(&self, y: f64) -> f64 {
        (self.f)(y)
    }
    fn derivative(&self, y: f64) -> f64 {
        let h = self.step;
        ((self.f)(y + h) - (self.f)(y - h)) / (2.0 * h)
    }
    fn second_derivative(&self, y: f64) -> f64 {
        let h = self.step;
        ((self.f)(y + h) - 2.0 * (self.f)(y) + (self.f)(y - h)) / (h * h)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// Expected rate of change of the target under the drawdown dynamics,
/// `L F(z)`, for `z > 0`.
pub fn apply_generator<T: GeneratorTarget + ?Sized>(
    model: &JumpDiffusionModel,
    target: &T,
    z: f64,
    cfg: &GeneratorConfig,
) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain {
            name: "z",
            value: z,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    let mut local = -model.mu * target.derivative(z);
    if model.has_unbounded_variation() {
        local += 0.5 * model.sigma * model.sigma * target.second_derivative(z);
    }

    let c = model.jump_decay;
    let s_max = cfg.truncation(c);
    let mut points = vec![0.0, s_max];
    points.extend(
        target
            .breakpoints()
            .into_iter()
            .map(|p| p - z)
            .filter(|&s| s > 0.0 && s < s_max),
    );
    points.sort_by(f64::total_cmp);
    points.dedup();

    let base = target.value(z);
    let integrand = |s: f64| (target.value(z + s) - base) * c * (-c * s).exp();
    let jump = integrate_pieces(integrand, &points, cfg.quad_abs_tol, cfg.quad_rel_tol)?;
    Ok(local + model.jump_rate * jump.value)
}

/// `(L - r) F(z)`.
pub fn discounted_generator<T: GeneratorTarget + ?Sized>(
    model: &JumpDiffusionModel,
    target: &T,
    r: f64,
    z: f64,
    cfg: &GeneratorConfig,
) -> Result<f64> {
    Ok(apply_generator(model, target, z, cfg)? - r * target.value(z))
}

/// `n` equally spaced points strictly inside `(0, b)`.
pub fn interior_grid(b: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| b * i as f64 / (n + 1) as f64).collect()
}

/// `(L - r) G_b(z) - r gamma` on the grid; zero when the generator equation
/// holds.
pub fn generator_residual_g(
    model: &JumpDiffusionModel,
    payoff: &SwitchPayoff<'_>,
    grid: &[f64],
    cfg: &GeneratorConfig,
) -> Result<Vec<f64>> {
    let r = payoff.evaluator().rate();
    let target = r * payoff.terms().gamma;
    grid.iter()
        .map(|&z| Ok(discounted_generator(model, payoff, r, z, cfg)? - target))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Stopping,
    Continuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalPoint {
    pub y: f64,
    pub region: Region,
    /// `G_b(y) - V(y)`.
    pub obstacle: f64,
    /// `(L - r) V(y)`.
    pub generator: f64,
    /// `(L - r) G_b(y)`.
    pub payoff_generator: f64,
}

impl VariationalPoint {
    /// `max{G - V, (L - r) V}`, zero for the exact solution.
    pub fn inequality(&self) -> f64 {
        self.obstacle.max(self.generator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport {
    pub h_star: f64,
    pub tol: f64,
    pub points: Vec<VariationalPoint>,
    pub violations: Vec<VariationalPoint>,
    /// Largest `|(L - r) V|` on the continuation grid.
    pub max_continuation_residual: f64,
    /// Largest `(L - r) V` on the stopping grid (must be `<= 0`).
    pub max_stopping_generator: f64,
    /// Largest `|max{G - V, (L - r) V}|` over the grid.
    pub max_inequality_residual: f64,
}

impl VariationalReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates `max{G - V, (L - r) V} = 0` on the grid. Points within
/// `kink_exclusion` of `h*` are skipped.
pub fn variational_check(
    model: &JumpDiffusionModel,
    value: &OptimalSwitch<'_>,
    grid: &[f64],
    kink_exclusion: f64,
    tol: f64,
    cfg: &GeneratorConfig,
) -> Result<VariationalReport> {
    let payoff = value.payoff();
    let r = payoff.evaluator().rate();
    let h_star = value.h_star();
    let mut points = Vec::with_capacity(grid.len());
    for &y in grid {
        if (y - h_star).abs() < kink_exclusion {
            continue;
        }
        let region = if y < h_star {
            Region::Stopping
        } else {
            Region::Continuation
        };
        points.push(VariationalPoint {
            y,
            region,
            obstacle: payoff.value_extended(y) - value.value_extended(y),
            generator: discounted_generator(model, value, r, y, cfg)?,
            payoff_generator: discounted_generator(model, payoff, r, y, cfg)?,
        });
    }

    let violations: Vec<_> = points
        .iter()
        .copied()
        .filter(|p| match p.region {
            Region::Continuation => p.generator.abs() > tol || p.obstacle >= 0.0,
            Region::Stopping => p.obstacle != 0.0 || p.generator > tol,
        })
        .collect();
    let fold_max = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    let max_continuation_residual = fold_max(
        &mut points
            .iter()
            .filter(|p| p.region == Region::Continuation)
            .map(|p| p.generator.abs()),
    );
    let max_stopping_generator = fold_max(
        &mut points
            .iter()
            .filter(|p| p.region == Region::Stopping)
            .map(|p| p.generator),
    );
    let max_inequality_residual = fold_max(&mut points.iter().map(|p| p.inequality().abs()));
    Ok(VariationalReport {
        h_star,
        tol,
        points,
        violations,
        max_continuation_residual,
        max_stopping_generator,
        max_inequality_residual,
    })
}
