//! Free-boundary solution of the contract-switch stopping problem.
//!
//! The optimal rule switches the first time the drawdown falls below `h*`,
//! the unique root in `(0, b)` of
//!
//! ```text
//! f(h) = alpha~ Z(b-h) - r alpha~ W(b-h)^2 / W'(b-h) - gamma.
//! ```
//!
//! `f` is strictly decreasing, and a root exists exactly when `gamma` lies in
//! the window `(alpha~ (1 - r W(0)^2 / W'(0)), alpha~ (Z(b) - r W(b)^2 / W'(b)))`.
//! The value function is `G_b` on `[0, h*]` and `G_b(h*) W(b-y) / W(b-h*)`
//! on `[h*, b]`.

use serde::{Deserialize, Serialize};

use crate::cds::{perpetual_cds_value, CdsTerms, SwitchPayoff, SwitchTerms};
use crate::error::{check_domain, Error, Result};
use crate::scale_fn::ScaleEvaluator;

/// Width of the final bisection bracket for `h*`.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-12;

/// Open interval of switching costs for which `h*` exists and is unique.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaWindow {
    pub lower: f64,
    pub upper: f64,
}

impl GammaWindow {
    pub fn contains(&self, gamma: f64) -> bool {
        self.lower < gamma && gamma < self.upper
    }
}

/// Root `h*` of the boundary equation with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySolution {
    pub h_star: f64,
    pub b: f64,
    pub gamma_window: GammaWindow,
    pub f_at_0: f64,
    pub f_at_b: f64,
    /// `|f(h*)|` at the returned root.
    pub residual: f64,
    /// `|V(h*+) - G(h*)|`.
    pub continuity_gap: f64,
    /// `|V'(h*+) - G'(h*-)|`.
    pub pasting_gap: f64,
    pub iterations: usize,
}

pub fn gamma_window(eval: &ScaleEvaluator, alpha_tilde: f64, b: f64) -> Result<GammaWindow> {
    if !(alpha_tilde < 0.0) {
        return Err(Error::InvalidTerms(format!(
            "alpha_tilde must be < 0, got {alpha_tilde}"
        )));
    }
    check_domain("b", b, 0.0, f64::INFINITY)?;
    let at_zero = eval.exit_kernel(0.0, 0.0);
    let at_b = eval.exit_kernel(b, b);
    Ok(GammaWindow {
        lower: alpha_tilde * at_zero,
        upper: alpha_tilde * at_b,
    })
}

/// `f_r(b) = Z(b) - r (W(b)^2 / W'(b) - W(0)^2 / W'(0)) - 1`; zero at the
/// origin and strictly decreasing.
pub fn f_r_of_b(eval: &ScaleEvaluator, b: f64) -> Result<f64> {
    check_domain("b", b, 0.0, f64::INFINITY)?;
    if b == 0.0 {
        return Ok(0.0);
    }
    Ok(eval.exit_kernel(b, b) - eval.exit_kernel(0.0, 0.0))
}

/// Left-hand side `f(h)` of the boundary equation.
pub fn boundary_f(eval: &ScaleEvaluator, switch: &SwitchTerms, b: f64, h: f64) -> Result<f64> {
    check_domain("h", h, 0.0, b)?;
    Ok(boundary_f_unchecked(eval, switch, b, h))
}

fn boundary_f_unchecked(eval: &ScaleEvaluator, switch: &SwitchTerms, b: f64, h: f64) -> f64 {
    let x = b - h;
    switch.alpha_tilde * eval.exit_kernel(x, x) - switch.gamma
}

pub fn solve_h_star(eval: &ScaleEvaluator, switch: &SwitchTerms, b: f64) -> Result<BoundarySolution> {
    solve_h_star_with_tol(eval, switch, b, DEFAULT_BOUNDARY_TOL)
}

pub fn solve_h_star_with_tol(
    eval: &ScaleEvaluator,
    switch: &SwitchTerms,
    b: f64,
    tol: f64,
) -> Result<BoundarySolution> {
    switch.validate()?;
    let window = gamma_window(eval, switch.alpha_tilde, b)?;
    if !window.contains(switch.gamma) {
        return Err(Error::WindowViolation {
            gamma: switch.gamma,
            lower: window.lower,
            upper: window.upper,
        });
    }
    let f = |h: f64| boundary_f_unchecked(eval, switch, b, h);
    let (f0, fb) = (f(0.0), f(b));
    if !(f0 > 0.0 && fb < 0.0) {
        return Err(Error::NoBracket { f0, fb });
    }

    // f is strictly decreasing, so plain bisection keeps the bracket.
    let (mut lo, mut hi) = (0.0, b);
    let mut iterations = 0;
    while hi - lo > tol && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        iterations += 1;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h_star = 0.5 * (lo + hi);

    let payoff = SwitchPayoff::new(eval, *switch, b)?;
    let g = payoff.value_extended(h_star);
    let x = b - h_star;
    let continuation = g * eval.w_ratio(0, x, 0, x);
    let right_slope = -g * eval.w_ratio(1, x, 0, x);
    Ok(BoundarySolution {
        h_star,
        b,
        gamma_window: window,
        f_at_0: f0,
        f_at_b: fb,
        residual: f(h_star).abs(),
        continuity_gap: (continuation - g).abs(),
        pasting_gap: (right_slope - payoff.derivative_extended(h_star)).abs(),
        iterations,
    })
}

/// Value of the threshold rule `tau_h-`:
/// `J_h(y) = G_b(h) W(b-y) / W(b-h)` for `0 < h <= y <= b`.
pub fn candidate_j(payoff: &SwitchPayoff<'_>, h: f64, y: f64) -> Result<f64> {
    let b = payoff.b();
    if !(h > 0.0) || h > b {
        return Err(Error::Domain {
            name: "h",
            value: h,
            lower: 0.0,
            upper: b,
        });
    }
    check_domain("y", y, h, b)?;
    let e = payoff.evaluator();
    Ok(payoff.value_extended(h) * e.w_ratio(0, b - y, 0, b - h))
}

/// Optimal switch value `V~_b` built on a solved boundary.
#[derive(Debug, Clone, Copy)]
pub struct OptimalSwitch<'a> {
    payoff: SwitchPayoff<'a>,
    solution: BoundarySolution,
    /// `G_b(h*)`.
    g_star: f64,
}

impl<'a> OptimalSwitch<'a> {
    pub fn solve(eval: &'a ScaleEvaluator, switch: SwitchTerms, b: f64) -> Result<Self> {
        let solution = solve_h_star(eval, &switch, b)?;
        Self::from_solution(eval, switch, solution)
    }

    pub fn from_solution(
        eval: &'a ScaleEvaluator,
        switch: SwitchTerms,
        solution: BoundarySolution,
    ) -> Result<Self> {
        let payoff = SwitchPayoff::new(eval, switch, solution.b)?;
        let g_star = payoff.value_extended(solution.h_star);
        Ok(Self {
            payoff,
            solution,
            g_star,
        })
    }

    pub fn solution(&self) -> &BoundarySolution {
        &self.solution
    }

    pub fn payoff(&self) -> &SwitchPayoff<'a> {
        &self.payoff
    }

    pub fn h_star(&self) -> f64 {
        self.solution.h_star
    }

    /// `V~_b(y)` on `[0, b]`.
    pub fn value(&self, y: f64) -> Result<f64> {
        check_domain("y", y, 0.0, self.solution.b)?;
        Ok(self.value_extended(y))
    }

    /// `V~_b(y)` for any `y >= 0`; zero past the default level.
    pub fn value_extended(&self, y: f64) -> f64 {
        if y <= self.solution.h_star {
            self.payoff.value_extended(y)
        } else {
            self.continuation(0, y)
        }
    }

    /// `V~_b'(y)`; at `h*` the left derivative `G_b'(h*)` is returned.
    pub fn derivative(&self, y: f64) -> Result<f64> {
        check_domain("y", y, 0.0, self.solution.b)?;
        Ok(self.derivative_extended(y))
    }

    pub fn derivative_extended(&self, y: f64) -> f64 {
        if y <= self.solution.h_star {
            self.payoff.derivative_extended(y)
        } else if y > self.solution.b {
            0.0
        } else {
            -self.continuation(1, y)
        }
    }

    pub fn second_derivative_extended(&self, y: f64) -> f64 {
        if y <= self.solution.h_star {
            self.payoff.second_derivative_extended(y)
        } else if y > self.solution.b {
            0.0
        } else {
            self.continuation(2, y)
        }
    }

    /// `G_b(h*) W^(n)(b - y) / W(b - h*)`.
    fn continuation(&self, n: u8, y: f64) -> f64 {
        let b = self.solution.b;
        self.g_star * self.payoff.evaluator().w_ratio(n, b - y, 0, b - self.solution.h_star)
    }

    /// Right derivative of the continuation branch at `h*`.
    pub fn right_derivative_at_boundary(&self) -> f64 {
        -self.continuation(1, self.solution.h_star)
    }
}

/// Value of the whole switchable contract at drawdown `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalValue {
    pub cds: f64,
    pub option: f64,
    pub total: f64,
    pub h_star: f64,
}

pub fn total_value(
    eval: &ScaleEvaluator,
    terms: &CdsTerms,
    switch: &SwitchTerms,
    y: f64,
) -> Result<TotalValue> {
    let optimal = OptimalSwitch::solve(eval, *switch, terms.b)?;
    let cds = perpetual_cds_value(eval, terms.p, terms.alpha, terms.b, y)?;
    let option = optimal.value(y)?;
    Ok(TotalValue {
        cds,
        option,
        total: cds + option,
        h_star: optimal.h_star(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::JumpDiffusionModel;

    const B: f64 = 1.6094379124341003;

    fn eval(sigma: f64) -> ScaleEvaluator {
        let m = JumpDiffusionModel::new(0.075, sigma, 0.5, 9.0).unwrap();
        ScaleEvaluator::new(m, 0.1).unwrap()
    }

    fn switch() -> SwitchTerms {
        SwitchTerms::new(-0.025, -5.0, -1.0).unwrap()
    }

    #[test]
    fn reproduces_published_boundaries() {
        let s0 = solve_h_star(&eval(0.0), &switch(), B).unwrap();
        assert!((s0.h_star - 1.1476).abs() < 1e-3, "{}", s0.h_star);
        let s2 = solve_h_star(&eval(0.2), &switch(), B).unwrap();
        assert!((s2.h_star - 0.5590).abs() < 1e-3, "{}", s2.h_star);
    }

    #[test]
    fn boundary_does_not_depend_on_premium_delta() {
        let e = eval(0.2);
        let a = solve_h_star(&e, &switch(), B).unwrap().h_star;
        let other = SwitchTerms::new(-0.5, -5.0, -1.0).unwrap();
        let b = solve_h_star(&e, &other, B).unwrap().h_star;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn window_lower_end_with_diffusion_is_alpha_tilde() {
        let w = gamma_window(&eval(0.2), -5.0, B).unwrap();
        assert_eq!(w.lower, -5.0);
        assert!(w.contains(-1.0));
    }

    #[test]
    fn window_degenerates_at_zero_level() {
        let e = eval(0.0);
        let w = gamma_window(&e, -5.0, 1e-12).unwrap();
        assert!((w.upper - w.lower).abs() < 1e-9);
    }

    #[test]
    fn window_edges_are_rejected() {
        for s in [0.0, 0.2] {
            let e = eval(s);
            let w = gamma_window(&e, -5.0, B).unwrap();
            for gamma in [w.lower, w.upper] {
                let sw = SwitchTerms {
                    gamma,
                    ..switch()
                };
                match solve_h_star(&e, &sw, B) {
                    Err(Error::WindowViolation { .. }) => {}
                    other => panic!("expected window violation, got {other:?}"),
                }
            }
        }
    }

    #[test]
    fn f_r_vanishes_at_zero() {
        for s in [0.0, 0.2] {
            assert!(f_r_of_b(&eval(s), 0.0).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn pasting_diagnostics() {
        for s in [0.0, 0.2] {
            let sol = solve_h_star(&eval(s), &switch(), B).unwrap();
            assert!(sol.continuity_gap <= 1e-10);
            assert!(sol.pasting_gap <= 1e-8, "{}", sol.pasting_gap);
            assert!(sol.f_at_0 > 0.0 && sol.f_at_b < 0.0);
        }
    }

    #[test]
    fn value_function_branches() {
        for s in [0.0, 0.2] {
            let e = eval(s);
            let v = OptimalSwitch::solve(&e, switch(), B).unwrap();
            let g = v.payoff();
            for i in 0..=40 {
                let y = v.h_star() * i as f64 / 40.0;
                assert_eq!(v.value(y).unwrap(), g.value(y).unwrap());
            }
            if s > 0.0 {
                assert_eq!(v.value(B).unwrap(), 0.0);
            }
            assert!(v.value(B + 0.1).is_err());
        }
    }

    #[test]
    fn candidate_at_its_level() {
        let e = eval(0.2);
        let g = SwitchPayoff::new(&e, switch(), B).unwrap();
        assert!((candidate_j(&g, 0.9, 0.9).unwrap() - g.value(0.9).unwrap()).abs() < 1e-15);
        assert!(candidate_j(&g, 0.9, 0.8).is_err());
        assert!(candidate_j(&g, 0.0, 0.8).is_err());
    }

    #[test]
    fn total_value_is_additive() {
        let e = eval(0.0);
        let terms = CdsTerms::new(0.025, 5.0, B, 0.1).unwrap();
        let t = total_value(&e, &terms, &switch(), 1.5).unwrap();
        assert!((t.total - t.cds - t.option).abs() < 1e-12);
        let v = OptimalSwitch::solve(&e, switch(), B).unwrap();
        assert!((t.option - v.value(1.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn zero_cost_switch_is_outside_window_for_published_parameters() {
        // gamma = 0 is the degenerate zero-option limit; the window's upper end
        // is negative here, so the solver must refuse it.
        let e = eval(0.0);
        let w = gamma_window(&e, -5.0, B).unwrap();
        assert!(w.upper < 0.0);
        let sw = SwitchTerms::new(-0.025, -5.0, 0.0).unwrap();
        assert!(matches!(
            solve_h_star(&e, &sw, B),
            Err(Error::WindowViolation { .. })
        ));
    }
}
