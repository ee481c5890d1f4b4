//! Perpetual drawdown CDS and the payoff of the contract-switch option.
//!
//! The buyer pays premium `p` on every increase of the running maximum and
//! receives `alpha` when the drawdown first exceeds `b`. The perpetual value
//! at drawdown `y` is
//!
//! ```text
//! C(y; p, alpha) = alpha Z(b-y) - (p + r alpha W(b)) / W'(b) * W(b-y)
//! ```
//!
//! with scale functions at the discount rate `r`. The switch option pays
//! `G(y) = C(y; p~, alpha~) - gamma` where `p~ = p^ - p` and
//! `alpha~ = alpha^ - alpha` are the premium and coverage reductions.

use serde::{Deserialize, Serialize};

use crate::drawdown::DrawdownProblem;
use crate::error::{check_domain, Error, Result};
use crate::scale_fn::ScaleEvaluator;

/// Economics of the outright contract. Monetary amounts are in contract
/// currency units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdsTerms {
    /// Premium per unit increase of the running maximum.
    pub p: f64,
    /// Default payment.
    pub alpha: f64,
    /// Default drawdown level.
    pub b: f64,
    /// Discount rate.
    pub r: f64,
}

impl CdsTerms {
    pub fn new(p: f64, alpha: f64, b: f64, r: f64) -> Result<Self> {
        let terms = Self { p, alpha, b, r };
        terms.validate()?;
        Ok(terms)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.p, self.alpha, self.b, self.r].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidTerms("contract values must be finite".into()));
        }
        if self.b <= 0.0 {
            return Err(Error::InvalidTerms(format!("b must be > 0, got {}", self.b)));
        }
        if self.r <= 0.0 {
            return Err(Error::InvalidTerms(format!("r must be > 0, got {}", self.r)));
        }
        if self.p < 0.0 {
            return Err(Error::InvalidTerms(format!("p must be >= 0, got {}", self.p)));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidTerms(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Differences between the replacement and the original contract, plus the
/// switching cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchTerms {
    /// `p^ - p`, negative.
    pub p_tilde: f64,
    /// `alpha^ - alpha`, negative.
    pub alpha_tilde: f64,
    /// Switching cost, non-positive.
    pub gamma: f64,
}

impl SwitchTerms {
    pub fn new(p_tilde: f64, alpha_tilde: f64, gamma: f64) -> Result<Self> {
        let terms = Self {
            p_tilde,
            alpha_tilde,
            gamma,
        };
        terms.validate()?;
        Ok(terms)
    }

    /// Builds the deltas from the outright contract and its replacement.
    pub fn from_contracts(outright: &CdsTerms, p_hat: f64, alpha_hat: f64, gamma: f64) -> Result<Self> {
        Self::new(p_hat - outright.p, alpha_hat - outright.alpha, gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.p_tilde, self.alpha_tilde, self.gamma]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidTerms("switch values must be finite".into()));
        }
        if self.p_tilde >= 0.0 {
            return Err(Error::InvalidTerms(format!(
                "the new premium must be lower (p_tilde < 0), got p_tilde = {}",
                self.p_tilde
            )));
        }
        if self.alpha_tilde >= 0.0 {
            return Err(Error::InvalidTerms(format!(
                "the new coverage must be lower (alpha_tilde < 0), got alpha_tilde = {}",
                self.alpha_tilde
            )));
        }
        if self.gamma > 0.0 {
            return Err(Error::InvalidTerms(format!(
                "switching cost gamma must be <= 0, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// `alpha^ / alpha`, the coverage retained after the switch.
    pub fn coverage_ratio(&self, outright: &CdsTerms) -> Option<f64> {
        (outright.alpha != 0.0).then(|| (outright.alpha + self.alpha_tilde) / outright.alpha)
    }
}

fn check_level(b: f64) -> Result<()> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain {
            name: "b",
            value: b,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    Ok(())
}

/// Perpetual CDS value from the buyer's side, evaluator built at `u = r`.
pub fn perpetual_cds_value(eval: &ScaleEvaluator, p: f64, alpha: f64, b: f64, y: f64) -> Result<f64> {
    check_level(b)?;
    check_domain("y", y, 0.0, b)?;
    Ok(cds_closed_form(eval, p, alpha, b, y))
}

/// Closed form without the domain check; for `y > b` it returns the
/// post-default value `alpha`.
fn cds_closed_form(eval: &ScaleEvaluator, p: f64, alpha: f64, b: f64, y: f64) -> f64 {
    let x = b - y;
    if x < 0.0 {
        return alpha;
    }
    alpha * eval.exit_kernel(x, b) - p * eval.w_ratio(0, x, 1, b)
}

/// Premium making the perpetual contract worth zero at drawdown `y`.
pub fn par_spread_perpetual(eval: &ScaleEvaluator, alpha: f64, b: f64, y: f64) -> Result<f64> {
    let problem = DrawdownProblem::new(eval, b, y)?;
    let annuity = problem.discounted_max_increase();
    if annuity == 0.0 {
        return Err(Error::DivisionByZero("par spread at zero premium annuity"));
    }
    Ok(alpha * problem.exit_up_transform() / annuity)
}

/// Payoff `G_b` of the switch option together with its derivatives.
#[derive(Debug, Clone, Copy)]
pub struct SwitchPayoff<'a> {
    eval: &'a ScaleEvaluator,
    terms: SwitchTerms,
    b: f64,
}

impl<'a> SwitchPayoff<'a> {
    pub fn new(eval: &'a ScaleEvaluator, terms: SwitchTerms, b: f64) -> Result<Self> {
        check_level(b)?;
        Ok(Self { eval, terms, b })
    }

    pub fn terms(&self) -> &SwitchTerms {
        &self.terms
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn evaluator(&self) -> &'a ScaleEvaluator {
        self.eval
    }

    /// `1 / Phi(r) - W(b) / W'(b)`.
    fn gap_b(&self) -> f64 {
        self.eval.ratio_w_gap(self.b).unwrap_or(f64::NAN)
    }

    /// `G_b(y)` for `0 <= y <= b`.
    pub fn value(&self, y: f64) -> Result<f64> {
        check_domain("y", y, 0.0, self.b)?;
        Ok(self.value_extended(y))
    }

    /// `G_b(y)` from the closed form for any `y >= 0`. Beyond `b` it takes the
    /// post-default value `alpha~ - gamma` (`W = 0`, `Z = 1` on the negative
    /// half-line).
    pub fn value_extended(&self, y: f64) -> f64 {
        cds_closed_form(
            self.eval,
            self.terms.p_tilde,
            self.terms.alpha_tilde,
            self.b,
            y,
        ) - self.terms.gamma
    }

    /// `G_b'(y)`, one-sided at the endpoints.
    pub fn derivative(&self, y: f64) -> Result<f64> {
        check_domain("y", y, 0.0, self.b)?;
        Ok(self.derivative_extended(y))
    }

    pub fn derivative_extended(&self, y: f64) -> f64 {
        let e = self.eval;
        let x = self.b - y;
        if x < 0.0 {
            return 0.0;
        }
        let t = &self.terms;
        t.alpha_tilde * e.rate() * (-e.w_detrended(0, x) - self.gap_b() * e.w_prime(x))
            + t.p_tilde * e.w_ratio(1, x, 1, self.b)
    }

    pub fn second_derivative_extended(&self, y: f64) -> f64 {
        let e = self.eval;
        let x = self.b - y;
        if x < 0.0 {
            return 0.0;
        }
        let t = &self.terms;
        t.alpha_tilde * e.rate() * (e.w_detrended(1, x) + self.gap_b() * e.w_second(x))
            - t.p_tilde * e.w_ratio(2, x, 1, self.b)
    }
}
