//! Closed-form scale functions for the exponential-jump model.
//!
//! With the roots `l_i` of `psi(l) = u`, the `u`-scale function is the
//! partial-fraction expansion of `1 / (psi(l) - u)`:
//!
//! ```text
//! W(x) = sum_i exp(l_i x) / psi'(l_i),   x >= 0,      W(x) = 0 for x < 0
//! Z(x) = 1 + u * int_0^x W(z) dz
//! ```
//!
//! One-sided conventions: at `x = 0` the right limit `W(0+)` is returned,
//! which is `1 / mu` for `sigma = 0` and `0` for `sigma > 0`. Derivatives at
//! zero are right derivatives.

use crate::error::{check_domain, Error, Result};
use crate::levy_model::{JumpDiffusionModel, RootSet, DEFAULT_ROOT_TOL};

/// Minimum separation between roots before the simple-pole expansion is
/// considered unreliable.
pub const CONFLUENCE_TOL: f64 = 1e-8;
/// Below this value of `max |r_i - Phi| x` the scale function is summed as a
/// Taylor series when `W(0) = 0`.
const NEAR_ZERO: f64 = 0.5;
const TAYLOR_TERMS: i32 = 24;

/// Precomputed scale-function data at killing rate `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleEvaluator {
    model: JumpDiffusionModel,
    u: f64,
    roots: RootSet,
    coeffs: Vec<f64>,
}

impl ScaleEvaluator {
    pub fn new(model: JumpDiffusionModel, u: f64) -> Result<Self> {
        Self::with_root_tol(model, u, DEFAULT_ROOT_TOL)
    }

    pub fn with_root_tol(model: JumpDiffusionModel, u: f64, root_tol: f64) -> Result<Self> {
        model.validate()?;
        let roots = model.solve_roots_with_tol(u, root_tol)?;
        for pair in roots.roots.windows(2) {
            if (pair[1] - pair[0]).abs() < CONFLUENCE_TOL {
                return Err(Error::ConfluentRoots {
                    u,
                    first: pair[0],
                    second: pair[1],
                });
            }
        }
        let coeffs = roots
            .roots
            .iter()
            .map(|&r| model.psi_derivative(r).map(|d| 1.0 / d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            u,
            roots,
            coeffs,
        })
    }

    pub fn model(&self) -> &JumpDiffusionModel {
        &self.model
    }

    pub fn rate(&self) -> f64 {
        self.u
    }

    pub fn roots(&self) -> &RootSet {
        &self.roots
    }

    pub fn phi(&self) -> f64 {
        self.roots.phi
    }

    /// Partial-fraction coefficients `1 / psi'(l_i)` in root order.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.roots.roots.iter().copied().zip(self.coeffs.iter().copied())
    }

    /// `W(0+)`: `1 / mu` for bounded variation, `0` otherwise.
    pub fn w_at_zero(&self) -> f64 {
        if self.model.has_unbounded_variation() {
            0.0
        } else {
            1.0 / self.model.mu
        }
    }

    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x == 0.0 {
            self.w_at_zero()
        } else if let Some(v) = self.w_esscher_near_zero(x) {
            (self.phi() * x).exp() * v
        } else {
            self.terms().map(|(r, k)| k * (r * x).exp()).sum()
        }
    }

    /// Taylor series of `W_Phi` at the origin when `W(0) = 0`, where the
    /// exponential sum cancels down to rounding noise.
    fn w_esscher_near_zero(&self, x: f64) -> Option<f64> {
        if !self.model.has_unbounded_variation() {
            return None;
        }
        let phi = self.phi();
        let spread = self.terms().fold(0.0f64, |m, (r, _)| m.max((r - phi).abs()));
        if spread * x > NEAR_ZERO {
            return None;
        }
        let mut sum = 0.0;
        let mut fact = 1.0;
        for n in 1..=TAYLOR_TERMS {
            fact *= (spread * x) / n as f64;
            let moment: f64 = self.terms().map(|(r, k)| k * ((r - phi) / spread).powi(n)).sum();
            sum += moment * fact;
        }
        Some(sum)
    }

    /// `W'(x)` for `x >= 0` (right derivative at 0); zero for `x < 0`.
    pub fn w_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.terms().map(|(r, k)| k * r * (r * x).exp()).sum()
    }

    /// `W''(x)` for `x >= 0`; zero for `x < 0`.
    pub fn w_second(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.terms().map(|(r, k)| k * r * r * (r * x).exp()).sum()
    }

    pub fn z(&self, x: f64) -> f64 {
        if x <= 0.0 || self.u == 0.0 {
            return 1.0;
        }
        let integral: f64 = self
            .terms()
            .map(|(r, k)| {
                if r == 0.0 {
                    k * x
                } else {
                    k * (r * x).exp_m1() / r
                }
            })
            .sum();
        1.0 + self.u * integral
    }

    /// `Z'(x) = u W(x)`.
    pub fn z_prime(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.u * self.w(x)
        }
    }

    /// Scale function under the Esscher transform,
    /// `W_Phi(x) = exp(-Phi x) W(x)`.
    pub fn w_esscher(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return self.w_at_zero();
        }
        if let Some(v) = self.w_esscher_near_zero(x) {
            return v;
        }
        let phi = self.phi();
        self.terms().map(|(r, k)| k * ((r - phi) * x).exp()).sum()
    }

    /// Limit of [`Self::w_esscher`] as `x -> inf`, i.e. `1 / psi'(Phi(u))`.
    pub fn w_esscher_limit(&self) -> f64 {
        *self.coeffs.last().expect("non-empty coefficients")
    }

    /// `exp(-Phi x) W^(n)(x)` for `n <= 2`; zero for `x < 0`. Bounded in `x`,
    /// so ratios of scale functions can be formed without overflow.
    pub fn w_deriv_esscher(&self, n: u8, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if n == 0 {
            return self.w_esscher(x);
        }
        let phi = self.phi();
        self.terms()
            .map(|(r, k)| k * r.powi(n as i32) * ((r - phi) * x).exp())
            .sum()
    }

    /// `W^(n)(x) / W^(m)(d)` through the Esscher forms; zero for `x < 0`.
    pub fn w_ratio(&self, n: u8, x: f64, m: u8, d: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        (self.phi() * (x - d)).exp() * self.w_deriv_esscher(n, x) / self.w_deriv_esscher(m, d)
    }

    /// Sum over the roots other than `Phi` of `k_i r_i^n (Phi - r_i) / Phi
    /// exp(r_i x) exp(-shift x)`.
    fn subdominant(&self, n: u8, x: f64, shift: f64) -> f64 {
        let phi = self.phi();
        let count = self.coeffs.len() - 1;
        self.terms()
            .take(count)
            .map(|(r, k)| k * r.powi(n as i32) * (phi - r) / phi * ((r - shift) * x).exp())
            .sum()
    }

    /// `W^(n)(x) - W^(n+1)(x) / Phi` for `x >= 0`. The dominant exponential
    /// cancels exactly, so the result stays bounded for large `x`.
    /// Requires `Phi > 0`.
    pub fn w_detrended(&self, n: u8, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if n == 0 && x == 0.0 && self.model.has_unbounded_variation() {
            return -self.w_prime(0.0) / self.phi();
        }
        self.subdominant(n, x, 0.0)
    }

    /// `Z(x) - u W(x) / Phi`, bounded in `x`; equals `Z` when `u = 0`.
    pub fn z_detrended(&self, x: f64) -> f64 {
        if x < 0.0 || self.u == 0.0 {
            return 1.0;
        }
        let phi = self.phi();
        if x == 0.0 {
            return 1.0 - self.u * self.w_at_zero() / phi;
        }
        let count = self.coeffs.len() - 1;
        let tail: f64 = self
            .terms()
            .take(count)
            .map(|(r, k)| k * ((r * x).exp_m1() / r - (r * x).exp() / phi))
            .sum();
        1.0 - self.u * self.w_esscher_limit() / phi + self.u * tail
    }

    /// `Z(x) - u W(d) / W'(d) * W(x)`, the kernel of the exit transforms,
    /// evaluated as `Z~(x) + u W(x) (1 / Phi - W(d) / W'(d))`.
    pub fn exit_kernel(&self, x: f64, d: f64) -> f64 {
        if self.u == 0.0 {
            return self.z(x);
        }
        let w = self.w(x);
        if w == 0.0 {
            return self.z_detrended(x);
        }
        let gap = self.ratio_w_gap(d).unwrap_or(f64::NAN);
        self.z_detrended(x) + self.u * w * gap
    }

    /// `W(x) / W'(x)`, increasing in `x` and bounded by `1 / Phi(u)`.
    pub fn ratio_w(&self, x: f64) -> Result<f64> {
        check_domain("x", x, 0.0, f64::INFINITY)?;
        if self.w_prime(x) == 0.0 {
            return Err(Error::DivisionByZero("W(x) / W'(x)"));
        }
        Ok(self.w_ratio(0, x, 1, x))
    }

    /// `1 / Phi(u) - W(x) / W'(x)`, evaluated without cancellation: the
    /// dominant exponential drops out exactly, so the gap keeps full relative
    /// precision after the ratio itself has rounded to `1 / Phi(u)`.
    pub fn ratio_w_gap(&self, x: f64) -> Result<f64> {
        check_domain("x", x, 0.0, f64::INFINITY)?;
        let phi = self.phi();
        if phi <= 0.0 {
            return Err(Error::DivisionByZero("1 / Phi(u)"));
        }
        let slope = self.w_deriv_esscher(1, x);
        if slope == 0.0 {
            return Err(Error::DivisionByZero("W(x) / W'(x)"));
        }
        let detrended = if x == 0.0 && self.model.has_unbounded_variation() {
            -slope / phi
        } else {
            self.subdominant(0, x, phi)
        };
        Ok(-detrended / slope)
    }
}
