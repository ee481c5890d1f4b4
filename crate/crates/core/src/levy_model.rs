//! Spectrally negative jump diffusion with exponentially distributed downward
//! jumps.
//!
//! The log-asset process is `X_t = mu t + sigma B_t - sum of jumps`, where the
//! jumps arrive at Poisson rate `a` and have exponential sizes with rate `c`.
//! Its Laplace exponent `psi(l) = log E[exp(l X_1)]` is the rational function
//!
//! ```text
//! psi(l) = mu l + sigma^2 l^2 / 2 - a l / (l + c),     l != -c
//! ```
//!
//! so the level sets `psi(l) = u` are the real roots of a quadratic
//! (`sigma = 0`) or cubic (`sigma > 0`) polynomial. These roots drive every
//! closed form in [`crate::scale_fn`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute residual accepted for a polished root of `psi(l) = u`, measured
/// relative to the magnitude of the terms of `psi` at that root.
pub const DEFAULT_ROOT_TOL: f64 = 1e-12;

/// Parameters `(mu, sigma, a, c)` of the one-sided jump diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpDiffusionModel {
    pub mu: f64,
    pub sigma: f64,
    /// Poisson intensity of the downward jumps.
    pub jump_rate: f64,
    /// Rate of the exponential jump-size law; mean jump is `1 / jump_decay`.
    pub jump_decay: f64,
}

/// Real roots of `psi(l) = u` in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<f64>,
    /// Largest root, the right inverse `Phi(u)`.
    pub phi: f64,
    pub u: f64,
}

impl JumpDiffusionModel {
    pub fn new(mu: f64, sigma: f64, jump_rate: f64, jump_decay: f64) -> Result<Self> {
        let model = Self {
            mu,
            sigma,
            jump_rate,
            jump_decay,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks the parameter constraints; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.sigma, self.jump_rate, self.jump_decay]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidModel("parameters must be finite".into()));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidModel(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if self.jump_rate <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "jump_rate must be > 0, got {}",
                self.jump_rate
            )));
        }
        if self.jump_decay <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "jump_decay must be > 0, got {}",
                self.jump_decay
            )));
        }
        if self.sigma == 0.0 && self.mu <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "a bounded-variation model (sigma = 0) needs mu > 0, got {}",
                self.mu
            )));
        }
        Ok(())
    }

    pub fn has_unbounded_variation(&self) -> bool {
        self.sigma > 0.0
    }

    fn check_pole(&self, lambda: f64) -> Result<()> {
        if lambda + self.jump_decay == 0.0 {
            return Err(Error::Pole { lambda });
        }
        Ok(())
    }

    /// `psi(lambda)`.
    pub fn laplace_exponent(&self, lambda: f64) -> Result<f64> {
        self.check_pole(lambda)?;
        let s2 = self.sigma * self.sigma;
        Ok(self.mu * lambda + 0.5 * s2 * lambda * lambda
            - self.jump_rate * lambda / (lambda + self.jump_decay))
    }

    /// `psi'(lambda)`.
    pub fn psi_derivative(&self, lambda: f64) -> Result<f64> {
        self.check_pole(lambda)?;
        let shifted = lambda + self.jump_decay;
        Ok(self.mu + self.sigma * self.sigma * lambda
            - self.jump_rate * self.jump_decay / (shifted * shifted))
    }

    /// Sum of absolute values of the terms of `psi(lambda)`, used to scale the
    /// root residual check.
    fn term_scale(&self, lambda: f64, u: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        (self.mu * lambda).abs()
            + 0.5 * s2 * lambda * lambda
            + (self.jump_rate * lambda / (lambda + self.jump_decay)).abs()
            + u.abs()
    }

    /// Polynomial `(mu l + sigma^2 l^2 / 2)(l + c) - a l - u (l + c)`,
    /// coefficients from the constant term upwards.
    fn level_polynomial(&self, u: f64) -> [f64; 4] {
        let (mu, c, a) = (self.mu, self.jump_decay, self.jump_rate);
        let half_s2 = 0.5 * self.sigma * self.sigma;
        [-u * c, mu * c - a - u, mu + half_s2 * c, half_s2]
    }

    /// All real roots of `psi(lambda) = u`, sorted ascending.
    pub fn solve_roots(&self, u: f64) -> Result<RootSet> {
        self.solve_roots_with_tol(u, DEFAULT_ROOT_TOL)
    }

    pub fn solve_roots_with_tol(&self, u: f64, tol: f64) -> Result<RootSet> {
        if !(u >= 0.0) || !u.is_finite() {
            return Err(Error::Domain {
                name: "u",
                value: u,
                lower: 0.0,
                upper: f64::INFINITY,
            });
        }
        let coeffs = self.level_polynomial(u);
        let mut roots = if u == 0.0 {
            // lambda = 0 is an exact root; deflate it so Phi(0) = 0 is exact.
            let mut rest = real_poly_roots(&coeffs[1..]);
            rest.push(0.0);
            rest
        } else {
            real_poly_roots(&coeffs)
        };

        for root in roots.iter_mut() {
            if *root != 0.0 || u != 0.0 {
                *root = polish_root(&coeffs, *root);
            }
        }
        roots.sort_by(f64::total_cmp);

        let expected = if self.has_unbounded_variation() { 3 } else { 2 };
        if roots.len() != expected {
            return Err(Error::InvalidModel(format!(
                "expected {expected} real roots of psi(l) = {u}, found {}",
                roots.len()
            )));
        }
        for &root in &roots {
            let residual = (self.laplace_exponent(root)? - u).abs();
            if residual > tol * self.term_scale(root, u).max(1.0) {
                return Err(Error::RootResidual { u, root, residual });
            }
        }
        let phi = *roots.last().expect("non-empty root set");
        if phi < 0.0 {
            return Err(Error::InvalidModel(format!(
                "largest root of psi(l) = {u} is negative ({phi})"
            )));
        }
        Ok(RootSet { roots, phi, u })
    }
}

fn eval_poly(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut slope = 0.0;
    for &k in coeffs.iter().rev() {
        slope = slope * x + value;
        value = value * x + k;
    }
    (value, slope)
}

/// Newton refinement on the polynomial; a step is kept only if it reduces
/// the residual.
fn polish_root(coeffs: &[f64], mut x: f64) -> f64 {
    let (mut value, mut slope) = eval_poly(coeffs, x);
    for _ in 0..20 {
        if value == 0.0 || slope == 0.0 {
            break;
        }
        let candidate = x - value / slope;
        let (cv, cs) = eval_poly(coeffs, candidate);
        if cv.abs() >= value.abs() {
            break;
        }
        x = candidate;
        value = cv;
        slope = cs;
    }
    x
}

/// Real roots of a polynomial of degree at most three, coefficients from the
/// constant term upwards. Leading zero coefficients lower the degree.
fn real_poly_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut degree = coeffs.len() - 1;
    while degree > 0 && coeffs[degree] == 0.0 {
        degree -= 1;
    }
    match degree {
        0 => Vec::new(),
        1 => vec![-coeffs[0] / coeffs[1]],
        2 => quadratic_roots(coeffs[2], coeffs[1], coeffs[0]),
        3 => cubic_roots(coeffs[3], coeffs[2], coeffs[1], coeffs[0]),
        _ => unreachable!("degree is at most three"),
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // Avoids cancellation between -b and the square root.
    let q = -0.5 * (b + b.signum() * sq);
    if q == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![q / a, c / q]
}

fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let (b, c, d) = (b / a, c / a, d / a);
    let shift = b / 3.0;
    // t^3 + p t + q with lambda = t - b/3
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if p < 0.0 && disc <= 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    } else {
        let sq = disc.max(0.0).sqrt();
        let t = (-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt();
        vec![t - shift]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv() -> JumpDiffusionModel {
        JumpDiffusionModel::new(0.075, 0.0, 0.5, 9.0).unwrap()
    }

    fn ubv() -> JumpDiffusionModel {
        JumpDiffusionModel::new(0.075, 0.2, 0.5, 9.0).unwrap()
    }

    #[test]
    fn exponent_values() {
        assert_eq!(bv().laplace_exponent(0.0).unwrap(), 0.0);
        assert!((bv().laplace_exponent(1.0).unwrap() - 0.025).abs() < 1e-15);
        assert!((ubv().laplace_exponent(1.0).unwrap() - 0.045).abs() < 1e-15);
    }

    #[test]
    fn derivative_at_zero() {
        let expected = 0.075 - 0.5 / 9.0;
        assert!((bv().psi_derivative(0.0).unwrap() - expected).abs() < 1e-15);
        assert!((bv().psi_derivative(0.0).unwrap() - 0.019444).abs() < 1e-6);
    }

    #[test]
    fn pole_is_rejected() {
        assert_eq!(
            bv().laplace_exponent(-9.0),
            Err(Error::Pole { lambda: -9.0 })
        );
        assert!(ubv().psi_derivative(-9.0).is_err());
    }

    #[test]
    fn invalid_parameters() {
        assert!(JumpDiffusionModel::new(0.075, -0.1, 0.5, 9.0).is_err());
        assert!(JumpDiffusionModel::new(0.075, 0.2, 0.0, 9.0).is_err());
        assert!(JumpDiffusionModel::new(0.075, 0.2, 0.5, -1.0).is_err());
        // downward subordinator-like: no diffusion and no positive drift
        assert!(JumpDiffusionModel::new(-0.01, 0.0, 0.5, 9.0).is_err());
        assert!(JumpDiffusionModel::new(f64::NAN, 0.2, 0.5, 9.0).is_err());
        // negative drift is fine with a diffusion component
        assert!(JumpDiffusionModel::new(-0.01, 0.2, 0.5, 9.0).is_ok());
    }

    #[test]
    fn phi_of_zero_is_zero_with_positive_drift() {
        let roots = bv().solve_roots(0.0).unwrap();
        assert_eq!(roots.phi, 0.0);
        let roots = ubv().solve_roots(0.0).unwrap();
        assert_eq!(roots.phi, 0.0);
    }

    #[test]
    fn phi_of_zero_positive_with_negative_drift() {
        let m = JumpDiffusionModel::new(-0.05, 0.2, 0.5, 9.0).unwrap();
        let roots = m.solve_roots(0.0).unwrap();
        assert!(roots.phi > 0.0);
        assert!(m.laplace_exponent(roots.phi).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bounded_variation_roots() {
        let roots = bv().solve_roots(0.1).unwrap();
        assert_eq!(roots.roots.len(), 2);
        for &r in &roots.roots {
            assert!((bv().laplace_exponent(r).unwrap() - 0.1).abs() < 1e-12);
        }
        let (neg, phi) = (roots.roots[0], roots.roots[1]);
        assert!(-9.0 < neg && neg < 0.0 && phi > 0.0);
    }

    #[test]
    fn unbounded_variation_roots_ordering_and_derivative_signs() {
        let m = ubv();
        let roots = m.solve_roots(0.1).unwrap();
        let r = &roots.roots;
        assert_eq!(r.len(), 3);
        assert!(r[0] < -9.0 && -9.0 < r[1] && r[1] < 0.0 && 0.0 < r[2]);
        assert_eq!(roots.phi, r[2]);
        for &x in r {
            assert!((m.laplace_exponent(x).unwrap() - 0.1).abs() < 1e-12);
        }
        let signs: Vec<bool> = r.iter().map(|&x| m.psi_derivative(x).unwrap() > 0.0).collect();
        assert_eq!(signs, vec![false, false, true]);
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(bv().solve_roots(-0.1).is_err());
        assert!(bv().solve_roots(f64::NAN).is_err());
    }

    #[test]
    fn cubic_solver_known_roots() {
        // (x - 1)(x + 2)(x - 3) = x^3 - 2x^2 - 5x + 6
        let mut r = real_poly_roots(&[6.0, -5.0, -2.0, 1.0]);
        r.sort_by(f64::total_cmp);
        for (got, want) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        // x^3 + x + 1 has a single real root
        assert_eq!(real_poly_roots(&[1.0, 1.0, 0.0, 1.0]).len(), 1);
    }
}
