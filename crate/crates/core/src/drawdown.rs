//! Exit identities for the drawdown process `Y = S - X`.
//!
//! All functionals are expressed through the scale functions of a
//! [`ScaleEvaluator`] built at the discount rate `q`, under the law with
//! `Y_0 = y`:
//!
//! | functional                                   | closed form                              |
//! |----------------------------------------------|------------------------------------------|
//! | `E[exp(-q tau_b+)]`                          | `Z(b-y) - q W(b) / W'(b) * W(b-y)`       |
//! | `E[int_0^tau_b+ exp(-q t) dS_t]`             | `W(b-y) / W'(b)`                         |
//! | `E[exp(-q tau_h-); tau_h- <= tau_b+]`        | `W(b-y) / W(b-h)`                        |
//! | `E[exp(-q tau_b+); tau_b+ <= tau_h-]`        | `Z(b-y) - Z(b-h) / W(b-h) * W(b-y)`      |

use crate::error::{check_domain, Error, Result};
use crate::scale_fn::ScaleEvaluator;

/// A drawdown started at `y` with default level `b`.
#[derive(Debug, Clone, Copy)]
pub struct DrawdownProblem<'a> {
    eval: &'a ScaleEvaluator,
    b: f64,
    y: f64,
}

impl<'a> DrawdownProblem<'a> {
    pub fn new(eval: &'a ScaleEvaluator, b: f64, y: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::Domain {
                name: "b",
                value: b,
                lower: 0.0,
                upper: f64::INFINITY,
            });
        }
        check_domain("y", y, 0.0, b)?;
        Ok(Self { eval, b, y })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn evaluator(&self) -> &'a ScaleEvaluator {
        self.eval
    }

    /// Laplace transform of the default time, `E[exp(-q tau_b+)]`.
    pub fn exit_up_transform(&self) -> f64 {
        let e = self.eval;
        e.exit_kernel(self.b - self.y, self.b)
    }

    /// Expected discounted increase of the running maximum before default.
    pub fn discounted_max_increase(&self) -> f64 {
        let e = self.eval;
        e.w_ratio(0, self.b - self.y, 1, self.b)
    }

    fn check_lower_level(&self, h: f64) -> Result<()> {
        if !(h > 0.0) || h > self.b {
            return Err(Error::Domain {
                name: "h",
                value: h,
                lower: 0.0,
                upper: self.b,
            });
        }
        check_domain("y", self.y, h, self.b)
    }

    /// `E[exp(-q tau_h-); tau_h- <= tau_b+]` for `0 < h <= y`.
    pub fn two_sided_down(&self, h: f64) -> Result<f64> {
        self.check_lower_level(h)?;
        let e = self.eval;
        Ok(e.w_ratio(0, self.b - self.y, 0, self.b - h))
    }

    /// `E[exp(-q tau_b+); tau_b+ <= tau_h-]` for `0 < h <= y`.
    pub fn two_sided_up(&self, h: f64) -> Result<f64> {
        self.check_lower_level(h)?;
        let e = self.eval;
        let x = self.b - self.y;
        let gap = self.b - h;
        Ok(e.z_detrended(x) - e.z_detrended(gap) * e.w_ratio(0, x, 0, gap))
    }
}

/// Two-sided exit of the unreflected process:
/// `E_x[exp(-u T_b+); T_b+ < T_0-] = W(x) / W(b)` for `0 <= x <= b`.
pub fn classic_two_sided_exit(eval: &ScaleEvaluator, x: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain {
            name: "b",
            value: b,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    check_domain("x", x, 0.0, b)?;
    Ok(eval.w_ratio(0, x, 0, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::JumpDiffusionModel;

    fn eval(sigma: f64, q: f64) -> ScaleEvaluator {
        let m = JumpDiffusionModel::new(0.075, sigma, 0.5, 9.0).unwrap();
        ScaleEvaluator::new(m, q).unwrap()
    }

    const B: f64 = 1.6094379124341003;

    #[test]
    fn default_immediate_at_b_with_diffusion() {
        let e = eval(0.2, 0.1);
        let p = DrawdownProblem::new(&e, B, B).unwrap();
        assert_eq!(p.exit_up_transform(), 1.0);
        assert_eq!(p.discounted_max_increase(), 0.0);
        assert_eq!(p.two_sided_down(0.5).unwrap(), 0.0);
    }

    #[test]
    fn zero_discount_gives_certain_default() {
        for s in [0.0, 0.2] {
            let e = eval(s, 0.0);
            for y in [0.0, 0.4, 1.2, B] {
                let p = DrawdownProblem::new(&e, B, y).unwrap();
                assert_eq!(p.exit_up_transform(), 1.0);
            }
        }
    }

    #[test]
    fn max_increase_from_zero_is_ratio() {
        for s in [0.0, 0.2] {
            let e = eval(s, 0.1);
            let p = DrawdownProblem::new(&e, B, 0.0).unwrap();
            assert!((p.discounted_max_increase() - e.ratio_w(B).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn two_sided_at_lower_level() {
        for s in [0.0, 0.2] {
            let e = eval(s, 0.1);
            let p = DrawdownProblem::new(&e, B, 0.7).unwrap();
            assert_eq!(p.two_sided_down(0.7).unwrap(), 1.0);
            assert!(p.two_sided_up(0.7).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn tower_identity() {
        for s in [0.0, 0.2] {
            let e = eval(s, 0.1);
            for i in 1..20 {
                let h = B * i as f64 / 20.0;
                for j in 0..=10 {
                    let y = (h + (B - h) * j as f64 / 10.0).min(B);
                    let at_y = DrawdownProblem::new(&e, B, y).unwrap();
                    let at_h = DrawdownProblem::new(&e, B, h).unwrap();
                    let lhs = at_y.two_sided_up(h).unwrap();
                    let rhs = at_y.exit_up_transform()
                        - at_y.two_sided_down(h).unwrap() * at_h.exit_up_transform();
                    assert!((lhs - rhs).abs() < 1e-10, "s={s} h={h} y={y}");
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        let e = eval(0.2, 0.1);
        assert!(DrawdownProblem::new(&e, B, B + 0.1).is_err());
        assert!(DrawdownProblem::new(&e, B, -0.1).is_err());
        assert!(DrawdownProblem::new(&e, 0.0, 0.0).is_err());
        let p = DrawdownProblem::new(&e, B, 0.5).unwrap();
        assert!(p.two_sided_down(0.0).is_err());
        assert!(p.two_sided_down(0.6).is_err());
        assert!(p.two_sided_up(B + 1.0).is_err());
        assert!(classic_two_sided_exit(&e, 2.0, 1.0).is_err());
    }

    #[test]
    fn classic_exit_endpoints() {
        let e = eval(0.2, 0.1);
        assert_eq!(classic_two_sided_exit(&e, B, B).unwrap(), 1.0);
        assert_eq!(classic_two_sided_exit(&e, 0.0, B).unwrap(), 0.0);
        let e = eval(0.0, 0.1);
        let mut prev = 0.0;
        for i in 0..=20 {
            let v = classic_two_sided_exit(&e, B * i as f64 / 20.0, B).unwrap();
            assert!(v > prev && v <= 1.0);
            prev = v;
        }
    }
}
