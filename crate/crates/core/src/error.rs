use thiserror::Error;

/// Errors raised by model construction, pricing and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("Laplace exponent has a pole at lambda = {lambda}")]
    Pole { lambda: f64 },

    #[error("root of psi(lambda) = {u} not resolved: residual {residual:e} at lambda = {root}")]
    RootResidual { u: f64, root: f64, residual: f64 },

    #[error("roots {first} and {second} of psi(lambda) = {u} are (nearly) coincident")]
    ConfluentRoots { u: f64, first: f64, second: f64 },

    #[error("{name} = {value} outside [{lower}, {upper}]")]
    Domain {
        name: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid contract terms: {0}")]
    InvalidTerms(String),

    #[error("switching cost gamma = {gamma} outside the admissible window ({lower}, {upper})")]
    WindowViolation { gamma: f64, lower: f64, upper: f64 },

    #[error("boundary equation not bracketed on [0, b]: f(0) = {f0}, f(b) = {fb}")]
    NoBracket { f0: f64, fb: f64 },

    #[error("division by zero evaluating {0}")]
    DivisionByZero(&'static str),

    #[error("quadrature did not converge: estimate {estimate}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidPathConfig(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_domain(name: &'static str, value: f64, lower: f64, upper: f64) -> Result<()> {
    if value.is_nan() || value < lower || value > upper {
        return Err(Error::Domain {
            name,
            value,
            lower,
            upper,
        });
    }
    Ok(())
}
