//! Pricing of perpetual drawdown-triggered credit default swaps and of the
//! option to switch into a cheaper contract, for spectrally negative jump
//! diffusions with exponential jumps.
//!
//! The analytic path runs [`levy_model`] → [`scale_fn`] → [`drawdown`] →
//! [`cds`] → [`stopping`]; [`verification`] checks the generator equation and
//! the variational inequality, and [`mc_oracle`] re-derives every functional
//! by simulation.

pub mod cds;
pub mod config;
pub mod drawdown;
pub mod error;
pub mod levy_model;
pub mod mc_oracle;
pub mod quadrature;
pub mod scale_fn;
pub mod stopping;
pub mod verification;

pub use cds::{par_spread_perpetual, perpetual_cds_value, CdsTerms, SwitchPayoff, SwitchTerms};
pub use drawdown::{classic_two_sided_exit, DrawdownProblem};
pub use error::{Error, Result};
pub use levy_model::{JumpDiffusionModel, RootSet};
pub use scale_fn::ScaleEvaluator;
pub use stopping::{
    boundary_f, candidate_j, f_r_of_b, gamma_window, solve_h_star, total_value, BoundarySolution,
    GammaWindow, OptimalSwitch, TotalValue,
};
pub use config::RunConfig;
pub use mc_oracle::{DrawdownSimulator, McEstimate, PathConfig};
pub use verification::{GeneratorConfig, VariationalReport};
