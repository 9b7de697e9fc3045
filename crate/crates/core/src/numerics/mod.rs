//! Quadrature, special functions and seeded sampling shared by the continuous operations.

mod quad;
mod sampler;
mod special;

pub use quad::{
    integrate_1d, integrate_adaptive, Domain, GaussRule, Interval, QuadConfig, QuadResult,
};
pub use sampler::{dirichlet_sample, simplex_sample, SeededSampler};
pub use special::{log_beta_fn, log_binomial, log_dirichlet_norm, log_gamma};
