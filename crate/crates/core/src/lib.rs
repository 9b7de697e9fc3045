//! Channel-based probability on finite sets and on densities, Bayesian inversion, and
//! conjugate priors whose parameter translators are checked numerically against true
//! Bayesian inversions and predicate updates.

pub mod error;
pub mod numerics;

pub use error::{Error, Result};
pub mod conjugacy;
pub mod continuous;
pub mod discrete;
pub mod families;
pub mod suffstat;
pub mod suite;
