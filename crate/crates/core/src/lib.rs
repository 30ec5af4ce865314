//! Fredholm determinants of truncated Wiener-Hopf operators whose symbols
//! carry Fisher-Hartwig singularities, together with their large-T
//! asymptotics.

pub mod asymptotics;
pub mod error;
pub mod fredholm;
pub mod kernels;
pub mod models;
pub mod quad;
pub mod specfun;
pub mod symbols;

pub use error::{Error, Result};
pub use specfun::C64;
