//! Exact and numerical tools for the Hessian of the spectral zeta function at
//! the critical point: symbolic heat-kernel symbols, gamma-ratio reduction,
//! torus oracles and quadrature cross-checks.

pub mod error;
pub mod commands;
pub mod exec;
pub mod expr;
pub mod gamma;
pub mod geometry;
pub mod heat_symbol;
pub mod io;
pub mod jet;
pub mod lab;
pub mod operator;
pub mod poly;
pub mod quadrature;
pub mod special;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
