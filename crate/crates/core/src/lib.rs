pub mod atomdata;
pub mod dielectric;
pub mod error;
pub mod green;
pub mod potential;
pub mod quadrature;
pub mod specfun;
pub mod units;
pub mod wigner;

pub use error::{Error, Result};
