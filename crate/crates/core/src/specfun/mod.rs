//! Special functions for the cylinder Green tensor and the silica
//! permittivity model.

mod bessel;
mod faddeeva;

pub use bessel::{
    bessel_i, bessel_i_scaled, bessel_j, bessel_j_deriv, bessel_k, bessel_k_scaled, bessel_y,
    bessel_y_deriv, hankel1, hankel1_with_deriv, i_log_derivs, i_pow, j_log_derivs, k01_scaled,
    KLadder, MAX_ARGUMENT, MAX_ORDER,
};
pub use faddeeva::{dawson, faddeeva};
