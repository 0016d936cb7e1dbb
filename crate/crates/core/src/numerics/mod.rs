//! Special functions and integration primitives.

pub mod quadrature;
pub mod special;

pub use quadrature::{
    integrate, integrate_semi_infinite, integrate_with_breaks, try_integrate_real_line,
    try_integrate_semi_infinite, try_integrate_with_breaks, Estimate, QuadratureSpec,
};
pub use special::{
    gamma_cov_bracket, gamma_fn, ln_norm_cdf, ln_norm_pdf, norm_cdf, norm_pdf, norm_sf,
};
