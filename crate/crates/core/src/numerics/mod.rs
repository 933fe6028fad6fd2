//! Shared numerical substrate: complex vectors and Hermitian matrices,
//! reproducible counter-based RNG streams, circularly symmetric complex
//! Gaussian sampling, special functions, and Gauss-Legendre quadrature.

mod linalg;
mod quadrature;
mod rng;
mod special;

pub use linalg::{CholeskyFactor, ComplexMat, ComplexVec, HermitianMat};
pub use quadrature::GaussLegendre;
pub use rng::{sample_cn, sample_cn_scalar, standard_normal, RngStream};
pub use special::{
    chi2_log_lower_bound_bits, chi2_log_mean_bits, digamma, gamma_density, ln_factorial,
    EULER_GAMMA,
};

pub type Complex64 = num_complex::Complex<f64>;

/// Base-2 logarithm; every rate-like quantity in the crate is in bits.
#[inline]
pub fn log2(x: f64) -> f64 {
    x.log2()
}
