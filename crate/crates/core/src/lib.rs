//! Simulation of the noise-kernel approximations I_{n,ε}(f)_t of multiple
//! fractional Wiener-Itô integrals, together with exact-law samplers and a
//! Monte Carlo harness that checks finite-dimensional convergence.
//!
//! Layout:
//! - [`fbm_kernel`]: K_H, R, ψ, indicator inner products, the transfer operator;
//! - [`weight`]: weight functions integrated against noise paths;
//! - [`noise`]: Kac-Stroock and Donsker paths θ_ε and integration against them;
//! - [`simple`]: simple integrands, symmetrization, contractions, ℋ^{⊗n} products;
//! - [`chaos`]: exact samples of I_n^H via fBm paths and the Wick expansion;
//! - [`approx`]: η_ε, Y^ε, band functionals, I_{n,ε} and F_ε;
//! - [`harness`]: replications, KS distances, convergence reports;
//! - [`studies`]: the named experiment suites run by the command-line tool.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod chaos;
pub mod error;
pub mod fbm_kernel;
pub mod harness;
pub mod kernel_table;
pub mod noise;
pub mod quadrature;
pub mod seed;
pub mod simple;
pub mod stats;
pub mod studies;
pub mod weight;

pub use error::{Error, Result};
pub use fbm_kernel::{HurstParam, Interval};
pub use kernel_table::KernelPrimitive;
pub use noise::{Innovation, NoiseKind, PiecewiseConstantPath};
pub use quadrature::{QuadratureScheme, QuadratureSpec};
pub use seed::SeedSpec;
pub use simple::{IndicatorBox, SimpleFunction};
