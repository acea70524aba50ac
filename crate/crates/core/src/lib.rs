//! Numerical laboratory for renormalized Phi^{n+1} stochastic dynamics on
//! graph approximations of fractals.
//!
//! The pipeline: build a weighted graph approximating a catalog fractal
//! ([`space`]), diagonalize its renormalized Laplacian ([`spectral`]),
//! measure heat-semigroup Besov norms ([`besov`]), decompose products via
//! paraproducts with the energy-measure resonant term ([`calculus`]),
//! simulate the Gaussian reference field with exact per-mode updates and
//! Wick-renormalize its powers ([`gaussian`]), solve the remainder equation
//! with an exponential integrator ([`dpd`]), classify admissible parameter
//! regimes ([`regime`]), and estimate invariant measures by time averaging
//! ([`ergodic`]).

pub mod besov;
pub mod calculus;
pub mod dpd;
pub mod ergodic;
pub mod error;
pub mod field;
pub mod gaussian;
pub mod grid;
pub mod regime;
pub mod rng;
pub mod snapshot;
pub mod space;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use field::Field;
pub use space::{build_space, catalog_lookup, product_space, FractalSpec, GraphApproximation};
pub use spectral::{decompose, HeatDiagnostics, SpectralDecomposition};
