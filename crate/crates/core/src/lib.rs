//! Finite-volume spectral machinery for one-dimensional quasi-periodic
//! Schrödinger operators
//!
//! `(H(x, ω)ψ)(n) = −ψ(n−1) − ψ(n+1) + V(x + nω)ψ(n)`
//!
//! with a trigonometric-polynomial potential `V`. The crate covers transfer
//! matrices and Dirichlet determinants, finite-volume spectra, Lyapunov
//! exponents, zero counting of determinants in the phase and energy variables,
//! resultants, eigenvalue graphs over the phase, and the resonance-driven
//! construction of spectral gaps.

pub mod eigen;
pub mod error;
pub mod gaps;
pub mod lyapunov;
pub mod model;
pub mod rellich;
pub mod resultant;
pub mod transfer;
pub mod util;
pub mod zerocount;

pub use error::{Error, Result};
pub use model::{Frequency, Potential};
pub use transfer::{LogComplex, ScaledMatrix2};
