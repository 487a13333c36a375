//! Control synthesis for chains of harmonic oscillators with tunable springs.
//!
//! A chain of N degenerate oscillators whose neighboring springs can be
//! switched and modulated in time gives complete symplectic control over the
//! N-1 collective modes orthogonal to the total displacement. This crate
//! provides the full stack for exercising that control:
//!
//! - [`symplectic`]: conventions and closed-form 2x2 exponentials,
//!   logarithms, and Euler decompositions;
//! - [`basis`]: cradle-mode coordinates, embedded coupling matrices, their
//!   generators, and a Lie-closure controllability certificate;
//! - [`gaussian`]: covariance propagation, uncertainty ellipses, and
//!   logarithmic negativity;
//! - [`phonon`]: squeezed pseudo-phonon target states;
//! - [`synth`]: factorization of any symplectic target into at most
//!   3N(N-1)/2 nearest-neighbor coupling steps;
//! - [`pulse`]: lowering of each step to a spring-drive schedule, validated
//!   by direct integration of the time-dependent dynamics.
//!
//! All quantities use the interleaved quadrature ordering (x1, p1, x2, p2,
//! ...) with vacuum variance 1/2 and the bare oscillator frequency
//! normalized to 1.

pub mod basis;
pub mod error;
pub mod gaussian;
mod lm;
pub mod phonon;
pub mod pulse;
pub mod sampling;
pub mod symplectic;
pub mod synth;

pub use error::{Error, Result};
pub use gaussian::CovarianceMatrix;
pub use symplectic::SymplecticMatrix;
pub use synth::{CouplingStep, SynthesisPlan};
