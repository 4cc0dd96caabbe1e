//! Birkhoff normal form engine and spectral simulator for the beam equation
//! `ψ_tt + ψ_xxxx + mψ + f(ψ) = 0` on the circle, at truncated (finite-mode,
//! finite-degree) scale.

pub mod beam_dynamics;
pub mod bnf_engine;
pub mod error;
pub mod experiments;
pub mod ham_algebra;
pub mod small_divisors;
pub mod weighted_spaces;

pub use error::{Error, Result};
pub use num_complex::Complex64;
