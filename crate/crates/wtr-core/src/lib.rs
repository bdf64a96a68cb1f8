//! Computational engine for the Eynard-Orantin topological recursion on the
//! Weierstrass spectral curve x = ℘(z;τ), y = ℘′(z;τ).
//!
//! The crate is organized around the pipeline:
//! elliptic function evaluation ([`elliptic`]) → pole-basis bookkeeping
//! ([`basis`]) → correlation functions via the residue recursion
//! ([`recursion`]) → cycle-integral identity checks ([`identities`]) →
//! perturbative wave-function operators ([`wavefunction`]) → non-perturbative
//! wave-function and quantum-curve extraction ([`nonperturbative`]).

pub mod basis;
pub mod elliptic;
pub mod identities;
pub mod nonperturbative;
pub mod recursion;
pub mod wavefunction;

use thiserror::Error;
use wtr_algebra::AlgebraError;

/// Errors shared across the engine modules.
#[derive(Debug, Error)]
pub enum CoreError {
    /// The modular parameter must satisfy Im τ > 0.
    #[error("tau must have positive imaginary part")]
    InvalidTau,
    /// An evaluation point reduced onto a lattice point, where ℘ and its
    /// relatives have poles.
    #[error("evaluation point lies on the period lattice")]
    LatticePoint,
    /// Basis reduction produced a simple-pole coefficient, which has no image
    /// in the ∂-basis spanned by P₂ and its derivatives.
    #[error("simple pole of residue {residue} survived reduction at pole {pole}")]
    SimplePole { pole: String, residue: String },
    /// A requested object lies outside the recursion levels that were built.
    #[error("correlation function ({0},{1}) is not in the table")]
    MissingCorrelation(u32, u32),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    /// Anything else worth an explanation string.
    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
