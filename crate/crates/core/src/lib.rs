//! Exact p-adic machinery for cyclotomic Iwasawa theory of crystalline
//! representations of an unramified field, at fixed working precision.
//!
//! Everything is computed modulo `p^N` and modulo `X^M`: the coefficient
//! tower `Z_p ⊂ O_K ⊂ O_K[ζ_{p^n}]`, truncated Laurent series with the
//! operators `φ, ψ, ∂, Γ`, Wach-module data, Herr complexes and their
//! cohomology, Gauss sums and local ε-constants, the big exponential
//! kernel (Δ-maps, Ξ, the E-series, the Ω/Σ cocycle constructions) and
//! the Iwasawa-algebra side (idempotents, ℓ-operators, characteristic
//! ideals, descent).
//!
//! There is no floating point anywhere. Every operation tracks the
//! effective precision of its output; checks that would silently fall
//! below the requested precision return errors instead.

pub mod cyclo;
pub mod epsilon;
pub mod herr;
pub mod iwasawa;
pub mod lambda;
pub mod linalg;
pub mod pr;
pub mod prec;
pub mod report;
pub mod repn;
pub mod series;
pub mod suites;
pub mod unram;
pub mod zp;

pub use prec::{Precision, Tower};

/// Errors produced by the toolkit.
///
/// Precision-related failures are first-class: an identity that cannot be
/// resolved at the configured `(p^N, X^M)` truncation is reported, never
/// silently rounded.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("series truncation too small: need X-window >= {needed}, have {have} ({what})")]
    Truncation { what: String, needed: i64, have: i64 },
    #[error("pole capacity exceeded: {0}")]
    Pole(String),
    #[error("solution unstable at current truncation: {0}")]
    Unstable(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
