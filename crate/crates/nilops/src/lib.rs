//! Exact computations with modules over the mod-2 Steenrod algebra.
//!
//! Nilpotent filtrations, Singer functors, the quadratic construction `𝓔ₙ`,
//! polynomial functors and the realizability obstruction built from them.

pub mod emodel;
pub mod f2;
pub mod functors;
pub mod gmod;
pub mod io;
pub mod library;
pub mod nilfilt;
pub mod polyfunc;
pub mod singer;
pub mod steenrod;

/// Failures that are not a verdict about the mathematics.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("module is not unstable: {0}")]
    NotUnstable(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("window too small: {0}")]
    Window(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
