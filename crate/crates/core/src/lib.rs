//! Numerical toolkit for trace-decreasing quantum operations and the
//! generalized erasure channel.
//!
//! The crate covers validation and canonical constructions for Kraus maps
//! (minimal extension, normalized-image channel), the generalized erasure
//! channel with its complementary channel and degradability tests, classical
//! and quantum capacity bounds, and exact single-letter results plus
//! two-letter coherent-information optimization for polarization dependent
//! losses.
//!
//! All entropies and capacities are in bits. Grid scans and optimizer
//! restarts run data-parallel under the default `parallel` feature and fall
//! back to sequential iteration without it.

pub mod entropy;
pub mod erasure;
pub mod error;
pub mod exec;
pub mod hermitian;
pub mod kraus;
pub mod matrix;
pub mod optim;
pub mod pdl;
pub mod random;
pub mod state;

pub mod capacity;

pub use error::{Error, Result};
pub use hermitian::HermitianOperator;
pub use kraus::{KrausMap, OperationClass, PdlParams};
pub use matrix::ComplexMatrix;
pub use state::{DensityOperator, Ensemble, SubnormalizedDensity};
