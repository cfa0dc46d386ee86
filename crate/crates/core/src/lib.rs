//! Partial traces and their dilations for general complex matrices.
//!
//! The crate is organised bottom-up:
//!
//! * [`matrix`] and [`random`]: dense complex arithmetic, decompositions with
//!   explicit tolerances, and seeded generators.
//! * [`tensor`]: partial traces, factor embeddings, Kronecker sums and the
//!   numerical-range inclusion test.
//! * [`dilations`]: constructive dilations (normal, unitary, nilpotent,
//!   idempotent, rank one, rank two, arbitrary rank) and Flanders-similarity.
//! * [`norms`] and [`inequalities`]: unitarily invariant norms, weak
//!   majorization and one checker per partial-trace norm inequality.
//! * [`kappa`]: the constant `κ(c)` of the norm-inequality template.
//! * [`sweep`]: seeded runs of every checker over random instances.
//! * [`applications`]: Werner states and the two-copy inequality, Schmidt-number
//!   witnesses and the associated k-positive map.

pub mod applications;
pub mod dilations;
pub mod error;
pub mod inequalities;
pub mod json;
pub mod kappa;
pub mod matrix;
pub mod norms;
pub mod random;
pub mod report;
pub mod sweep;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, DenseVector, Tolerance, C64};
pub use report::InequalityReport;
pub use tensor::{FactorSet, TensorSpace};
