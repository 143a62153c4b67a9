//! Finite-field restriction theory for the paraboloid in F³, at computable scale.
//!
//! The crate realizes the objects that appear in restriction estimates over
//! GF(p^k): the extension operator of the paraboloid, its Bochner–Riesz
//! kernel, the reduction of L⁴ norms to additive quadruples and then to
//! point–line incidences, regular decompositions, and the constructive
//! incidence-structure pipeline (pruning, bushes, projective normalization,
//! grid extraction, sum-product witnesses).
//!
//! Counting is exact; complex quantities use `f64`. Hot kernels take an
//! [`Exec`] policy.

pub mod error;
pub mod estimator;
pub mod exec;
pub mod ffield;
pub mod incidence;
pub mod fourier;
pub mod paraboloid;
pub mod regular;
pub mod rng;
pub mod structure;

pub use error::{Error, Result};
pub use exec::Exec;
pub use ffield::{Elem, FieldCtx, Subfield};
pub use fourier::{Exponent, GridFn, Measure};
