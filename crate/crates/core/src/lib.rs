//! Exact computer algebra for Kapranov Leibniz_∞[1] algebras.
//!
//! A cdga here is an exterior algebra on degree-1 generators with a square-zero
//! derivation, modules are free with a finite homogeneous basis, and every
//! scalar is an exact rational. Multilinear structure maps are stored as dense
//! tables over tuples of k-basis indices, where the k-basis of a module is
//! (algebra monomial) x (module basis element).

pub mod builders;
pub mod cdga;
pub mod cohomology;
pub mod connection;
pub mod derivation;
pub mod error;
pub mod graded;
pub mod kapranov;
pub mod linalg;
pub mod module;
pub mod report;

pub use error::{Error, Result};
pub use graded::{Element, GradedBasis, MultilinearMap, Scalar};
