//! Numerical verification toolkit for Euclidean and Riemannian
//! Piola-type divergence identities.
//!
//! The pipeline is built so that every identity residual measures only
//! floating-point rounding: map and metric derivatives are symbolic,
//! derived fields (intrinsic cofactors, determinants, pullback volume
//! densities) are differentiated by running the whole algebra over dual
//! numbers, and the exterior-algebra kernels (`exterior`) define
//! determinant and cofactor through Hodge duals rather than index
//! formulas. Chart-level geometry lives in `chart`, the pointwise
//! identity engine in `identity`, integral (null-Lagrangian and
//! weak-form) checks in `variational`, and the scenario/report surface
//! in `runner`.

pub mod chart;
pub mod expr;
pub mod exterior;
pub mod identity;
pub mod linalg;
pub mod runner;
pub mod scalar;
pub mod variational;
