//! Uncertainty quantification of neural activation thresholds under random,
//! dispersive tissue conductivity.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`dispersion`]: four-term Cole-Cole permittivity, conductivity and admittivity;
//! - [`kl`]: sampled covariance of the random conductivity spectrum and its
//!   truncated Karhunen-Loève model;
//! - [`sparse_grid`]: nested Clenshaw-Curtis rules and Smolyak quadrature;
//! - [`conductor`]: axisymmetric finite-element volume conductor around a
//!   DBS lead with an encapsulation layer;
//! - [`ffem`]: frequency sweep, stimulus spectrum and inverse transform;
//! - [`axon`]: myelinated cable model driven by the extracellular potential;
//! - [`pipeline`]: Brent threshold search, stochastic collocation and reports.
//!
//! Runnable walkthroughs of every stage live in the crate's `examples/`.

pub mod axon;
pub mod conductor;
pub mod dispersion;
pub mod error;
pub mod ffem;
pub mod kl;
pub mod pipeline;
pub mod sparse_grid;
pub mod spline;
pub mod tridiag;

pub use error::{Error, Result};
