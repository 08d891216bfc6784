//! Scalar-flat conformal factors on asymptotically flat exterior domains.
//!
//! The exterior `{r >= 1}` of the unit ball in `R^n` is compactified with
//! `s = 1/r`. Given a metric there, the crate solves for conformal factors
//! that make it scalar-flat while either fixing the metric on the boundary
//! sphere (a Dirichlet problem) or prescribing its boundary mean curvature
//! (a nonlinear Robin problem, solved by monotone iteration between explicit
//! barriers).

pub mod dirichlet;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod job;
pub mod meancurv;
pub mod oracle;
pub mod quotient;
pub mod report;
pub mod weighted;

pub use error::{Error, Result};
