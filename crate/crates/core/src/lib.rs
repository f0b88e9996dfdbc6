//! Hyperbolic document representations in the Poincaré ball.
//!
//! Word vectors are points of the ball; a document is composed from its
//! word points with one of several centroid schemes, then classified with
//! k-NN or an SVM over geodesic kernels.

pub mod classify;
pub mod composition;
pub mod corpus;
pub mod eigen;
pub mod error;
pub mod gyroball;
pub mod harness;
pub mod kernels;

pub use error::{Error, Result};
