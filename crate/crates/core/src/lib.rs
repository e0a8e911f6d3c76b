//! Homogenization of Hamilton-Jacobi equations on abelian covers of flat
//! tori and metric graphs.

pub mod action;
pub mod error;
pub mod homogenize;
mod linalg;
pub mod mather;
pub mod model;
mod optim;
pub mod topology;

pub use error::{Error, Result};
