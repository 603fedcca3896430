//! Algebraic multilevel iteration (AMLI) preconditioners for
//! `α(u,v) + β(Xu,Xv)` with `X = curl` on lowest-order edge elements (2D)
//! and `X = div` on lowest-order face elements (3D), on uniform meshes of
//! the unit square / cube.

pub mod amli;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod hierarchy;
pub mod krylov;
pub mod linalg;
pub mod mesh;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
