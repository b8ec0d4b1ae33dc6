//! Functional maps between triangle meshes.

pub mod error;
pub mod mesh;

pub use error::{Error, Result};
pub use mesh::TriangleMesh;
pub mod spectral;
pub mod operators;
pub mod fmap;
pub mod bcicp;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod fixtures;
