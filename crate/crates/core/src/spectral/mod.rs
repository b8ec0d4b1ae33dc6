//! Laplace–Beltrami discretization, truncated eigenbases and spectral
//! descriptors.

mod basis;
mod descriptors;
mod eigen;
mod laplacian;
mod wks;

pub use basis::SpectralBasis;
pub use descriptors::DescriptorSet;
pub use eigen::{eigenbasis, eigenbasis_with, fix_signs, EigenOptions};
pub use laplacian::{build_laplacian, Laplacian, MAX_COTANGENT};
pub use wks::wks;

#[allow(unused_imports)]
pub(crate) use laplacian::sparse_mul;
