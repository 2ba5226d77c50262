//! Differentiable computed-tomography building blocks.
//!
//! Ray-driven forward projectors and voxel-driven back projectors for
//! parallel-beam, fan-beam and cone-beam scans, Fourier-domain
//! reconstruction filters and projection weights, numerical phantoms, and a
//! small reverse-mode computation graph in which every one of those
//! operators is a node with a registered gradient. The [`pipelines`] module
//! composes them into filtered backprojection, short-scan FDK, filter
//! learning and TV-regularized iterative reconstruction.
//!
//! Conventions used throughout:
//!
//! * Arrays are row-major. A 2D image has shape `[ny, nx]`, a 3D volume
//!   `[nz, ny, nx]`; `spacing` and `origin` follow the same axis order.
//! * Element coordinates refer to element centers:
//!   `world = origin + index * spacing`.
//! * The iso-center is the world origin and the scan rotates about the
//!   z axis, counter-clockwise, starting with the central ray along +x.

pub mod error;
pub mod filtering;
pub mod geometry;
pub mod graph;
pub mod image;
pub mod io;
pub mod phantom;
pub mod pipelines;
pub mod projector;

pub use error::{Error, Result};
pub use filtering::{Filter1D, WeightMap};
pub use geometry::{
    ConeGeometry3D, DetectorSpec, FanGeometry2D, Geometry, ParallelGeometry2D, ProjectionMatrix,
    VolumeSpec,
};
pub use graph::{Graph, NodeId, Tensor};
pub use image::{Image, Sinogram};
