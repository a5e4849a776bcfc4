//! Affordance-guided multi-step depth reconstruction for transparent objects.
//!
//! The crate is `no_std` and only needs an allocator. It covers:
//!
//! - pinhole camera geometry and image-grid connected components ([`camera`], [`components`]),
//! - affordance fusion, losses, the weighted F-measure and region graphs ([`affordance`]),
//! - energy-minimisation depth completion over a sparse least-squares system ([`depth`]),
//! - SVD / RANSAC plane fitting and rim-depth completion ([`plane`]),
//! - the multi-step reconstruction pipeline, its single-step baseline and depth metrics ([`recon`]),
//! - pick / pour / stack pose proposals ([`proposals`]).
//!
//! File formats, the synthetic scene generator and the command-line tool live in the
//! companion `affrecon` crate.

#![no_std]

extern crate alloc;

pub mod affordance;
pub mod camera;
pub mod components;
pub mod depth;
mod error;
pub mod grid;
pub mod math;
pub mod plane;
pub mod proposals;
pub mod recon;

pub use camera::{backproject, project, ray_plane_depth, CameraIntrinsics, Plane, Projection};
pub use components::{connected_components, Component, Connectivity};
pub use error::{Error, Result};
pub use grid::{Grid, Pixel};
pub use math::{Mat3, Vec3};

/// Points live in the camera frame: z forward, x right, y down, meters.
pub type Point3 = Vec3;
