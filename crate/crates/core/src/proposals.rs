//! End-effector pose proposals for pouring, picking and stacking.
//!
//! Every pose is expressed in the camera frame. The tool z axis is the approach direction; the
//! tool y axis lies in the vertical plane through z.

use alloc::vec::Vec;

use crate::affordance::{Affordance, Region};
use crate::depth::{DepthImage, NormalMap};
use crate::math::{Mat3, Vec3};
use crate::plane::fit_plane_svd;
use crate::{backproject, CameraIntrinsics, Error, Pixel, Point3, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pose {
    pub rotation: Mat3,
    pub translation: Point3,
}

impl Pose {
    pub fn x_axis(&self) -> Vec3 {
        self.rotation.col(0)
    }

    pub fn y_axis(&self) -> Vec3 {
        self.rotation.col(1)
    }

    pub fn z_axis(&self) -> Vec3 {
        self.rotation.col(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalConfig {
    /// World up direction expressed in the camera frame.
    pub up: Vec3,
    /// Shift of the pour target along the tool y axis, meters.
    pub container_length_offset: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        ProposalConfig {
            up: Vec3::new(0.0, -1.0, 0.0),
            container_length_offset: 0.0,
        }
    }
}

/// Right-handed frame with the given z axis and y in the plane of `{z, up}`, pointing away
/// from `up`.
pub fn frame_from_z(z_axis: Vec3, up: Vec3) -> Result<Mat3> {
    let z = z_axis
        .normalized()
        .ok_or(Error::InvalidInput("z axis must be non-zero"))?;
    let up = up.normalized().ok_or(Error::InvalidInput("up vector must be non-zero"))?;
    if z.dot(up).abs() >= 1.0 - 1e-9 {
        return Err(Error::DegenerateFrame);
    }
    let y = -(up - z * up.dot(z));
    let y = y.normalized().ok_or(Error::DegenerateFrame)?;
    // Re-orthogonalise against z to keep RᵀR = I at machine precision.
    let y = (y - z * y.dot(z)).normalized().ok_or(Error::DegenerateFrame)?;
    let x = y.cross(z);
    Ok(Mat3::from_cols(x, y, z))
}

/// [`frame_from_z`], falling back to the optical axis and then the image x axis as reference
/// when `z` is parallel to `up`.
fn frame_with_fallback(z: Vec3, up: Vec3) -> Result<Mat3> {
    frame_from_z(z, up)
        .or_else(|_| frame_from_z(z, Vec3::Z))
        .or_else(|_| frame_from_z(z, Vec3::X))
}

fn mean(points: &[Point3]) -> Point3 {
    points.iter().fold(Vec3::ZERO, |a, p| a + *p) / points.len() as f64
}

/// Pour pose from rim points: translation at their mean, z along the rim-plane normal facing
/// the camera.
pub fn pour_pose_from_points(rim: &[Point3], cfg: &ProposalConfig) -> Result<Pose> {
    if rim.len() < 3 {
        return Err(Error::InsufficientData("pouring needs at least three rim points"));
    }
    let plane = fit_plane_svd(rim)?;
    let mut z = plane.normal;
    if z.z > 0.0 {
        z = -z;
    }
    let rotation = frame_with_fallback(z, cfg.up)?;
    let translation = mean(rim) + rotation.col(1) * cfg.container_length_offset;
    Ok(Pose {
        rotation,
        translation,
    })
}

/// Pick pose from surface points and the normal at the centre pixel; the normal is flipped to
/// face the camera along `view_ray`.
pub fn pick_pose_from_points(points: &[Point3], center_normal: Vec3, view_ray: Vec3, cfg: &ProposalConfig) -> Result<Pose> {
    if points.is_empty() {
        return Err(Error::InsufficientData("picking needs at least one point"));
    }
    let mut z = center_normal
        .normalized()
        .ok_or(Error::InsufficientData("centre normal is zero"))?;
    if z.dot(view_ray) > 0.0 {
        z = -z;
    }
    let rotation = frame_with_fallback(z, cfg.up)?;
    Ok(Pose {
        rotation,
        translation: mean(points),
    })
}

fn backproject_valid(pixels: &[Pixel], depth: &DepthImage, k: &CameraIntrinsics) -> Vec<Point3> {
    pixels
        .iter()
        .filter_map(|&p| depth.get(p).and_then(|d| backproject(p, d, k).ok()))
        .collect()
}

/// Pouring proposal from the boundary of a "contain" region.
pub fn pour_proposal(contain: &Region, depth: &DepthImage, k: &CameraIntrinsics, cfg: &ProposalConfig) -> Result<Pose> {
    let rim = backproject_valid(&contain.boundary, depth, k);
    if rim.len() < 3 {
        return Err(Error::InsufficientData("fewer than three contain-boundary pixels with depth"));
    }
    pour_pose_from_points(&rim, cfg)
}

/// Region pixel with valid depth and normal closest to the pixel centroid.
pub fn center_pixel(region: &Region, depth: &DepthImage, normals: &NormalMap) -> Option<Pixel> {
    let (cu, cv) = region.pixel_centroid();
    region
        .pixels
        .iter()
        .copied()
        .filter(|&p| depth.is_valid(p) && normals.get(p).is_some())
        .min_by(|a, b| {
            let d2 = |p: &Pixel| {
                let (du, dv) = (p.u as f64 - cu, p.v as f64 - cv);
                du * du + dv * dv
            };
            d2(a).total_cmp(&d2(b))
        })
}

/// Picking proposal from a "wrap-grasp" region.
pub fn pick_proposal(
    wrap: &Region,
    depth: &DepthImage,
    normals: &NormalMap,
    k: &CameraIntrinsics,
    cfg: &ProposalConfig,
) -> Result<Pose> {
    let points = backproject_valid(&wrap.pixels, depth, k);
    if points.is_empty() {
        return Err(Error::InsufficientData("region has no pixel with depth"));
    }
    let center = center_pixel(wrap, depth, normals)
        .ok_or(Error::InsufficientData("no centre pixel with a valid normal"))?;
    let n = normals.get(center).expect("filtered on validity");
    pick_pose_from_points(&points, n, k.ray(center), cfg)
}

/// Which affordance the stacked object offers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackRole {
    /// The object is placed onto: built like a pour pose on its "contain" rim.
    HasContain,
    /// The object is carried by its "support" face: built like a pick pose on that face.
    HasSupport,
}

/// Stacking proposal; uses the largest region of the required affordance.
pub fn stack_proposal(
    role: StackRole,
    regions: &[Region],
    depth: &DepthImage,
    normals: &NormalMap,
    k: &CameraIntrinsics,
    cfg: &ProposalConfig,
) -> Result<Pose> {
    let class = match role {
        StackRole::HasContain => Affordance::Contain,
        StackRole::HasSupport => Affordance::Support,
    };
    let region = regions
        .iter()
        .filter(|r| r.class == class.label())
        .max_by_key(|r| r.area())
        .ok_or(Error::InsufficientData("required affordance region is missing"))?;
    match role {
        StackRole::HasContain => {
            let cfg = ProposalConfig {
                container_length_offset: 0.0,
                ..*cfg
            };
            pour_proposal(region, depth, k, &cfg)
        }
        StackRole::HasSupport => pick_proposal(region, depth, normals, k, cfg),
    }
}
