//! Pinhole camera model, planes and ray–plane intersection.
//!
//! Camera frame convention: z forward, x right, y down, meters.

use crate::math::{abs, round, Vec3};
use crate::{Error, Pixel, Point3, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidInput("focal lengths must be finite and positive"));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64 && 0.0 <= self.cy && self.cy < self.height as f64) {
            return Err(Error::InvalidInput("principal point outside the image"));
        }
        Ok(())
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.u < self.width && p.v < self.height
    }

    /// Unnormalised viewing ray `((u−cx)/fx, (v−cy)/fy, 1)` through pixel `p`.
    #[inline]
    pub fn ray(&self, p: Pixel) -> Vec3 {
        Vec3::new(
            (p.u as f64 - self.cx) / self.fx,
            (p.v as f64 - self.cy) / self.fy,
            1.0,
        )
    }

    /// Intrinsics of the `w × h` sub-image whose top-left corner is `(u0, v0)`.
    ///
    /// The principal point may fall outside a small crop, so the result is not re-validated.
    pub fn cropped(&self, u0: usize, v0: usize, w: usize, h: usize) -> CameraIntrinsics {
        CameraIntrinsics {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx - u0 as f64,
            cy: self.cy - v0 as f64,
            width: w,
            height: h,
        }
    }
}

/// Back-projects pixel `p` at metric `depth` into the camera frame.
pub fn backproject(p: Pixel, depth: f64, k: &CameraIntrinsics) -> Result<Point3> {
    if !depth.is_finite() || depth <= 0.0 {
        return Err(Error::InvalidInput("depth must be finite and positive"));
    }
    if !k.contains(p) {
        return Err(Error::InvalidInput("pixel outside the image"));
    }
    Ok(k.ray(p) * depth)
}

/// Result of projecting a 3D point: the rounded pixel, tagged by whether it lands in the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    InBounds(Pixel),
    OutOfBounds { u: i64, v: i64 },
}

impl Projection {
    pub fn in_bounds(self) -> Option<Pixel> {
        match self {
            Projection::InBounds(p) => Some(p),
            Projection::OutOfBounds { .. } => None,
        }
    }
}

pub fn project(pt: Point3, k: &CameraIntrinsics) -> Result<Projection> {
    if !(pt.z > 0.0) {
        return Err(Error::BehindCamera { z: pt.z });
    }
    let u = round(k.fx * pt.x / pt.z + k.cx);
    let v = round(k.fy * pt.y / pt.z + k.cy);
    let (u, v) = (u as i64, v as i64);
    if u >= 0 && v >= 0 && (u as usize) < k.width && (v as usize) < k.height {
        Ok(Projection::InBounds(Pixel::new(u as usize, v as usize)))
    } else {
        Ok(Projection::OutOfBounds { u, v })
    }
}

/// Plane `n·x = d` with unit normal in canonical sign.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    /// Normalises `normal` and applies the canonical sign.
    pub fn new(normal: Vec3, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if !(n > 1e-12) || !n.is_finite() || !offset.is_finite() {
            return Err(Error::Degenerate("plane normal must be finite and non-zero"));
        }
        Ok(Plane {
            normal: normal / n,
            offset: offset / n,
        }
        .canonical())
    }

    /// Plane through `point` with the given normal.
    pub fn through(normal: Vec3, point: Point3) -> Result<Self> {
        let n = normal
            .normalized()
            .ok_or(Error::Degenerate("plane normal must be non-zero"))?;
        Plane::new(n, n.dot(point))
    }

    /// Sign convention: `n_z > 0`, or for `n_z = 0` the first non-zero component positive.
    pub fn canonical(self) -> Plane {
        let n = self.normal;
        let flip = if n.z != 0.0 {
            n.z < 0.0
        } else if n.x != 0.0 {
            n.x < 0.0
        } else {
            n.y < 0.0
        };
        if flip {
            Plane {
                normal: -n,
                offset: -self.offset,
            }
        } else {
            self
        }
    }

    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn distance(&self, p: Point3) -> f64 {
        abs(self.signed_distance(p))
    }
}

/// Depth along the viewing ray of `p` at which it meets `plane`.
pub fn ray_plane_depth(p: Pixel, k: &CameraIntrinsics, plane: &Plane) -> Result<f64> {
    let r = k.ray(p);
    let denom = plane.normal.dot(r);
    if abs(denom) < 1e-9 {
        return Err(Error::RayParallel);
    }
    let depth = plane.offset / denom;
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::PlaneBehindCamera);
    }
    Ok(depth)
}
