//! Depth completion as a sparse weighted linear least-squares problem.
//!
//! The energy combines a data term tying estimates to observed depth, a smoothness term between
//! 4-neighbours, and a normal-consistency term down-weighted near occlusion boundaries. It is
//! assembled into a [`SparseSystem`] and minimised by preconditioned conjugate gradients on the
//! normal equations.

mod solver;
mod system;

use alloc::vec::Vec;

use crate::math::Vec3;
use crate::{Error, Grid, Pixel, Result};

pub use solver::{solve, SolveReport, SolverConfig};
pub use system::{assemble_system, boundary_weight, energy, Anchors, BoundaryWeighting, Residual, SparseSystem, Term};

/// Metric depth with a validity mask. Invalid pixels hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    values: Grid<f64>,
    valid: Grid<bool>,
}

impl DepthImage {
    /// Depths `<= 0` or non-finite are marked invalid and zeroed.
    pub fn from_values(values: Grid<f64>) -> Self {
        let valid = values.map(|d| d.is_finite() && *d > 0.0);
        let mut values = values;
        for (v, ok) in values.as_mut_slice().iter_mut().zip(valid.as_slice()) {
            if !ok {
                *v = 0.0;
            }
        }
        DepthImage { values, valid }
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        DepthImage {
            values: Grid::filled(width, height, 0.0),
            valid: Grid::filled(width, height, false),
        }
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }

    pub fn valid_mask(&self) -> &Grid<bool> {
        &self.valid
    }

    pub fn is_valid(&self, p: Pixel) -> bool {
        *self.valid.get(p)
    }

    /// Depth at `p` if valid.
    pub fn get(&self, p: Pixel) -> Option<f64> {
        if *self.valid.get(p) {
            Some(*self.values.get(p))
        } else {
            None
        }
    }

    /// Sets a valid depth; non-positive or non-finite values invalidate the pixel instead.
    pub fn set(&mut self, p: Pixel, depth: f64) {
        if depth.is_finite() && depth > 0.0 {
            self.values.set(p, depth);
            self.valid.set(p, true);
        } else {
            self.invalidate(p);
        }
    }

    pub fn invalidate(&mut self, p: Pixel) {
        self.values.set(p, 0.0);
        self.valid.set(p, false);
    }

    pub fn valid_count(&self) -> usize {
        self.valid.as_slice().iter().filter(|v| **v).count()
    }

    pub fn crop(&self, u0: usize, v0: usize, w: usize, h: usize) -> DepthImage {
        DepthImage {
            values: self.values.crop(u0, v0, w, h),
            valid: self.valid.crop(u0, v0, w, h),
        }
    }
}

/// Unit surface normals in the camera frame with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    normals: Grid<Vec3>,
    valid: Grid<bool>,
}

impl NormalMap {
    /// Normalises every finite non-zero vector; the rest become invalid.
    pub fn new(normals: Grid<Vec3>) -> Self {
        let mut valid = Grid::filled(normals.width(), normals.height(), false);
        let mut out = normals;
        for (i, n) in out.as_mut_slice().iter_mut().enumerate() {
            match n.normalized() {
                Some(u) if n.is_finite() => {
                    *n = u;
                    valid.as_mut_slice()[i] = true;
                }
                _ => *n = Vec3::ZERO,
            }
        }
        NormalMap { normals: out, valid }
    }

    pub fn uniform(width: usize, height: usize, n: Vec3) -> Self {
        NormalMap::new(Grid::filled(width, height, n))
    }

    pub fn width(&self) -> usize {
        self.normals.width()
    }

    pub fn height(&self) -> usize {
        self.normals.height()
    }

    pub fn get(&self, p: Pixel) -> Option<Vec3> {
        if *self.valid.get(p) {
            Some(*self.normals.get(p))
        } else {
            None
        }
    }

    pub fn normals(&self) -> &Grid<Vec3> {
        &self.normals
    }

    pub fn crop(&self, u0: usize, v0: usize, w: usize, h: usize) -> NormalMap {
        NormalMap {
            normals: self.normals.crop(u0, v0, w, h),
            valid: self.valid.crop(u0, v0, w, h),
        }
    }
}

/// Per-pixel boundary probabilities `(none, occlusion, contact)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMap(Grid<[f64; 3]>);

impl BoundaryMap {
    pub const NONE: usize = 0;
    pub const OCCLUSION: usize = 1;
    pub const CONTACT: usize = 2;

    pub fn new(probs: Grid<[f64; 3]>) -> Result<Self> {
        if probs
            .as_slice()
            .iter()
            .flatten()
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::InvalidInput("boundary probabilities must lie in [0, 1]"));
        }
        Ok(BoundaryMap(probs))
    }

    /// Everywhere "no boundary".
    pub fn empty(width: usize, height: usize) -> Self {
        BoundaryMap(Grid::filled(width, height, [1.0, 0.0, 0.0]))
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn probs(&self) -> &Grid<[f64; 3]> {
        &self.0
    }

    pub fn occlusion(&self, p: Pixel) -> f64 {
        self.0.get(p)[Self::OCCLUSION]
    }

    pub fn contact(&self, p: Pixel) -> f64 {
        self.0.get(p)[Self::CONTACT]
    }

    pub fn crop(&self, u0: usize, v0: usize, w: usize, h: usize) -> BoundaryMap {
        BoundaryMap(self.0.crop(u0, v0, w, h))
    }
}

/// Non-negative weights of the data, smoothness and normal terms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyWeights {
    pub lambda_d: f64,
    pub lambda_s: f64,
    pub lambda_n: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        EnergyWeights {
            lambda_d: 1000.0,
            lambda_s: 0.001,
            lambda_n: 1.0,
        }
    }
}

impl EnergyWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.lambda_d, self.lambda_s, self.lambda_n]
            .iter()
            .all(|l| l.is_finite() && *l >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("energy weights must be finite and non-negative"))
        }
    }

    pub fn scaled(&self, s: f64) -> EnergyWeights {
        EnergyWeights {
            lambda_d: self.lambda_d * s,
            lambda_s: self.lambda_s * s,
            lambda_n: self.lambda_n * s,
        }
    }
}

/// Pixels of `mask` set to `true`, row-major.
pub fn mask_pixels(mask: &Grid<bool>) -> Vec<Pixel> {
    mask.pixels().filter(|p| *mask.get(*p)).collect()
}
