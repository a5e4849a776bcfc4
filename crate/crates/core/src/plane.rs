//! Total-least-squares and RANSAC plane fitting, and rim-depth completion from a plane.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::ray_plane_depth;
use crate::depth::DepthImage;
use crate::math::{median, symmetric_eigen, Mat3, Vec3};
use crate::{CameraIntrinsics, Error, Pixel, Plane, Point3, Result};

/// RANSAC iterations used unless configured otherwise.
pub const DEFAULT_RANSAC_ITERATIONS: usize = 500;
/// Inlier distance threshold in meters.
pub const DEFAULT_INLIER_THRESHOLD: f64 = 0.005;

/// Least-squares plane: normal along the direction of least spread of the centred points.
pub fn fit_plane_svd(points: &[Point3]) -> Result<Plane> {
    if points.len() < 3 {
        return Err(Error::Degenerate("plane fit needs at least three points"));
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vec3::ZERO, |a, p| a + *p) / n;
    let mut s = [[0.0; 3]; 3];
    for p in points {
        let d = (*p - centroid).to_array();
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] += d[i] * d[j];
            }
        }
    }
    let (vals, vecs) = symmetric_eigen(&Mat3 { m: s });
    let spread = vals[2].max(0.0);
    if !(spread > 0.0) || vals[1] <= 1e-12 * spread {
        return Err(Error::Degenerate("points are collinear or coincident"));
    }
    let normal = vecs[0];
    Plane::new(normal, normal.dot(centroid))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub plane: Plane,
    /// Indices of the points within the threshold of `plane`, ascending.
    pub inliers: Vec<usize>,
    /// Largest inlier count reached by any sampled candidate.
    pub best_candidate_inliers: usize,
    /// Iteration at which the best candidate was first found.
    pub best_iteration: usize,
    /// Samples skipped because they were degenerate.
    pub degenerate_samples: usize,
}

fn inliers_of(points: &[Point3], plane: &Plane, threshold: f64) -> Vec<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| plane.distance(**p) <= threshold)
        .map(|(i, _)| i)
        .collect()
}

fn count_inliers(points: &[Point3], plane: &Plane, threshold: f64) -> usize {
    points.iter().filter(|p| plane.distance(**p) <= threshold).count()
}

/// Returns the refit on the best inlier set, unless the refit keeps fewer inliers than the
/// best sampled candidate, in which case the candidate is returned.
fn finish(points: &[Point3], best: Plane, best_count: usize, threshold: f64, refit: Option<Plane>) -> (Plane, Vec<usize>) {
    if let Some(r) = refit {
        let inl = inliers_of(points, &r, threshold);
        if inl.len() >= best_count {
            return (r, inl);
        }
    }
    (best, inliers_of(points, &best, threshold))
}

/// RANSAC over random 3-point samples with a final least-squares refit on the inliers.
///
/// Candidates replace the saved one only with strictly more inliers, so ties keep the earliest
/// iteration. Deterministic for a given point order and seed.
pub fn ransac_plane(points: &[Point3], threshold: f64, iterations: usize, seed: u64) -> Result<RansacResult> {
    if points.len() < 3 {
        return Err(Error::Degenerate("RANSAC needs at least three points"));
    }
    if iterations == 0 {
        return Err(Error::InvalidInput("RANSAC needs at least one iteration"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();
    let mut best: Option<(Plane, usize, usize)> = None;
    let mut degenerate = 0;
    for it in 0..iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let mut k = rng.random_range(0..n - 2);
        if k >= lo {
            k += 1;
        }
        if k >= hi {
            k += 1;
        }
        let Ok(candidate) = fit_plane_svd(&[points[i], points[j], points[k]]) else {
            degenerate += 1;
            continue;
        };
        let count = count_inliers(points, &candidate, threshold);
        if best.map_or(true, |(_, c, _)| count > c) {
            best = Some((candidate, count, it));
        }
    }
    let (best_plane, best_count, best_iteration) =
        best.ok_or(Error::Degenerate("every RANSAC sample was degenerate"))?;
    let best_inliers: Vec<Point3> = inliers_of(points, &best_plane, threshold)
        .into_iter()
        .map(|i| points[i])
        .collect();
    let refit = fit_plane_svd(&best_inliers).ok();
    let (plane, inliers) = finish(points, best_plane, best_count, threshold, refit);
    Ok(RansacResult {
        plane,
        inliers,
        best_candidate_inliers: best_count,
        best_iteration,
        degenerate_samples: degenerate,
    })
}

/// RANSAC with the normal fixed to `table_normal`: one point per sample fixes the offset, and
/// the final offset is the median of `n·x` over the inliers.
pub fn ransac_plane_parallel(
    points: &[Point3],
    table_normal: Vec3,
    threshold: f64,
    iterations: usize,
    seed: u64,
) -> Result<RansacResult> {
    if points.is_empty() {
        return Err(Error::Degenerate("RANSAC needs at least one point"));
    }
    if iterations == 0 {
        return Err(Error::InvalidInput("RANSAC needs at least one iteration"));
    }
    if !table_normal.is_finite() || (table_normal.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("table normal must be a unit vector"));
    }
    let normal = Plane {
        normal: table_normal,
        offset: 0.0,
    }
    .canonical()
    .normal;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Plane, usize, usize)> = None;
    for it in 0..iterations {
        let i = rng.random_range(0..points.len());
        let candidate = Plane {
            normal,
            offset: normal.dot(points[i]),
        };
        let count = count_inliers(points, &candidate, threshold);
        if best.map_or(true, |(_, c, _)| count > c) {
            best = Some((candidate, count, it));
        }
    }
    let (best_plane, best_count, best_iteration) = best.expect("at least one iteration");
    let mut offsets: Vec<f64> = inliers_of(points, &best_plane, threshold)
        .into_iter()
        .map(|i| normal.dot(points[i]))
        .collect();
    let refit = median(&mut offsets).map(|d| Plane { normal, offset: d });
    let (plane, inliers) = finish(points, best_plane, best_count, threshold, refit);
    Ok(RansacResult {
        plane,
        inliers,
        best_candidate_inliers: best_count,
        best_iteration,
        degenerate_samples: 0,
    })
}

/// Depth of each pixel's viewing ray on `plane`.
///
/// Returns a depth image of the intrinsics' size with only the completed pixels valid, plus
/// the pixels whose ray misses the plane (parallel or behind the camera).
pub fn rim_depth(pixels: &[Pixel], plane: &Plane, k: &CameraIntrinsics) -> (DepthImage, Vec<Pixel>) {
    let mut out = DepthImage::invalid(k.width, k.height);
    let mut failed = Vec::new();
    for &p in pixels {
        match ray_plane_depth(p, k, plane) {
            Ok(d) if k.contains(p) => out.set(p, d),
            _ => failed.push(p),
        }
    }
    (out, failed)
}
