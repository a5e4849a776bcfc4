//! Ray-cast synthetic scenes: an open cup standing on a table plane, with exact depth, labels,
//! normals and boundary maps, plus a corrupted "transparent" raw depth.

use affrecon_core::affordance::{Affordance, AffordanceMask, AffordanceScores, AffordanceVolume};
use affrecon_core::depth::{BoundaryMap, DepthImage, NormalMap};
use affrecon_core::math::Mat3;
use affrecon_core::recon::{BBox, SceneLayers};
use affrecon_core::{CameraIntrinsics, Grid, Pixel, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::scene::{Instance, Scene};

/// Adjacent depths further apart than this are an occlusion boundary.
pub const OCCLUSION_JUMP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraPose {
    /// Distance from the look-at point, meters.
    pub distance: f64,
    /// Angle above the table plane, degrees.
    pub elevation_deg: f64,
    /// Rotation about the cup axis, degrees; 0 puts the camera on the world −y side.
    pub azimuth_deg: f64,
    /// Height of the look-at point above the table, on the cup axis.
    pub target_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corruption {
    /// Fraction of object pixels whose raw depth is dropped.
    pub drop_fraction: f64,
    /// Gaussian noise on surviving object depths, meters.
    pub noise_sigma: f64,
}

/// Open truncated-cone cup. Radii are measured at the rim; the lateral wall thickness is
/// `outer_radius − inner_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCupSpec {
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub height: f64,
    /// Thickness of the bottom.
    pub wall_thickness: f64,
    /// Outer radius at the base over outer radius at the rim; 1 is a cylinder.
    pub taper: f64,
    /// Cup axis position on the table, world meters.
    pub position: [f64; 2],
    /// World z of the table plane.
    pub table_height: f64,
    pub camera: CameraPose,
    pub corruption: Corruption,
}

impl Default for SynthCupSpec {
    fn default() -> Self {
        SynthCupSpec {
            outer_radius: 0.04,
            inner_radius: 0.0375,
            height: 0.09,
            wall_thickness: 0.006,
            taper: 0.8,
            position: [0.0, 0.0],
            table_height: 0.0,
            camera: CameraPose {
                distance: 0.5,
                elevation_deg: 55.0,
                azimuth_deg: 0.0,
                target_height: 0.045,
            },
            corruption: Corruption {
                drop_fraction: 0.8,
                noise_sigma: 0.003,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid cup spec: {0}")]
    InvalidSpec(&'static str),
    #[error("camera is inside the scene geometry")]
    CameraInside,
}

/// Default intrinsics of generated scenes: 160×120, f = 300 px.
pub fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(300.0, 300.0, 80.0, 60.0, 160, 120).expect("valid constants")
}

impl SynthCupSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let finite = [
            self.outer_radius,
            self.inner_radius,
            self.height,
            self.wall_thickness,
            self.taper,
            self.position[0],
            self.position[1],
            self.table_height,
            self.camera.distance,
            self.camera.elevation_deg,
            self.camera.azimuth_deg,
            self.camera.target_height,
            self.corruption.drop_fraction,
            self.corruption.noise_sigma,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(SynthError::InvalidSpec("non-finite value"));
        }
        if !(self.inner_radius > 0.0 && self.inner_radius < self.outer_radius) {
            return Err(SynthError::InvalidSpec("need 0 < inner radius < outer radius"));
        }
        if !(self.height > 0.0) {
            return Err(SynthError::InvalidSpec("height must be positive"));
        }
        if !(self.wall_thickness > 0.0 && self.wall_thickness < self.height) {
            return Err(SynthError::InvalidSpec("need 0 < wall thickness < height"));
        }
        if !(self.taper > 0.0 && self.taper <= 1.0) {
            return Err(SynthError::InvalidSpec("taper must lie in (0, 1]"));
        }
        if self.cup().inner_radius_at(self.wall_thickness) <= 0.0 {
            return Err(SynthError::InvalidSpec("cavity closes above the bottom"));
        }
        if !(0.0..=1.0).contains(&self.corruption.drop_fraction) {
            return Err(SynthError::InvalidSpec("drop fraction must lie in [0, 1]"));
        }
        if !(self.corruption.noise_sigma >= 0.0) {
            return Err(SynthError::InvalidSpec("noise sigma must be non-negative"));
        }
        if !(self.camera.distance > 0.0) {
            return Err(SynthError::InvalidSpec("camera distance must be positive"));
        }
        Ok(())
    }

    fn cup(&self) -> Cup {
        let base = self.taper * self.outer_radius;
        Cup {
            base_radius: base,
            slope: (self.outer_radius - base) / self.height,
            wall: self.outer_radius - self.inner_radius,
            height: self.height,
            bottom: self.wall_thickness,
        }
    }

    /// Copy of `self` with cup shape and viewpoint perturbed from `seed`: radius ±12%, wall
    /// 2 to 4 mm, height ±10%, taper 0.75 to 0.9, elevation 45° to 65°, any azimuth.
    ///
    /// Used to build families of distinct evaluation scenes; corruption is left alone.
    pub fn varied(&self, seed: u64) -> SynthCupSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = *self;
        s.outer_radius = self.outer_radius * rng.random_range(0.88..1.12);
        s.inner_radius = s.outer_radius - rng.random_range(0.002..0.004);
        s.height = self.height * rng.random_range(0.9..1.1);
        s.taper = rng.random_range(0.75..0.9);
        s.camera.elevation_deg = rng.random_range(45.0..65.0);
        s.camera.azimuth_deg = rng.random_range(0.0..360.0);
        s.camera.target_height = s.height / 2.0;
        s
    }

    /// Camera centre (world) and world-to-camera rotation.
    pub fn camera_frame(&self) -> (Vec3, Mat3) {
        let c = &self.camera;
        let (el, az) = (c.elevation_deg.to_radians(), c.azimuth_deg.to_radians());
        let target = Vec3::new(self.position[0], self.position[1], self.table_height + c.target_height);
        let center = target + Vec3::new(el.cos() * az.sin(), -el.cos() * az.cos(), el.sin()) * c.distance;
        let z = (target - center).normalized().expect("positive distance");
        let up = Vec3::Z;
        let x = z.cross(up).normalized().unwrap_or(Vec3::X);
        let y = z.cross(x);
        (center, Mat3::from_rows(x, y, z))
    }

    /// Table plane in the camera frame as `(normal, offset)` with `normal · x = offset`.
    pub fn table_plane_camera(&self) -> (Vec3, f64) {
        let (c, r) = self.camera_frame();
        let n = r.mul_vec(Vec3::Z);
        // World points with z = table_height: n · (R (p − c)) = table_height − c.z
        (n, self.table_height - c.z)
    }

    /// Rim circle centre in the camera frame.
    pub fn rim_center_camera(&self) -> Vec3 {
        let (c, r) = self.camera_frame();
        let p = Vec3::new(self.position[0], self.position[1], self.table_height + self.height);
        r.mul_vec(p - c)
    }
}

/// Cup geometry in its local frame: axis along +z, base on z = 0.
#[derive(Debug, Clone, Copy)]
struct Cup {
    base_radius: f64,
    slope: f64,
    wall: f64,
    height: f64,
    bottom: f64,
}

impl Cup {
    fn outer_radius_at(&self, z: f64) -> f64 {
        self.base_radius + self.slope * z
    }

    fn inner_radius_at(&self, z: f64) -> f64 {
        self.base_radius - self.wall + self.slope * z
    }

    fn contains(&self, p: Vec3) -> bool {
        let r = (p.x * p.x + p.y * p.y).sqrt();
        p.z >= 0.0
            && p.z <= self.height
            && r <= self.outer_radius_at(p.z)
            && !(p.z > self.bottom && r < self.inner_radius_at(p.z))
    }
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    t: f64,
    normal: Vec3,
    label: Affordance,
}

const EPS: f64 = 1e-12;

/// Roots of `a t² + b t + c = 0` that are real and positive.
fn positive_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2);
    if a.abs() < 1e-14 {
        if b.abs() > EPS {
            out.push(-c / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let s = disc.sqrt();
            // Numerically stable pair.
            let q = -0.5 * (b + b.signum() * s);
            if q != 0.0 {
                out.push(q / a);
                out.push(c / q);
            } else {
                out.push(-b / (2.0 * a));
            }
        }
    }
    out.retain(|t| *t > EPS);
    out
}

/// Intersections of the ray with the cone `r = a + s z`, `z ∈ [z0, z1]`.
fn cone_hits(o: Vec3, d: Vec3, a: f64, s: f64, z0: f64, z1: f64) -> Vec<(f64, Vec3)> {
    let k = a + s * o.z;
    let qa = d.x * d.x + d.y * d.y - s * s * d.z * d.z;
    let qb = 2.0 * (o.x * d.x + o.y * d.y - s * k * d.z);
    let qc = o.x * o.x + o.y * o.y - k * k;
    positive_roots(qa, qb, qc)
        .into_iter()
        .filter_map(|t| {
            let p = o + d * t;
            let r = a + s * p.z;
            (p.z >= z0 && p.z <= z1 && r >= 0.0).then(|| {
                let n = Vec3::new(p.x, p.y, -s * r).normalized().unwrap_or(Vec3::Z);
                (t, n)
            })
        })
        .collect()
}

/// Intersection with the horizontal plane `z = h`.
fn plane_hit(o: Vec3, d: Vec3, h: f64) -> Option<(f64, Vec3)> {
    if d.z.abs() < EPS {
        return None;
    }
    let t = (h - o.z) / d.z;
    (t > EPS).then(|| (t, o + d * t))
}

impl Cup {
    /// Nearest surface along the ray `o + t d` (local frame).
    fn cast(&self, o: Vec3, d: Vec3) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut offer = |t: f64, normal: Vec3, label: Affordance| {
            if best.map_or(true, |b| t < b.t) {
                best = Some(Hit { t, normal, label });
            }
        };
        let radius = |p: Vec3| (p.x * p.x + p.y * p.y).sqrt();

        for (t, n) in cone_hits(o, d, self.base_radius, self.slope, 0.0, self.height) {
            offer(t, n, Affordance::WrapGrasp);
        }
        let inner_base = self.base_radius - self.wall;
        for (t, n) in cone_hits(o, d, inner_base, self.slope, self.bottom, self.height) {
            offer(t, -n, Affordance::Contain);
        }
        if let Some((t, p)) = plane_hit(o, d, self.bottom) {
            if radius(p) <= self.inner_radius_at(self.bottom) {
                offer(t, Vec3::Z, Affordance::Contain);
            }
        }
        if let Some((t, p)) = plane_hit(o, d, self.height) {
            let r = radius(p);
            if r >= self.inner_radius_at(self.height) && r <= self.outer_radius_at(self.height) {
                offer(t, Vec3::Z, Affordance::WrapGrasp);
            }
        }
        if let Some((t, p)) = plane_hit(o, d, 0.0) {
            if radius(p) <= self.base_radius {
                offer(t, -Vec3::Z, Affordance::Support);
            } else {
                offer(t, Vec3::Z, Affordance::Background);
            }
        }
        best
    }
}

/// Noise-free rendering of a cup scene.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendering {
    pub depth: DepthImage,
    pub mask: AffordanceMask,
    pub normals: NormalMap,
    pub boundary: BoundaryMap,
}

/// Ray-casts the scene: depth, labels and camera-facing unit normals in the camera frame.
pub fn render(spec: &SynthCupSpec, k: &CameraIntrinsics) -> Result<Rendering, SynthError> {
    spec.validate()?;
    let cup = spec.cup();
    let (center, rot) = spec.camera_frame();
    let origin = center - Vec3::new(spec.position[0], spec.position[1], spec.table_height);
    if origin.z <= 0.0 || cup.contains(origin) {
        return Err(SynthError::CameraInside);
    }
    let rot_t = rot.transpose();
    let (w, h) = (k.width, k.height);
    let mut depth = Grid::filled(w, h, 0.0);
    let mut labels = Grid::filled(w, h, 0u8);
    let mut normals = Grid::filled(w, h, Vec3::ZERO);
    for p in depth.pixels().collect::<Vec<_>>() {
        let ray_cam = k.ray(p);
        let d = rot_t.mul_vec(ray_cam);
        if let Some(hit) = cup.cast(origin, d) {
            // The camera ray has unit z, so the ray parameter is the depth.
            depth.set(p, hit.t);
            labels.set(p, hit.label.label());
            let mut n = rot.mul_vec(hit.normal);
            if n.dot(ray_cam) > 0.0 {
                n = -n;
            }
            normals.set(p, n);
        }
    }
    let depth = DepthImage::from_values(depth);
    let mask = AffordanceMask::new(labels).expect("labels from the palette");
    let boundary = boundary_maps(&depth, &mask);
    Ok(Rendering {
        depth,
        mask,
        normals: NormalMap::new(normals),
        boundary,
    })
}

/// Occlusion on both pixels of every 4-adjacent pair whose depths jump by more than
/// [`OCCLUSION_JUMP`] (or where only one has depth); contact on object pixels next to a table
/// pixel without such a jump. Occlusion takes precedence.
pub fn boundary_maps(depth: &DepthImage, mask: &AffordanceMask) -> BoundaryMap {
    let (w, h) = (depth.width(), depth.height());
    let labels = mask.labels();
    let mut occ = Grid::filled(w, h, false);
    let mut contact = Grid::filled(w, h, false);
    for p in labels.pixels() {
        for q in [Pixel::new(p.u + 1, p.v), Pixel::new(p.u, p.v + 1)] {
            if q.u >= w || q.v >= h {
                continue;
            }
            let jump = match (depth.get(p), depth.get(q)) {
                (Some(a), Some(b)) => (a - b).abs() > OCCLUSION_JUMP,
                (None, None) => false,
                _ => true,
            };
            if jump {
                occ.set(p, true);
                occ.set(q, true);
            } else if mask.is_object(p) != mask.is_object(q) && depth.is_valid(p) && depth.is_valid(q) {
                let obj = if mask.is_object(p) { p } else { q };
                contact.set(obj, true);
            }
        }
    }
    let probs = Grid::from_fn(w, h, |p| {
        if *occ.get(p) {
            [0.0, 1.0, 0.0]
        } else if *contact.get(p) {
            [0.0, 0.0, 1.0]
        } else {
            [1.0, 0.0, 0.0]
        }
    });
    BoundaryMap::new(probs).expect("one-hot probabilities")
}

/// Drops a seeded random fraction of object depths and adds Gaussian noise to the rest.
pub fn corrupt(gt: &DepthImage, mask: &AffordanceMask, c: &Corruption, seed: u64) -> DepthImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, c.noise_sigma).expect("finite non-negative sigma");
    let mut raw = gt.clone();
    for p in gt.values().pixels() {
        if !mask.is_object(p) {
            continue;
        }
        let Some(d) = gt.get(p) else { continue };
        // Both draws happen for every object pixel so the stream does not depend on outcomes.
        let drop = rng.random::<f64>() < c.drop_fraction;
        let n = noise.sample(&mut rng);
        if drop {
            raw.invalidate(p);
        } else {
            raw.set(p, d + n);
        }
    }
    raw
}

/// One-hot affordance volume of a mask.
pub fn one_hot_volume(mask: &AffordanceMask) -> AffordanceVolume {
    let l = mask.labels();
    let channels = (0..=affrecon_core::affordance::NUM_CLASSES as u8)
        .map(|c| l.map(|&v| if v == c { 1.0 } else { 0.0 }))
        .collect();
    AffordanceVolume::normalized(channels).expect("one-hot channels sum to one")
}

/// Half-open box around every object pixel, or `None` when there is none.
pub fn object_bbox(mask: &AffordanceMask) -> Option<BBox> {
    let l = mask.labels();
    let mut b: Option<BBox> = None;
    for p in l.pixels().filter(|&p| mask.is_object(p)) {
        b = Some(match b {
            None => BBox::new(p.u, p.v, p.u + 1, p.v + 1),
            Some(b) => BBox::new(b.u0.min(p.u), b.v0.min(p.v), b.u1.max(p.u + 1), b.v1.max(p.v + 1)),
        });
    }
    b
}

/// Full synthetic scene: exact layers, corrupted raw depth and a single cup instance.
pub fn gen_synthetic(spec: &SynthCupSpec, k: &CameraIntrinsics, seed: u64) -> Result<Scene, SynthError> {
    let r = render(spec, k)?;
    let raw = corrupt(&r.depth, &r.mask, &spec.corruption, seed);
    let instances = match object_bbox(&r.mask) {
        Some(bbox) => {
            let present = |a: Affordance| {
                if r.mask.labels().as_slice().contains(&a.label()) {
                    1.0
                } else {
                    0.0
                }
            };
            let scores = [Affordance::Contain, Affordance::WrapGrasp, Affordance::Support].map(present);
            vec![Instance {
                bbox,
                scores: AffordanceScores::new(scores.to_vec()).expect("scores in [0, 1]"),
            }]
        }
        None => Vec::new(),
    };
    let volume = one_hot_volume(&r.mask);
    Ok(Scene {
        layers: SceneLayers {
            intrinsics: *k,
            depth_raw: raw,
            mask: r.mask,
            volume: Some(volume),
            normals: r.normals,
            boundary: r.boundary,
        },
        depth_gt: Some(r.depth),
        instances,
    })
}
