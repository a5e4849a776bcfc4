//! Scene manifests: a TOML file naming one PNG per layer plus an intrinsics sidecar.
//!
//! ```toml
//! depth_raw = "depth_raw.png"
//! depth_gt = "depth_gt.png"          # optional
//! affordance_mask = "mask.png"
//! affordance_volume = "volume.png"   # optional
//! normals = "normals.png"
//! boundaries = "boundaries.png"
//! intrinsics = "intrinsics.toml"
//! rgb = "rgb.png"                    # optional, only its size is checked
//!
//! [[instances]]
//! bbox = [40, 30, 120, 100]          # u0, v0, u1, v1 (exclusive)
//! scores = [1.0, 1.0, 0.0]           # contain, wrap-grasp, support
//! ```
//!
//! Paths are relative to the manifest. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use affrecon_core::affordance::AffordanceScores;
use affrecon_core::depth::DepthImage;
use affrecon_core::recon::{BBox, SceneLayers};
use affrecon_core::CameraIntrinsics;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, IoResult};
use crate::formats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceEntry {
    pub bbox: [usize; 4],
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rgb: Option<PathBuf>,
    pub depth_raw: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_gt: Option<PathBuf>,
    pub affordance_mask: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affordance_volume: Option<PathBuf>,
    pub normals: PathBuf,
    pub boundaries: PathBuf,
    pub intrinsics: PathBuf,
    #[serde(default)]
    pub instances: Vec<InstanceEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsFile {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl From<&CameraIntrinsics> for IntrinsicsFile {
    fn from(k: &CameraIntrinsics) -> Self {
        IntrinsicsFile {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub bbox: BBox,
    pub scores: AffordanceScores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub layers: SceneLayers,
    pub depth_gt: Option<DepthImage>,
    pub instances: Vec<Instance>,
}

impl Scene {
    pub fn bboxes(&self) -> Vec<BBox> {
        self.instances.iter().map(|i| i.bbox).collect()
    }
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> IoResult<T> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|source| IoError::Toml {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> IoResult<()> {
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("manifest types serialize to TOML")
}

pub fn load_intrinsics(path: &Path) -> IoResult<CameraIntrinsics> {
    let f: IntrinsicsFile = read_toml(path)?;
    CameraIntrinsics::new(f.fx, f.fy, f.cx, f.cy, f.width, f.height).map_err(|e| IoError::format(path, e.to_string()))
}

pub fn save_intrinsics(path: &Path, k: &CameraIntrinsics) -> IoResult<()> {
    write_text(path, &to_toml(&IntrinsicsFile::from(k)))
}

fn check_size(path: &Path, got: (usize, usize), k: &CameraIntrinsics) -> IoResult<()> {
    if got != (k.width, k.height) {
        return Err(IoError::format(
            path,
            format!("size {}×{} differs from the intrinsics {}×{}", got.0, got.1, k.width, k.height),
        ));
    }
    Ok(())
}

/// Loads every layer named by the manifest and checks sizes, boxes and scores.
pub fn load_scene(manifest_path: &Path) -> IoResult<Scene> {
    let m: SceneManifest = read_toml(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let at = |p: &Path| dir.join(p);

    let k = load_intrinsics(&at(&m.intrinsics))?;
    if let Some(rgb) = &m.rgb {
        let path = at(rgb);
        check_size(&path, formats::image_size(&path)?, &k)?;
    }
    let path = at(&m.depth_raw);
    let depth_raw = formats::load_depth(&path)?;
    check_size(&path, (depth_raw.width(), depth_raw.height()), &k)?;
    let depth_gt = match &m.depth_gt {
        Some(p) => {
            let path = at(p);
            let d = formats::load_depth(&path)?;
            check_size(&path, (d.width(), d.height()), &k)?;
            Some(d)
        }
        None => None,
    };
    let path = at(&m.affordance_mask);
    let mask = formats::load_mask(&path)?;
    check_size(&path, (mask.width(), mask.height()), &k)?;
    let volume = match &m.affordance_volume {
        Some(p) => {
            let path = at(p);
            let v = formats::load_volume(&path, k.height)?;
            check_size(&path, (v.width(), v.height()), &k)?;
            Some(v)
        }
        None => None,
    };
    let path = at(&m.normals);
    let normals = formats::load_normals(&path)?;
    check_size(&path, (normals.width(), normals.height()), &k)?;
    let path = at(&m.boundaries);
    let boundary = formats::load_boundaries(&path)?;
    check_size(&path, (boundary.width(), boundary.height()), &k)?;

    let mut instances = Vec::with_capacity(m.instances.len());
    for (i, e) in m.instances.iter().enumerate() {
        let [u0, v0, u1, v1] = e.bbox;
        if u0 >= u1 || v0 >= v1 || u1 > k.width || v1 > k.height {
            return Err(IoError::format(manifest_path, format!("instance {i}: bbox {:?} out of bounds", e.bbox)));
        }
        let scores = AffordanceScores::new(e.scores.clone())
            .map_err(|err| IoError::format(manifest_path, format!("instance {i}: {err}")))?;
        instances.push(Instance {
            bbox: BBox::new(u0, v0, u1, v1),
            scores,
        });
    }

    Ok(Scene {
        layers: SceneLayers {
            intrinsics: k,
            depth_raw,
            mask,
            volume,
            normals,
            boundary,
        },
        depth_gt,
        instances,
    })
}

/// Writes every layer next to the manifest under fixed file names, then the manifest.
pub fn save_scene(scene: &Scene, manifest_path: &Path) -> IoResult<SceneManifest> {
    scene.layers.validate()?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let dir = if dir.as_os_str().is_empty() { Path::new(".") } else { dir };
    fs::create_dir_all(dir).map_err(|source| IoError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let name = |s: &str| PathBuf::from(s);
    let l = &scene.layers;

    save_intrinsics(&dir.join("intrinsics.toml"), &l.intrinsics)?;
    formats::save_depth(&dir.join("depth_raw.png"), &l.depth_raw)?;
    if let Some(gt) = &scene.depth_gt {
        formats::save_depth(&dir.join("depth_gt.png"), gt)?;
    }
    formats::save_mask(&dir.join("mask.png"), &l.mask)?;
    if let Some(v) = &l.volume {
        formats::save_volume(&dir.join("volume.png"), v)?;
    }
    formats::save_normals(&dir.join("normals.png"), &l.normals)?;
    formats::save_boundaries(&dir.join("boundaries.png"), &l.boundary)?;

    let manifest = SceneManifest {
        rgb: None,
        depth_raw: name("depth_raw.png"),
        depth_gt: scene.depth_gt.as_ref().map(|_| name("depth_gt.png")),
        affordance_mask: name("mask.png"),
        affordance_volume: l.volume.as_ref().map(|_| name("volume.png")),
        normals: name("normals.png"),
        boundaries: name("boundaries.png"),
        intrinsics: name("intrinsics.toml"),
        instances: scene
            .instances
            .iter()
            .map(|i| InstanceEntry {
                bbox: [i.bbox.u0, i.bbox.v0, i.bbox.u1, i.bbox.v1],
                scores: i.scores.as_slice().to_vec(),
            })
            .collect(),
    };
    write_text(manifest_path, &to_toml(&manifest))?;
    Ok(manifest)
}

