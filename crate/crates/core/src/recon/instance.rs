use crate::affordance::{AffordanceMask, AffordanceVolume};
use crate::depth::{BoundaryMap, DepthImage, NormalMap};
use crate::{CameraIntrinsics, Error, Result};

/// Crop padding in pixels, so that observed anchors surround the object.
pub const DEFAULT_PAD: usize = 8;

/// Half-open pixel box `[u0, u1) × [v0, v1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BBox {
    pub u0: usize,
    pub v0: usize,
    pub u1: usize,
    pub v1: usize,
}

impl BBox {
    pub fn new(u0: usize, v0: usize, u1: usize, v1: usize) -> Self {
        BBox { u0, v0, u1, v1 }
    }

    pub fn width(&self) -> usize {
        self.u1.saturating_sub(self.u0)
    }

    pub fn height(&self) -> usize {
        self.v1.saturating_sub(self.v0)
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }
}

/// Full-image layers of one RGB-D frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneLayers {
    pub intrinsics: CameraIntrinsics,
    pub depth_raw: DepthImage,
    pub mask: AffordanceMask,
    pub volume: Option<AffordanceVolume>,
    pub normals: NormalMap,
    pub boundary: BoundaryMap,
}

impl SceneLayers {
    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.intrinsics.width, self.intrinsics.height);
        let sizes = [
            (self.depth_raw.width(), self.depth_raw.height()),
            (self.mask.width(), self.mask.height()),
            (self.normals.width(), self.normals.height()),
            (self.boundary.width(), self.boundary.height()),
        ];
        if sizes.iter().any(|&s| s != (w, h)) {
            return Err(Error::InvalidInput("scene layers differ in size"));
        }
        if let Some(v) = &self.volume {
            if (v.width(), v.height()) != (w, h) {
                return Err(Error::InvalidInput("affordance volume differs in size"));
            }
        }
        Ok(())
    }
}

/// One detected object: its crop window and the cropped layers.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneInstance {
    /// Crop window in full-image pixels.
    pub window: BBox,
    pub intrinsics: CameraIntrinsics,
    pub depth_raw: DepthImage,
    pub mask: AffordanceMask,
    pub volume: Option<AffordanceVolume>,
    pub normals: NormalMap,
    pub boundary: BoundaryMap,
}

impl SceneInstance {
    pub fn width(&self) -> usize {
        self.window.width()
    }

    pub fn height(&self) -> usize {
        self.window.height()
    }
}

/// Crops every layer to `bbox` grown by `pad` and clipped to the image.
pub fn crop_instance(layers: &SceneLayers, bbox: BBox, pad: usize) -> Result<SceneInstance> {
    layers.validate()?;
    let (w, h) = (layers.intrinsics.width, layers.intrinsics.height);
    if bbox.u0 >= bbox.u1.min(w) || bbox.v0 >= bbox.v1.min(h) {
        return Err(Error::InvalidInput("bounding box does not intersect the image"));
    }
    let window = BBox {
        u0: bbox.u0.saturating_sub(pad),
        v0: bbox.v0.saturating_sub(pad),
        u1: bbox.u1.saturating_add(pad).min(w),
        v1: bbox.v1.saturating_add(pad).min(h),
    };
    let (u0, v0, cw, ch) = (window.u0, window.v0, window.width(), window.height());
    Ok(SceneInstance {
        window,
        intrinsics: layers.intrinsics.cropped(u0, v0, cw, ch),
        depth_raw: layers.depth_raw.crop(u0, v0, cw, ch),
        mask: layers.mask.crop(u0, v0, cw, ch),
        volume: layers.volume.as_ref().map(|v| v.crop(u0, v0, cw, ch)),
        normals: layers.normals.crop(u0, v0, cw, ch),
        boundary: layers.boundary.crop(u0, v0, cw, ch),
    })
}

/// Raw depth with every object pixel (non-background label) invalidated.
pub fn mask_unreliable_depth(inst: &SceneInstance) -> DepthImage {
    let mut out = inst.depth_raw.clone();
    for p in inst.mask.labels().pixels() {
        if inst.mask.is_object(p) {
            out.invalidate(p);
        }
    }
    out
}
