//! Affordance maps: fusion with classification scores, losses, the weighted F-measure,
//! region extraction and the region adjacency graph.

mod fmeasure;
mod fusion;
mod graph;
mod loss;
mod regions;

use alloc::vec::Vec;

use crate::{Error, Grid, Result};

pub use fmeasure::{weighted_f_measure, WeightedF, WeightedFConfig};
pub use fusion::{fuse_affordance, softmax_mask};
pub use graph::{build_region_graph, Continuity, ContinuityPolicy, GraphConfig, RegionEdge, RegionGraph};
pub use loss::{loss_aff_c, loss_aff_m, PROB_EPS};
pub use regions::{extract_regions, region_owner_map, Region, DEFAULT_MIN_AREA};

/// Number of affordance classes (background excluded).
pub const NUM_CLASSES: usize = 3;

/// Affordance labels, in channel order. Background is channel 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[repr(u8)]
pub enum Affordance {
    Background = 0,
    Contain = 1,
    WrapGrasp = 2,
    Support = 3,
}

impl Affordance {
    pub const CLASSES: [Affordance; NUM_CLASSES] = [Affordance::Contain, Affordance::WrapGrasp, Affordance::Support];

    pub fn from_label(label: u8) -> Option<Affordance> {
        match label {
            0 => Some(Affordance::Background),
            1 => Some(Affordance::Contain),
            2 => Some(Affordance::WrapGrasp),
            3 => Some(Affordance::Support),
            _ => None,
        }
    }

    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Affordance::Background => "background",
            Affordance::Contain => "contain",
            Affordance::WrapGrasp => "wrap-grasp",
            Affordance::Support => "support",
        }
    }
}

/// Per-class classification probabilities, ordered (contain, wrap-grasp, support).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffordanceScores(Vec<f64>);

impl AffordanceScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidInput("affordance scores must lie in [0, 1]"));
        }
        Ok(AffordanceScores(scores))
    }

    pub fn ones(n: usize) -> Self {
        AffordanceScores(alloc::vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `N + 1` per-pixel non-negative channels; channel 0 is background.
#[derive(Debug, Clone, PartialEq)]
pub struct AffordanceVolume {
    channels: Vec<Grid<f64>>,
    normalized: bool,
}

impl AffordanceVolume {
    pub fn new(channels: Vec<Grid<f64>>) -> Result<Self> {
        Self::check(&channels)?;
        if channels.iter().any(|c| c.as_slice().iter().any(|v| *v < 0.0)) {
            return Err(Error::InvalidInput("affordance volume values must be non-negative"));
        }
        Ok(AffordanceVolume {
            channels,
            normalized: false,
        })
    }

    /// Raw network logits: finite, any sign. Only meaningful as input to [`softmax_mask`].
    pub fn from_logits(channels: Vec<Grid<f64>>) -> Result<Self> {
        Self::check(&channels)?;
        Ok(AffordanceVolume {
            channels,
            normalized: false,
        })
    }

    /// Channels that already sum to one per pixel (within 1e-6).
    pub fn normalized(channels: Vec<Grid<f64>>) -> Result<Self> {
        let mut v = Self::new(channels)?;
        let (w, h) = (v.width(), v.height());
        for i in 0..w * h {
            let s: f64 = v.channels.iter().map(|c| c.as_slice()[i]).sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput("normalized volume channels must sum to one"));
            }
        }
        v.normalized = true;
        Ok(v)
    }

    fn check(channels: &[Grid<f64>]) -> Result<()> {
        let first = channels
            .first()
            .ok_or(Error::InvalidInput("affordance volume needs at least one channel"))?;
        if channels.iter().any(|c| !c.same_size(first)) {
            return Err(Error::InvalidInput("affordance volume channels differ in size"));
        }
        if channels.iter().any(|c| c.as_slice().iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("affordance volume values must be finite"));
        }
        Ok(())
    }

    pub(crate) fn from_parts_unchecked(channels: Vec<Grid<f64>>, normalized: bool) -> Self {
        AffordanceVolume { channels, normalized }
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, c: usize) -> &Grid<f64> {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[Grid<f64>] {
        &self.channels
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    pub fn crop(&self, u0: usize, v0: usize, w: usize, h: usize) -> AffordanceVolume {
        AffordanceVolume {
            channels: self.channels.iter().map(|c| c.crop(u0, v0, w, h)).collect(),
            normalized: self.normalized,
        }
    }
}

/// Hard per-pixel affordance labels in `0..=NUM_CLASSES`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffordanceMask(Grid<u8>);

impl AffordanceMask {
    pub fn new(labels: Grid<u8>) -> Result<Self> {
        if labels.as_slice().iter().any(|&l| l as usize > NUM_CLASSES) {
            return Err(Error::InvalidInput("affordance label out of range"));
        }
        Ok(AffordanceMask(labels))
    }

    pub fn labels(&self) -> &Grid<u8> {
        &self.0
    }

    pub fn into_labels(self) -> Grid<u8> {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn is_object(&self, p: crate::Pixel) -> bool {
        *self.0.get(p) != 0
    }

    pub fn crop(&self, u0: usize, v0: usize, w: usize, h: usize) -> AffordanceMask {
        AffordanceMask(self.0.crop(u0, v0, w, h))
    }
}
