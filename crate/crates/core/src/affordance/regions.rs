use alloc::vec::Vec;

use super::AffordanceMask;
use crate::components::{connected_components, Connectivity};
use crate::{Grid, Pixel};

/// Regions smaller than this many pixels are treated as speckle.
pub const DEFAULT_MIN_AREA: usize = 25;

/// A connected set of pixels sharing one affordance label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub class: u8,
    /// Row-major sorted.
    pub pixels: Vec<Pixel>,
    /// Pixels with at least one in-image 4-neighbour outside the region. Row-major sorted.
    pub boundary: Vec<Pixel>,
}

impl Region {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn contains(&self, p: &Pixel) -> bool {
        self.pixels.binary_search(p).is_ok()
    }

    /// Mean pixel position `(u, v)`.
    pub fn pixel_centroid(&self) -> (f64, f64) {
        let n = self.pixels.len() as f64;
        let (su, sv) = self
            .pixels
            .iter()
            .fold((0.0, 0.0), |(a, b), p| (a + p.u as f64, b + p.v as f64));
        (su / n, sv / n)
    }
}

/// Splits the mask into per-class connected regions, dropping those below `min_area`.
pub fn extract_regions(mask: &AffordanceMask, min_area: usize, connectivity: Connectivity) -> Vec<Region> {
    let labels = mask.labels();
    connected_components(labels, connectivity)
        .into_iter()
        .filter(|c| c.pixels.len() >= min_area.max(1))
        .map(|c| {
            let inside = |q: Pixel| c.pixels.binary_search(&q).is_ok();
            let boundary = c
                .pixels
                .iter()
                .copied()
                .filter(|&p| labels.neighbors4(p).any(|q| !inside(q)))
                .collect();
            Region {
                class: c.label,
                pixels: c.pixels,
                boundary,
            }
        })
        .collect()
}

/// Index of the owning region per pixel, `None` outside every region.
pub fn region_owner_map(regions: &[Region], width: usize, height: usize) -> Grid<Option<usize>> {
    let mut owner = Grid::filled(width, height, None);
    for (i, r) in regions.iter().enumerate() {
        for &p in &r.pixels {
            owner.set(p, Some(i));
        }
    }
    owner
}
