//! Region adjacency graph over affordance regions.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{region_owner_map, Affordance, Region};
use crate::depth::BoundaryMap;
use crate::{Error, Pixel, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Continuity {
    Continuous,
    Discontinuous,
}

/// How a shared boundary between two regions is classified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuityPolicy {
    /// Fixed table over affordance pairs; pairs outside the table use the boundary rule.
    Lookup,
    /// Discontinuous iff at least `min_fraction` of the shared pixel pairs have occlusion
    /// probability `>= occlusion_threshold` on either side.
    Boundary {
        occlusion_threshold: f64,
        min_fraction: f64,
    },
}

impl Default for ContinuityPolicy {
    fn default() -> Self {
        ContinuityPolicy::Lookup
    }
}

impl ContinuityPolicy {
    pub const DEFAULT_BOUNDARY: ContinuityPolicy = ContinuityPolicy::Boundary {
        occlusion_threshold: 0.5,
        min_fraction: 0.5,
    };

    /// Affordance-pair table: only wrap-grasp/support is depth-continuous.
    pub fn lookup(a: u8, b: u8) -> Option<Continuity> {
        use Affordance::*;
        let (a, b) = (Affordance::from_label(a)?, Affordance::from_label(b)?);
        let pair = if a <= b { (a, b) } else { (b, a) };
        match pair {
            (Contain, WrapGrasp) | (Contain, Support) => Some(Continuity::Discontinuous),
            (WrapGrasp, Support) => Some(Continuity::Continuous),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    pub contact_threshold: f64,
    pub min_contact_pixels: usize,
    pub continuity: ContinuityPolicy,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            contact_threshold: 0.5,
            min_contact_pixels: 5,
            continuity: ContinuityPolicy::Lookup,
        }
    }
}

/// Shared boundary between regions `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionEdge {
    pub a: usize,
    pub b: usize,
    /// 4-adjacent pixel pairs `(pixel in a, pixel in b)`, in scan order.
    pub pairs: Vec<(Pixel, Pixel)>,
    pub continuity: Continuity,
}

impl RegionEdge {
    /// The pair oriented as `(pixel in region, pixel in the other region)`.
    pub fn pairs_from(&self, region: usize) -> impl Iterator<Item = (Pixel, Pixel)> + '_ {
        let flip = region == self.b;
        self.pairs.iter().map(move |&(p, q)| if flip { (q, p) } else { (p, q) })
    }

    pub fn other(&self, region: usize) -> usize {
        if region == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionGraph {
    pub nodes: Vec<Region>,
    pub has_contact_edge: Vec<bool>,
    /// Sorted by `(a, b)`.
    pub edges: Vec<RegionEdge>,
}

impl RegionGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&RegionEdge> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edges.iter().find(|e| e.a == a && e.b == b)
    }

    /// Edges incident to `node`, in `(a, b)` order.
    pub fn incident(&self, node: usize) -> impl Iterator<Item = &RegionEdge> {
        self.edges.iter().filter(move |e| e.a == node || e.b == node)
    }

    /// Graph from explicit parts, with edge continuity given directly.
    pub fn from_parts(nodes: Vec<Region>, has_contact_edge: Vec<bool>, mut edges: Vec<RegionEdge>) -> Result<Self> {
        if has_contact_edge.len() != nodes.len() {
            return Err(Error::Shape {
                expected: nodes.len(),
                got: has_contact_edge.len(),
            });
        }
        for e in edges.iter_mut() {
            if e.a == e.b || e.a.max(e.b) >= nodes.len() {
                return Err(Error::InvalidInput("edge refers to a missing node or is a self-loop"));
            }
            if e.a > e.b {
                core::mem::swap(&mut e.a, &mut e.b);
                e.pairs.iter_mut().for_each(|(p, q)| core::mem::swap(p, q));
            }
        }
        edges.sort_by_key(|e| (e.a, e.b));
        if edges.windows(2).any(|w| (w[0].a, w[0].b) == (w[1].a, w[1].b)) {
            return Err(Error::InvalidInput("duplicate edge"));
        }
        Ok(RegionGraph {
            nodes,
            has_contact_edge,
            edges,
        })
    }
}

/// Builds the adjacency graph of `regions` and tags contact edges and edge continuity.
pub fn build_region_graph(regions: Vec<Region>, boundary: &BoundaryMap, cfg: &GraphConfig) -> Result<RegionGraph> {
    let (w, h) = (boundary.width(), boundary.height());
    let owner = region_owner_map(&regions, w, h);
    let total: usize = regions.iter().map(|r| r.pixels.len()).sum();
    let distinct = owner.as_slice().iter().filter(|o| o.is_some()).count();
    if total != distinct {
        return Err(Error::InvalidInput("regions overlap"));
    }

    let mut pairs: BTreeMap<(usize, usize), Vec<(Pixel, Pixel)>> = BTreeMap::new();
    for v in 0..h {
        for u in 0..w {
            let p = Pixel::new(u, v);
            let Some(rp) = *owner.get(p) else { continue };
            for q in [Pixel::new(u + 1, v), Pixel::new(u, v + 1)] {
                if q.u >= w || q.v >= h {
                    continue;
                }
                if let Some(rq) = *owner.get(q) {
                    if rq != rp {
                        let (key, pair) = if rp < rq { ((rp, rq), (p, q)) } else { ((rq, rp), (q, p)) };
                        pairs.entry(key).or_default().push(pair);
                    }
                }
            }
        }
    }

    let has_contact_edge = regions
        .iter()
        .map(|r| {
            r.boundary
                .iter()
                .filter(|&&p| boundary.contact(p) >= cfg.contact_threshold)
                .count()
                >= cfg.min_contact_pixels
        })
        .collect();

    let boundary_rule = |pairs: &[(Pixel, Pixel)], thr: f64, frac: f64| {
        let occluded = pairs
            .iter()
            .filter(|(p, q)| boundary.occlusion(*p).max(boundary.occlusion(*q)) >= thr)
            .count();
        if occluded as f64 >= frac * pairs.len() as f64 {
            Continuity::Discontinuous
        } else {
            Continuity::Continuous
        }
    };

    let edges = pairs
        .into_iter()
        .map(|((a, b), pairs)| {
            let continuity = match cfg.continuity {
                ContinuityPolicy::Lookup => ContinuityPolicy::lookup(regions[a].class, regions[b].class)
                    .unwrap_or_else(|| boundary_rule(&pairs, 0.5, 0.5)),
                ContinuityPolicy::Boundary {
                    occlusion_threshold,
                    min_fraction,
                } => boundary_rule(&pairs, occlusion_threshold, min_fraction),
            };
            RegionEdge {
                a,
                b,
                pairs,
                continuity,
            }
        })
        .collect();

    Ok(RegionGraph {
        nodes: regions,
        has_contact_edge,
        edges,
    })
}
