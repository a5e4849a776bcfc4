//! Ordering of region reconstruction steps over the region adjacency graph.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::affordance::{Continuity, RegionGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    GlobalOpt,
    PlaneFitThenGlobalOpt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AnchorSource {
    /// Observed raw depth around the regions (the first step).
    Observed,
    /// Depth already reconstructed in region `from`, reached over the shared edge.
    Neighbor { from: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Step {
    /// Region (graph node) indices solved together.
    pub regions: Vec<usize>,
    pub method: Method,
    pub anchor: AnchorSource,
    /// Set when the regions are not reachable from any contact-edge region.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReconPlan {
    pub steps: Vec<Step>,
}

impl ReconPlan {
    /// Step index solving `region`, if any.
    pub fn step_of(&self, region: usize) -> Option<usize> {
        self.steps.iter().position(|s| s.regions.contains(&region))
    }
}

/// Breadth-first plan from the contact-edge regions.
///
/// All contact-edge regions are solved jointly first. A region reached over a continuous edge
/// is solved by global optimisation anchored on its neighbour; over a discontinuous edge a rim
/// plane is fitted first. Regions not reachable from a contact region follow, flagged.
pub fn plan_steps(graph: &RegionGraph) -> ReconPlan {
    let n = graph.len();
    let mut visited = vec![false; n];
    let mut steps = Vec::new();
    let mut queue = VecDeque::new();

    let contact: Vec<usize> = (0..n).filter(|&i| graph.has_contact_edge[i]).collect();
    if !contact.is_empty() {
        for &i in &contact {
            visited[i] = true;
            queue.push_back(i);
        }
        steps.push(Step {
            regions: contact,
            method: Method::GlobalOpt,
            anchor: AnchorSource::Observed,
            flagged: false,
        });
    }
    let mut flagged = false;
    loop {
        while let Some(r) = queue.pop_front() {
            for e in graph.incident(r) {
                let nb = e.other(r);
                if visited[nb] {
                    continue;
                }
                visited[nb] = true;
                queue.push_back(nb);
                steps.push(Step {
                    regions: vec![nb],
                    method: match e.continuity {
                        Continuity::Continuous => Method::GlobalOpt,
                        Continuity::Discontinuous => Method::PlaneFitThenGlobalOpt,
                    },
                    anchor: AnchorSource::Neighbor { from: r },
                    flagged,
                });
            }
        }
        let Some(seed) = (0..n).find(|&i| !visited[i]) else { break };
        flagged = true;
        visited[seed] = true;
        queue.push_back(seed);
        steps.push(Step {
            regions: vec![seed],
            method: Method::GlobalOpt,
            anchor: AnchorSource::Observed,
            flagged: true,
        });
    }
    ReconPlan { steps }
}
