use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::instance::{mask_unreliable_depth, BBox, SceneInstance, SceneLayers};
use super::plan::{plan_steps, AnchorSource, Method, ReconPlan};
use super::crop_instance;
use crate::affordance::{build_region_graph, extract_regions, GraphConfig, RegionGraph, DEFAULT_MIN_AREA};
use crate::depth::{
    assemble_system, solve, Anchors, BoundaryWeighting, DepthImage, EnergyWeights, SolveReport, SolverConfig, Term,
};
use crate::math::Vec3;
use crate::plane::{
    ransac_plane, ransac_plane_parallel, rim_depth, DEFAULT_INLIER_THRESHOLD, DEFAULT_RANSAC_ITERATIONS,
};
use crate::{backproject, Connectivity, Error, Grid, Pixel, Plane, Point3, Result};

/// Normal rows lighter than this fraction of `lambda_n` do not count as links when deciding
/// whether a pixel is tied to known depth.
const WEAK_NORMAL_WEIGHT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconConfig {
    pub weights: EnergyWeights,
    pub weighting: BoundaryWeighting,
    pub solver: SolverConfig,
    pub min_area: usize,
    pub connectivity: Connectivity,
    pub graph: GraphConfig,
    pub ransac_iterations: usize,
    /// RANSAC inlier distance, meters.
    pub inlier_threshold: f64,
    pub seed: u64,
    /// Constrain rim planes to be parallel to the table.
    pub table_parallel: bool,
    /// Known table normal; estimated from the background when `None`.
    pub table_normal: Option<Vec3>,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            weights: EnergyWeights::default(),
            weighting: BoundaryWeighting::default(),
            solver: SolverConfig::default(),
            min_area: DEFAULT_MIN_AREA,
            connectivity: Connectivity::Four,
            graph: GraphConfig::default(),
            ransac_iterations: DEFAULT_RANSAC_ITERATIONS,
            inlier_threshold: DEFAULT_INLIER_THRESHOLD,
            seed: 0,
            table_parallel: true,
            table_normal: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StepDiagnostics {
    /// Graph nodes solved; empty for the baseline and the speckle clean-up.
    pub regions: Vec<usize>,
    pub classes: Vec<u8>,
    pub method: Method,
    pub flagged: bool,
    pub unknowns: usize,
    pub underdetermined: bool,
    /// Pixels tied to known depth only through smoothness, left for the final clean-up.
    pub deferred: usize,
    pub rim_plane: Option<Plane>,
    pub plane_inliers: usize,
    pub rim_anchors: usize,
    pub report: Option<SolveReport>,
    pub note: Option<String>,
}

impl StepDiagnostics {
    fn new(regions: Vec<usize>, classes: Vec<u8>, method: Method, flagged: bool) -> Self {
        StepDiagnostics {
            regions,
            classes,
            method,
            flagged,
            unknowns: 0,
            underdetermined: false,
            deferred: 0,
            rim_plane: None,
            plane_inliers: 0,
            rim_anchors: 0,
            report: None,
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    /// Crop-sized depth: observed background, reconstructed object pixels, failures invalid.
    pub depth: DepthImage,
    /// Object pixels left without depth.
    pub failed: Vec<Pixel>,
    pub graph: Option<RegionGraph>,
    pub plan: ReconPlan,
    pub steps: Vec<StepDiagnostics>,
    pub table_normal: Option<Vec3>,
}

fn object_pixels(inst: &SceneInstance) -> Vec<Pixel> {
    inst.mask.labels().pixels().filter(|&p| inst.mask.is_object(p)).collect()
}

fn failed_pixels(inst: &SceneInstance, depth: &DepthImage) -> Vec<Pixel> {
    object_pixels(inst).into_iter().filter(|&p| !depth.is_valid(p)).collect()
}

/// Solves the pixels of `domain` in place, recording the outcome in `diag`.
///
/// With `defer_weak`, solved pixels not tied to known depth by data or normal rows are
/// invalidated again and returned.
fn solve_domain(
    inst: &SceneInstance,
    current: &mut DepthImage,
    domain: &[Pixel],
    cfg: &ReconConfig,
    defer_weak: bool,
    diag: &mut StepDiagnostics,
) -> Vec<Pixel> {
    let mut mask = Grid::filled(inst.width(), inst.height(), false);
    for &p in domain {
        mask.set(p, true);
    }
    let system = assemble_system(
        current,
        &mask,
        &inst.normals,
        &inst.boundary,
        &inst.intrinsics,
        &cfg.weights,
        cfg.weighting,
        Anchors::AllObserved,
    );
    let system = match system {
        Ok(s) => s,
        Err(e) => {
            for &p in domain {
                current.invalidate(p);
            }
            diag.note = Some(alloc::format!("solve skipped: {e}"));
            return Vec::new();
        }
    };
    diag.unknowns = system.num_unknowns();
    diag.underdetermined = system.is_underdetermined();
    let (out, report) = solve(&system, current, &cfg.solver);
    *current = out;
    diag.report = Some(report);
    if !defer_weak {
        return Vec::new();
    }
    let min_normal = WEAK_NORMAL_WEIGHT * cfg.weights.lambda_n;
    let tied = system.anchored_unknowns(|r| match r.term {
        Term::Data => true,
        Term::Normal => r.weight >= min_normal,
        Term::Smoothness => false,
    });
    let deferred: Vec<Pixel> = system
        .unknowns()
        .iter()
        .zip(tied)
        .filter(|(_, t)| !t)
        .map(|(p, _)| *p)
        .collect();
    for &p in &deferred {
        current.invalidate(p);
    }
    diag.deferred = deferred.len();
    deferred
}

fn backproject_all(pixels: impl IntoIterator<Item = Pixel>, depth: &DepthImage, inst: &SceneInstance) -> Vec<Point3> {
    pixels
        .into_iter()
        .filter_map(|p| depth.get(p).and_then(|d| backproject(p, d, &inst.intrinsics).ok()))
        .collect()
}

/// Table normal from the observed background of the crop.
fn estimate_table_normal(inst: &SceneInstance, observed: &DepthImage, cfg: &ReconConfig) -> Option<Vec3> {
    let bg = inst.mask.labels().pixels().filter(|&p| !inst.mask.is_object(p));
    let points = backproject_all(bg, observed, inst);
    ransac_plane(&points, cfg.inlier_threshold, cfg.ransac_iterations, cfg.seed)
        .ok()
        .map(|r| r.plane.normal)
}

/// Target-region pixels given the rim-plane depth: boundary pixels facing the background, and
/// shared-edge pixels whose pair is not an occlusion. Falls back to the whole boundary.
fn rim_pixels(inst: &SceneInstance, graph: &RegionGraph, from: usize, target: usize) -> Vec<Pixel> {
    let region = &graph.nodes[target];
    let labels = inst.mask.labels();
    let mut out: Vec<Pixel> = region
        .boundary
        .iter()
        .copied()
        .filter(|&p| labels.neighbors4(p).any(|q| !inst.mask.is_object(q)))
        .collect();
    if let Some(edge) = graph.edge(from, target) {
        for (q, p) in edge.pairs_from(from) {
            if inst.boundary.occlusion(p).max(inst.boundary.occlusion(q)) < 0.5 {
                out.push(p);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        out = region.boundary.clone();
    }
    out
}

/// Fits the rim plane on the reconstructed side of the shared edge and writes its depth into
/// `current` at the target's rim pixels. Returns `false` when no plane could be fitted.
fn anchor_on_rim_plane(
    inst: &SceneInstance,
    graph: &RegionGraph,
    from: usize,
    target: usize,
    table_normal: Option<Vec3>,
    current: &mut DepthImage,
    cfg: &ReconConfig,
    diag: &mut StepDiagnostics,
) -> bool {
    let Some(edge) = graph.edge(from, target) else {
        diag.note = Some("no shared edge with the anchor region".into());
        return false;
    };
    // The discontinuous part of the edge; the whole edge if it has too few pixels.
    let jump = |&(q, p): &(Pixel, Pixel)| inst.boundary.occlusion(p).max(inst.boundary.occlusion(q)) >= 0.5;
    let mut source = backproject_all(edge.pairs_from(from).filter(jump).map(|(q, _)| q), current, inst);
    if source.len() < 3 {
        source = backproject_all(edge.pairs_from(from).map(|(q, _)| q), current, inst);
    }
    let fit = match (cfg.table_parallel, table_normal) {
        (true, Some(n)) => {
            ransac_plane_parallel(&source, n, cfg.inlier_threshold, cfg.ransac_iterations, cfg.seed)
        }
        _ => ransac_plane(&source, cfg.inlier_threshold, cfg.ransac_iterations, cfg.seed),
    };
    let fit = match fit {
        Ok(f) => f,
        Err(e) => {
            diag.note = Some(alloc::format!("rim plane fit failed: {e}"));
            return false;
        }
    };
    let pixels = rim_pixels(inst, graph, from, target);
    let (rim, _) = rim_depth(&pixels, &fit.plane, &inst.intrinsics);
    let mut anchored = 0;
    for p in pixels {
        if let Some(d) = rim.get(p) {
            current.set(p, d);
            anchored += 1;
        }
    }
    diag.rim_plane = Some(fit.plane);
    diag.plane_inliers = fit.inliers.len();
    diag.rim_anchors = anchored;
    true
}

/// Affordance-guided multi-step reconstruction of one instance.
pub fn reconstruct_instance(inst: &SceneInstance, cfg: &ReconConfig) -> Result<InstanceResult> {
    cfg.weights.validate()?;
    let observed = mask_unreliable_depth(inst);
    let regions = extract_regions(&inst.mask, cfg.min_area, cfg.connectivity);
    let graph = build_region_graph(regions, &inst.boundary, &cfg.graph)?;
    let plan = plan_steps(&graph);

    let mut current = observed.clone();
    let mut steps = Vec::with_capacity(plan.steps.len() + 1);
    let mut deferred = Vec::new();
    let mut table_normal = None;
    let needs_table = cfg.table_parallel && plan.steps.iter().any(|s| s.method == Method::PlaneFitThenGlobalOpt);
    if needs_table {
        table_normal = cfg.table_normal.or_else(|| estimate_table_normal(inst, &observed, cfg));
    }

    let last = plan.steps.len().saturating_sub(1);
    for (i, step) in plan.steps.iter().enumerate() {
        let classes = step.regions.iter().map(|&r| graph.nodes[r].class).collect();
        let mut diag = StepDiagnostics::new(step.regions.clone(), classes, step.method, step.flagged);
        if let (Method::PlaneFitThenGlobalOpt, AnchorSource::Neighbor { from }) = (step.method, step.anchor) {
            anchor_on_rim_plane(inst, &graph, from, step.regions[0], table_normal, &mut current, cfg, &mut diag);
        }
        let domain: Vec<Pixel> = step
            .regions
            .iter()
            .flat_map(|&r| graph.nodes[r].pixels.iter().copied())
            .collect();
        deferred.extend(solve_domain(inst, &mut current, &domain, cfg, i < last, &mut diag));
        steps.push(diag);
    }

    // Object pixels in regions dropped as too small, and pixels no step could tie down.
    let mut covered = Grid::filled(inst.width(), inst.height(), false);
    for r in &graph.nodes {
        for &p in &r.pixels {
            covered.set(p, true);
        }
    }
    let mut rest: Vec<Pixel> = object_pixels(inst).into_iter().filter(|&p| !*covered.get(p)).collect();
    rest.extend(deferred);
    rest.sort_unstable();
    if !rest.is_empty() {
        let mut diag = StepDiagnostics::new(Vec::new(), Vec::new(), Method::GlobalOpt, false);
        diag.note = Some("clean-up".into());
        solve_domain(inst, &mut current, &rest, cfg, false, &mut diag);
        steps.push(diag);
    }

    let failed = failed_pixels(inst, &current);
    Ok(InstanceResult {
        depth: current,
        failed,
        graph: Some(graph),
        plan,
        steps,
        table_normal,
    })
}

/// Single global optimisation over every object pixel, anchored on the observed background.
pub fn single_step_baseline(inst: &SceneInstance, cfg: &ReconConfig) -> Result<InstanceResult> {
    cfg.weights.validate()?;
    let mut current = mask_unreliable_depth(inst);
    let domain = object_pixels(inst);
    let mut diag = StepDiagnostics::new(Vec::new(), Vec::new(), Method::GlobalOpt, false);
    if !domain.is_empty() {
        solve_domain(inst, &mut current, &domain, cfg, false, &mut diag);
    }
    let failed = failed_pixels(inst, &current);
    Ok(InstanceResult {
        depth: current,
        failed,
        graph: None,
        plan: ReconPlan::default(),
        steps: vec![diag],
        table_normal: None,
    })
}

/// Reconstructs every instance and merges the crops into a full-image depth map.
///
/// Object pixels start invalid; each instance writes the depths it reconstructed, in order,
/// so later instances win where crops overlap.
pub fn reconstruct_scene(
    layers: &SceneLayers,
    instances: &[BBox],
    pad: usize,
    cfg: &ReconConfig,
    baseline: bool,
) -> Result<(DepthImage, Vec<InstanceResult>)> {
    layers.validate()?;
    let mut full = layers.depth_raw.clone();
    for p in layers.mask.labels().pixels() {
        if layers.mask.is_object(p) {
            full.invalidate(p);
        }
    }
    let mut results = Vec::with_capacity(instances.len());
    for &bbox in instances {
        let inst = crop_instance(layers, bbox, pad)?;
        let res = if baseline {
            single_step_baseline(&inst, cfg)?
        } else {
            reconstruct_instance(&inst, cfg)?
        };
        for p in object_pixels(&inst) {
            if let Some(d) = res.depth.get(p) {
                full.set(Pixel::new(p.u + inst.window.u0, p.v + inst.window.v0), d);
            }
        }
        results.push(res);
    }
    if instances.is_empty() && layers.mask.labels().as_slice().iter().any(|&m| m != 0) {
        return Err(Error::InvalidInput("object pixels present but no instance given"));
    }
    Ok((full, results))
}
