//! Per-instance multi-step reconstruction, the single-step baseline and depth metrics.

mod instance;
mod metrics;
mod pipeline;
mod plan;

pub use instance::{crop_instance, mask_unreliable_depth, BBox, SceneInstance, SceneLayers, DEFAULT_PAD};
pub use metrics::{evaluate_depth, DepthMetrics};
pub use pipeline::{
    reconstruct_instance, reconstruct_scene, single_step_baseline, InstanceResult, ReconConfig, StepDiagnostics,
};
pub use plan::{plan_steps, AnchorSource, Method, ReconPlan, Step};
