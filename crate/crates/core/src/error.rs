use thiserror::Error;

/// Errors raised by the reconstruction library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("viewing ray is parallel to the plane")]
    RayParallel,
    #[error("plane lies behind the camera")]
    PlaneBehindCamera,
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("degenerate frame: z axis is parallel to the reference up vector")]
    DegenerateFrame,
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
