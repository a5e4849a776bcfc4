//! File formats, synthetic cup scenes, reports and the command-line front end for
//! [`affrecon_core`].

pub mod error;
pub mod formats;
pub mod report;
pub mod scene;
pub mod synth;

pub use affrecon_core as core;
pub use error::{IoError, IoResult};
pub use scene::{load_scene, save_scene, Instance, Scene, SceneManifest};
pub use synth::{gen_synthetic, SynthCupSpec};
