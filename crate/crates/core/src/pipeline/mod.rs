//! The example server: scene sampling, simulation, delay-energy
//! normalization, feature extraction and per-record output.
//!
//! Every example is a pure function of `(config, manifest, seed, index)`.
//! Each index gets its own ChaCha stream, so records do not depend on how
//! indices are split across workers.

pub mod config;
pub mod example;
pub mod manifest;
pub mod record;
pub mod scene;
pub mod server;
pub mod verify;

pub use config::{AugmentationConfig, CurriculumConfig};
pub use example::{make_example, make_example_with_signals, ExampleOutput, NamedAudio, TrainingExample};
pub use manifest::Manifest;
pub use record::RecordMeta;
pub use scene::{example_rng, sample_scene, SceneDraw};
pub use server::{run_server, ServerError, ServerOptions, ServerReport};
pub use verify::{verify_records, VerifyOptions, VerifyReport};
