//! Automated camera operator and director.
//!
//! The crate turns per-frame person detections from one or more video
//! streams into smooth virtual-camera framings and a directed cut
//! sequence, and provides the metrics used to compare an automatic edit
//! against a human one.
//!
//! Pipeline, in order:
//!
//! 1. [`ingest`] loads detection files and applies region-of-interest masks
//!    ([`sim`] generates synthetic detections with ground truth).
//! 2. [`tracking`] links detections into identity-consistent traces.
//! 3. [`smoothing`] turns traces into camera tracks (cubic splines offline,
//!    delayed FIFO smoothing online).
//! 4. [`director`] picks one camera track per frame and emits rendering
//!    instructions; [`reid`] clusters tracks across cameras into identities.
//! 5. [`projection`] renders instructions from equirectangular sources.
//! 6. [`evaluation`] compares cut arrays.
//!
//! Data-parallel loops (per-pixel remapping, per-stream tracking, feature
//! extraction) run on rayon when the `parallel` feature is enabled, which
//! it is by default.

pub mod director;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod projection;
pub mod reid;
pub mod sim;
pub mod smoothing;
pub mod tracking;

pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{
    BoundingBox, CameraType, Detection, DirectorConfig, FrameGeometry, Rect,
    RenderingInstruction, ScoringType, StreamConfig, ZoomType,
};
