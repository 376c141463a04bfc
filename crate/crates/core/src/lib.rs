//! Motion-agnostic multi-object tracking.
//!
//! The crate covers the full tracking-by-detection loop for pre-computed
//! detections and appearance embeddings:
//!
//! * [`tracker`] links detections frame by frame with Expansion IoU and
//!   appearance cues, solving each stage as a linear assignment problem.
//! * [`refine`] post-processes the resulting tracklets offline, splitting
//!   identity-impure tracklets and merging fragments of the same identity.
//! * [`metrics`] scores a result against ground truth with HOTA and its
//!   sub-metrics plus CLEAR-style identity switches.
//! * [`simulate`] generates deterministic synthetic scenarios in the same
//!   file formats, so the whole chain can be exercised without a detector.

pub mod appearance;
pub mod assignment;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod refine;
pub mod simulate;
pub mod tracker;
pub mod tracklet;

pub use appearance::{cosine_distance, normalize, AppearanceConfig, Embedding, FeatureBank};
pub use assignment::{Assignment, CostMatrix};
pub use error::{Error, Result};
pub use geometry::{eiou, expand, iou, BoundingBox};
pub use metrics::{GroundTruth, MetricOptions, MetricReport};
pub use refine::RefineConfig;
pub use simulate::ScenarioConfig;
pub use tracker::{Detection, OnlineTracker, TrackerConfig};
pub use tracklet::{TrackRecord, TrackSet, Tracklet};
