//! Offline tracklet refinement: a splitter that separates identities mixed
//! into one tracklet, and a connector that merges fragments of one identity.

mod connector;
mod dbscan;
mod splitter;

use serde::{Deserialize, Serialize};

pub use connector::{compatible, connect_tracklets, merge_pair, MergeCriterion, MergeEvent};
pub use dbscan::{dbscan, NOISE};
pub use splitter::split_tracklet;

use crate::error::{Error, Result};
use crate::tracklet::TrackSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    /// Neighborhood radius for the splitter, in cosine distance.
    pub eps: f64,
    pub min_samples: usize,
    /// Largest average appearance distance (on `[0, 2]`) for a merge.
    pub merge_threshold: f64,
    /// Frames two merged spans may share.
    pub max_temporal_overlap: u32,
    /// Keep merging until this many tracklets remain, ignoring the threshold.
    pub target_count: Option<usize>,
    pub enable_split: bool,
    /// Fastest plausible motion across a gap, in pixels per frame.
    pub max_speed: f64,
    /// Embeddings sampled per tracklet when averaging distances.
    pub max_history: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            eps: 0.5,
            min_samples: 7,
            merge_threshold: 0.4,
            max_temporal_overlap: 0,
            target_count: None,
            enable_split: true,
            max_speed: 50.0,
            max_history: 30,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return bad(format!("refine.eps must be > 0, got {}", self.eps));
        }
        if self.min_samples == 0 {
            return bad("refine.min_samples must be >= 1".into());
        }
        if !(self.merge_threshold.is_finite() && self.merge_threshold > 0.0) {
            return bad(format!(
                "refine.merge_threshold must be > 0, got {}",
                self.merge_threshold
            ));
        }
        if !(self.max_speed.is_finite() && self.max_speed >= 0.0) {
            return bad(format!(
                "refine.max_speed must be >= 0, got {}",
                self.max_speed
            ));
        }
        if self.max_history == 0 {
            return bad("refine.max_history must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub tracks: TrackSet,
    pub input_count: usize,
    pub after_split: usize,
    pub after_connect: usize,
    pub merges: Vec<MergeEvent>,
}

/// Splits every tracklet (when enabled), then connects the union.
pub fn refine(ts: &TrackSet, config: &RefineConfig) -> Result<RefineOutcome> {
    config.validate()?;
    let mut next_id = ts.max_id() + 1;
    let mut pieces = Vec::with_capacity(ts.len());
    for t in &ts.tracklets {
        if config.enable_split {
            pieces.extend(split_tracklet(t, config, &mut next_id)?);
        } else {
            pieces.push(t.clone());
        }
    }
    let after_split = pieces.len();
    let (connected, merges) = connect_tracklets(pieces, config)?;
    let tracks = TrackSet::new(connected)?;
    Ok(RefineOutcome {
        input_count: ts.len(),
        after_split,
        after_connect: tracks.len(),
        tracks,
        merges,
    })
}
