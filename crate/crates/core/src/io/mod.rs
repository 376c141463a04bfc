//! On-disk formats: MOT text files, the `EMB1` embedding sidecar and the
//! JSON run configuration.

mod config;
mod embeddings;
mod mot;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub use config::{parse_config, read_config, PipelineConfig};
pub use embeddings::{
    decode_embeddings, encode_embeddings, read_embeddings, read_track_embeddings, write_embeddings,
    write_track_embeddings, EmbeddingTable, EMB_MAGIC, EMB_VERSION,
};
pub use mot::{
    format_detections, format_ground_truth, format_tracks, parse_detections, parse_ground_truth,
    parse_tracks, read_detections, read_ground_truth, read_tracks, read_tracks_with_embeddings,
    write_detections, write_ground_truth, write_tracks, TrackLine,
};

use crate::appearance::Embedding;
use crate::error::{Error, Result};
use crate::tracker::Detection;

/// Detections grouped by frame, in ascending frame order.
pub type FrameDetections = BTreeMap<u32, Vec<Detection>>;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMeta {
    /// Highest frame index referenced by any detection (0 when empty).
    pub frame_count: u32,
    pub dim: usize,
    pub detections_path: Option<PathBuf>,
    pub embeddings_path: Option<PathBuf>,
}

/// Everything the online tracker consumes for one sequence.
#[derive(Debug, Clone)]
pub struct SequenceBundle {
    pub detections: FrameDetections,
    /// Row `i` belongs to the detection with `embedding_index == i`.
    pub embeddings: Vec<Embedding>,
    pub meta: SequenceMeta,
}

impl SequenceBundle {
    /// Pairs detections with their embedding rows, verifying the positional
    /// correspondence before anything else runs.
    pub fn new(detections: FrameDetections, embeddings: Vec<Embedding>) -> Result<Self> {
        let count: usize = detections.values().map(Vec::len).sum();
        if count != embeddings.len() {
            return Err(Error::Consistency(format!(
                "{count} detections but {} embedding rows",
                embeddings.len()
            )));
        }
        let dim = embeddings.first().map_or(0, Embedding::dim);
        if let Some(bad) = embeddings.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
            });
        }
        for d in detections.values().flatten() {
            if d.embedding_index >= count {
                return Err(Error::Data(format!(
                    "embedding index {} out of range for {count} rows",
                    d.embedding_index
                )));
            }
        }
        Ok(SequenceBundle {
            meta: SequenceMeta {
                frame_count: detections.keys().next_back().copied().unwrap_or(0),
                dim,
                detections_path: None,
                embeddings_path: None,
            },
            detections,
            embeddings,
        })
    }

    pub fn load(detections: &Path, embeddings: &Path) -> Result<Self> {
        let dets = read_detections(detections)?;
        let count = dets.values().map(Vec::len).sum();
        let table = read_embeddings(embeddings, count)?;
        let mut bundle = SequenceBundle::new(dets, table.rows)?;
        bundle.meta.detections_path = Some(detections.to_path_buf());
        bundle.meta.embeddings_path = Some(embeddings.to_path_buf());
        Ok(bundle)
    }

    pub fn detection_count(&self) -> usize {
        self.embeddings.len()
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
