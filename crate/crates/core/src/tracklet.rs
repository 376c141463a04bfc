//! Tracking results: tracklets and the per-sequence set that holds them.

use crate::appearance::Embedding;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackRecord {
    pub frame: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// One identity hypothesis: its boxes in frame order plus the appearance
/// embeddings banked along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub id: u32,
    pub records: Vec<TrackRecord>,
    /// Banked embeddings keyed by frame; a subset of the record frames.
    pub embeddings: Vec<(u32, Embedding)>,
}

impl Tracklet {
    pub fn new(
        id: u32,
        records: Vec<TrackRecord>,
        embeddings: Vec<(u32, Embedding)>,
    ) -> Result<Self> {
        let t = Tracklet {
            id,
            records,
            embeddings,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id == 0 {
            return Err(Error::Data("tracklet ids start at 1".into()));
        }
        if self.records.is_empty() {
            return Err(Error::Data(format!("tracklet {} has no records", self.id)));
        }
        if self.records.windows(2).any(|w| w[1].frame < w[0].frame) {
            return Err(Error::Data(format!(
                "tracklet {} records are not in frame order",
                self.id
            )));
        }
        if self.embeddings.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::Data(format!(
                "tracklet {} embeddings are not in frame order",
                self.id
            )));
        }
        for (frame, _) in &self.embeddings {
            if self
                .records
                .binary_search_by_key(frame, |r| r.frame)
                .is_err()
            {
                return Err(Error::Data(format!(
                    "tracklet {} has an embedding on frame {frame} without a record",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// For each record, the index of the embedding banked on its frame.
    /// Records and embeddings of equal frames are paired in order.
    pub fn embedding_slots(&self) -> Vec<Option<usize>> {
        let mut slots = vec![None; self.records.len()];
        let mut e = 0;
        for (ri, r) in self.records.iter().enumerate() {
            while e < self.embeddings.len() && self.embeddings[e].0 < r.frame {
                e += 1;
            }
            if e < self.embeddings.len() && self.embeddings[e].0 == r.frame {
                slots[ri] = Some(e);
                e += 1;
            }
        }
        slots
    }

    pub fn first_frame(&self) -> u32 {
        self.records[0].frame
    }

    pub fn last_frame(&self) -> u32 {
        self.records[self.records.len() - 1].frame
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A complete tracking result for one sequence, kept sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet {
    pub tracklets: Vec<Tracklet>,
}

impl TrackSet {
    pub fn new(mut tracklets: Vec<Tracklet>) -> Result<Self> {
        tracklets.sort_by_key(|t| t.id);
        if let Some(w) = tracklets.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Data(format!("duplicate tracklet id {}", w[0].id)));
        }
        for t in &tracklets {
            t.validate()?;
        }
        Ok(TrackSet { tracklets })
    }

    pub fn len(&self) -> usize {
        self.tracklets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracklets.is_empty()
    }

    pub fn record_count(&self) -> usize {
        self.tracklets.iter().map(Tracklet::len).sum()
    }

    pub fn max_id(&self) -> u32 {
        self.tracklets.iter().map(|t| t.id).max().unwrap_or(0)
    }

    pub fn get(&self, id: u32) -> Option<&Tracklet> {
        self.tracklets
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|i| &self.tracklets[i])
    }

    /// Embedding dimension, if any tracklet carries embeddings.
    pub fn embedding_dim(&self) -> Option<usize> {
        self.tracklets
            .iter()
            .flat_map(|t| t.embeddings.first())
            .map(|(_, e)| e.dim())
            .next()
    }
}
