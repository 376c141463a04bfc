//! Frame-by-frame, motion-agnostic online tracker.
//!
//! Each frame runs a fixed cascade:
//!
//! 1. Detections are split into a high-confidence tier (`conf >= conf_high`)
//!    and a low tier (`conf_low <= conf < conf_high`); the rest is dropped.
//! 2. For each expansion scale in the schedule, still-unmatched tracks are
//!    matched to still-unmatched high detections on a fused cost of
//!    `1 - EIoU` and halved cosine distance. Pairs beyond the proximity
//!    threshold or the appearance reject distance are gated.
//! 3. Leftover tracks are matched to low detections on spatial cost alone,
//!    without touching their feature banks.
//! 4. Unmatched high detections start tentative tracks; unmatched tracks
//!    age and are eventually removed.
//!
//! There is no motion model: the association at frame `t` depends only on
//! each track's last box, its feature bank and the frame-`t` detections.

use serde::{Deserialize, Serialize};

use crate::appearance::{cosine_distance, AppearanceConfig, Embedding, FeatureBank};
use crate::assignment::{fuse, gate_spatial, solve, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::{eiou_unchecked, BoundingBox};
use crate::io::SequenceBundle;
use crate::tracklet::{TrackRecord, TrackSet, Tracklet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub frame: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
    /// Row of this detection in the sequence embedding table.
    pub embedding_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub conf_high: f64,
    pub conf_low: f64,
    /// Largest spatial cost (`1 - EIoU`) a pairing may have; 1.0 disables
    /// spatial gating.
    pub proximity_threshold: f64,
    /// Weight of the spatial term in the fused cost.
    pub lambda: f64,
    pub expansion_schedule: Vec<f64>,
    pub n_init: u32,
    pub max_age: u32,
    /// Largest raw cosine distance (on `[0, 2]`) a high-tier pairing may have.
    pub appearance_reject: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            conf_high: 0.6,
            conf_low: 0.1,
            proximity_threshold: 0.9,
            lambda: 0.5,
            expansion_schedule: vec![0.7, 1.0, 1.3],
            n_init: 3,
            max_age: 30,
            appearance_reject: 0.5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0 <= self.conf_low && self.conf_low < self.conf_high && self.conf_high <= 1.0) {
            return bad(format!(
                "need 0 <= conf_low < conf_high <= 1, got {} and {}",
                self.conf_low, self.conf_high
            ));
        }
        if !(self.proximity_threshold > 0.0 && self.proximity_threshold <= 1.0) {
            return bad(format!(
                "proximity_threshold must lie in (0, 1], got {}",
                self.proximity_threshold
            ));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if self.expansion_schedule.is_empty() {
            return bad("expansion_schedule must not be empty".into());
        }
        if self
            .expansion_schedule
            .iter()
            .any(|e| !(e.is_finite() && *e >= 0.0))
        {
            return bad("expansion scales must be finite and non-negative".into());
        }
        if self.expansion_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return bad("expansion_schedule must be strictly increasing".into());
        }
        if self.n_init == 0 {
            return bad("n_init must be >= 1".into());
        }
        if !(self.appearance_reject > 0.0 && self.appearance_reject <= 2.0) {
            return bad(format!(
                "appearance_reject must lie in (0, 2], got {}",
                self.appearance_reject
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    Tentative,
    Active,
    Lost,
    Removed,
}

#[derive(Debug, Clone)]
pub struct Track {
    pub id: u32,
    pub state: TrackState,
    pub last_box: BoundingBox,
    pub last_frame: u32,
    /// Consecutive matched frames.
    pub hits: u32,
    /// Consecutive missed frames.
    pub misses: u32,
    /// Set once the track has been active; only confirmed tracks are output.
    pub confirmed: bool,
    pub bank: FeatureBank,
    pub records: Vec<TrackRecord>,
    /// Every embedding folded into the bank, uncapped.
    pub banked: Vec<(u32, Embedding)>,
}

impl Track {
    fn into_tracklet(self) -> Tracklet {
        Tracklet {
            id: self.id,
            records: self.records,
            embeddings: self.banked,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchStage {
    /// High-confidence stage at the given index of the expansion schedule.
    High(usize),
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameMatch {
    pub track_id: u32,
    /// Index into the frame's detection slice.
    pub detection: usize,
    pub stage: MatchStage,
}

#[derive(Debug, Clone)]
pub struct OnlineTracker {
    config: TrackerConfig,
    appearance: AppearanceConfig,
    tracks: Vec<Track>,
    next_id: u32,
    last_frame: Option<u32>,
}

impl OnlineTracker {
    pub fn new(config: TrackerConfig, appearance: AppearanceConfig) -> Result<Self> {
        config.validate()?;
        appearance.validate()?;
        Ok(OnlineTracker {
            config,
            appearance,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// All tracks ever spawned, in spawn (and id) order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.last_frame
    }

    /// Advances the tracker by one frame.
    pub fn step(
        &mut self,
        frame: u32,
        detections: &[Detection],
        embeddings: &[Embedding],
    ) -> Result<Vec<FrameMatch>> {
        if let Some(previous) = self.last_frame {
            if frame <= previous {
                return Err(Error::Sequencing { frame, previous });
            }
        }
        for d in detections {
            if d.frame != frame {
                return Err(Error::Data(format!(
                    "detection on frame {} passed to step for frame {frame}",
                    d.frame
                )));
            }
            d.bbox.validate()?;
            if d.embedding_index >= embeddings.len() {
                return Err(Error::Data(format!(
                    "embedding index {} out of range for {} rows",
                    d.embedding_index,
                    embeddings.len()
                )));
            }
        }
        self.last_frame = Some(frame);

        let cfg = &self.config;
        let mut high = Vec::new();
        let mut low = Vec::new();
        for (i, d) in detections.iter().enumerate() {
            if d.confidence >= cfg.conf_high {
                high.push(i);
            } else if d.confidence >= cfg.conf_low {
                low.push(i);
            }
        }

        let mut pool: Vec<usize> = (0..self.tracks.len())
            .filter(|&t| self.tracks[t].state != TrackState::Removed)
            .collect();
        let mut matches = Vec::new();

        let schedule = self.config.expansion_schedule.clone();
        for (stage, &scale) in schedule.iter().enumerate() {
            if pool.is_empty() || high.is_empty() {
                break;
            }
            let pairs = self.associate(&pool, &high, detections, embeddings, scale, true)?;
            let stage = MatchStage::High(stage);
            self.commit(
                &pairs,
                &mut pool,
                &mut high,
                detections,
                embeddings,
                frame,
                stage,
                &mut matches,
            )?;
        }

        if !pool.is_empty() && !low.is_empty() {
            let scale = self.config.expansion_schedule[0];
            let pairs = self.associate(&pool, &low, detections, embeddings, scale, false)?;
            self.commit(
                &pairs,
                &mut pool,
                &mut low,
                detections,
                embeddings,
                frame,
                MatchStage::Low,
                &mut matches,
            )?;
        }

        for &t in &pool {
            let max_age = self.config.max_age;
            let track = &mut self.tracks[t];
            track.misses += 1;
            track.hits = 0;
            track.state = if track.misses > max_age {
                TrackState::Removed
            } else {
                TrackState::Lost
            };
        }

        for &d in &high {
            self.spawn(
                frame,
                &detections[d],
                &embeddings[detections[d].embedding_index],
            );
        }

        matches.sort_by_key(|m| m.track_id);
        Ok(matches)
    }

    /// Solves one cascade stage; returns `(pool index, candidate index)` pairs.
    fn associate(
        &self,
        pool: &[usize],
        candidates: &[usize],
        detections: &[Detection],
        embeddings: &[Embedding],
        scale: f64,
        with_appearance: bool,
    ) -> Result<Vec<(usize, usize)>> {
        let cfg = &self.config;
        let spatial = CostMatrix::from_fn(pool.len(), candidates.len(), |r, c| {
            1.0 - eiou_unchecked(
                &self.tracks[pool[r]].last_box,
                &detections[candidates[c]].bbox,
                scale,
            )
        });
        let spatial = gate_spatial(&spatial, cfg.proximity_threshold)?;
        let cost = if with_appearance {
            let mut appearance = CostMatrix::new(pool.len(), candidates.len());
            for (r, &t) in pool.iter().enumerate() {
                let bank = &self.tracks[t].bank;
                let feature = if self.appearance.use_ema {
                    bank.current()
                } else {
                    bank.latest()
                };
                for (c, &d) in candidates.iter().enumerate() {
                    let dist =
                        cosine_distance(feature, &embeddings[detections[d].embedding_index])?;
                    appearance.set(r, c, dist);
                }
            }
            appearance.gate_where(|_, _, dist| dist > cfg.appearance_reject);
            fuse(&spatial, &appearance, cfg.lambda)?
        } else {
            spatial
        };
        Ok(solve(&cost)?.pairs)
    }

    #[allow(clippy::too_many_arguments)]
    fn commit(
        &mut self,
        pairs: &[(usize, usize)],
        pool: &mut Vec<usize>,
        candidates: &mut Vec<usize>,
        detections: &[Detection],
        embeddings: &[Embedding],
        frame: u32,
        stage: MatchStage,
        matches: &mut Vec<FrameMatch>,
    ) -> Result<()> {
        let mut pool_used = vec![false; pool.len()];
        let mut cand_used = vec![false; candidates.len()];
        for &(r, c) in pairs {
            pool_used[r] = true;
            cand_used[c] = true;
            let det = &detections[candidates[c]];
            let bank_update = matches!(stage, MatchStage::High(_));
            self.apply_match(
                pool[r],
                frame,
                det,
                bank_update.then(|| &embeddings[det.embedding_index]),
            )?;
            matches.push(FrameMatch {
                track_id: self.tracks[pool[r]].id,
                detection: candidates[c],
                stage,
            });
        }
        let mut i = 0;
        pool.retain(|_| {
            i += 1;
            !pool_used[i - 1]
        });
        let mut i = 0;
        candidates.retain(|_| {
            i += 1;
            !cand_used[i - 1]
        });
        Ok(())
    }

    fn apply_match(
        &mut self,
        t: usize,
        frame: u32,
        det: &Detection,
        feature: Option<&Embedding>,
    ) -> Result<()> {
        let n_init = self.config.n_init;
        let momentum = self.appearance.momentum;
        let track = &mut self.tracks[t];
        track.records.push(TrackRecord {
            frame,
            bbox: det.bbox,
            confidence: det.confidence,
        });
        track.last_box = det.bbox;
        track.last_frame = frame;
        track.hits += 1;
        track.misses = 0;
        if let Some(f) = feature {
            track.bank.update(frame, f.clone(), momentum)?;
            track.banked.push((frame, f.clone()));
        }
        if track.confirmed || track.hits >= n_init {
            track.confirmed = true;
            track.state = TrackState::Active;
        } else {
            track.state = TrackState::Tentative;
        }
        Ok(())
    }

    fn spawn(&mut self, frame: u32, det: &Detection, feature: &Embedding) {
        let confirmed = self.config.n_init <= 1;
        self.tracks.push(Track {
            id: self.next_id,
            state: if confirmed {
                TrackState::Active
            } else {
                TrackState::Tentative
            },
            last_box: det.bbox,
            last_frame: frame,
            hits: 1,
            misses: 0,
            confirmed,
            bank: FeatureBank::new(frame, feature.clone(), self.appearance.max_history),
            records: vec![TrackRecord {
                frame,
                bbox: det.bbox,
                confidence: det.confidence,
            }],
            banked: vec![(frame, feature.clone())],
        });
        self.next_id += 1;
    }

    /// Every track that was ever confirmed, as tracklets.
    pub fn finish(self) -> Result<TrackSet> {
        TrackSet::new(
            self.tracks
                .into_iter()
                .filter(|t| t.confirmed)
                .map(Track::into_tracklet)
                .collect(),
        )
    }
}

/// Tracks a whole sequence, stepping every frame from the first to the last
/// detection frame (frames without detections included).
pub fn run(
    bundle: &SequenceBundle,
    config: &TrackerConfig,
    appearance: &AppearanceConfig,
) -> Result<TrackSet> {
    let mut tracker = OnlineTracker::new(config.clone(), appearance.clone())?;
    let (Some(&first), Some(&last)) = (
        bundle.detections.keys().next(),
        bundle.detections.keys().next_back(),
    ) else {
        return Ok(TrackSet::default());
    };
    for frame in first..=last {
        let dets = bundle.detections.get(&frame).map_or(&[][..], Vec::as_slice);
        tracker.step(frame, dets, &bundle.embeddings)?;
    }
    tracker.finish()
}
