//! Tracking evaluation: HOTA with its detection, association and
//! localization sub-scores, plus CLEAR-style identity switches.

mod clear;
mod hota;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use clear::idsw;
pub use hota::{evaluate, match_per_alpha, AlphaMatching, FrameMatching};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::tracklet::TrackSet;

/// Ground-truth boxes per frame, each frame sorted by identity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    frames: BTreeMap<u32, Vec<(u32, BoundingBox)>>,
}

impl GroundTruth {
    /// Builds ground truth from `(frame, id, box)` entries in any order.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (u32, u32, BoundingBox)>,
    ) -> Result<Self> {
        let mut frames: BTreeMap<u32, Vec<(u32, BoundingBox)>> = BTreeMap::new();
        for (frame, id, b) in entries {
            frames.entry(frame).or_default().push((id, b));
        }
        for (frame, boxes) in frames.iter_mut() {
            boxes.sort_by_key(|(id, _)| *id);
            if let Some(w) = boxes.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::Data(format!(
                    "duplicate ground-truth id {} on frame {frame}",
                    w[0].0
                )));
            }
        }
        Ok(GroundTruth { frames })
    }

    /// Treats a track set as ground truth (track ids become identities).
    pub fn from_track_set(ts: &TrackSet) -> Result<Self> {
        Self::from_entries(
            ts.tracklets
                .iter()
                .flat_map(|t| t.records.iter().map(move |r| (r.frame, t.id, r.bbox))),
        )
    }

    pub fn frames(&self) -> impl Iterator<Item = (u32, &[(u32, BoundingBox)])> {
        self.frames.iter().map(|(f, b)| (*f, b.as_slice()))
    }

    pub fn frame(&self, frame: u32) -> &[(u32, BoundingBox)] {
        self.frames.get(&frame).map_or(&[], Vec::as_slice)
    }

    pub fn box_count(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.frames.values().flatten().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    /// IoU thresholds HOTA is averaged over.
    pub alpha_grid: Vec<f64>,
    /// IoU threshold for IDSW, FP and FN.
    pub clear_threshold: f64,
}

pub fn default_alpha_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            alpha_grid: default_alpha_grid(),
            clear_threshold: 0.5,
        }
    }
}

impl MetricOptions {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_grid.is_empty() {
            return Err(Error::InvalidParameter(
                "metrics.alpha_grid must not be empty".into(),
            ));
        }
        for &a in self
            .alpha_grid
            .iter()
            .chain(std::iter::once(&self.clear_threshold))
        {
            check_alpha(a)?;
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "IoU threshold must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaScores {
    pub alpha: f64,
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
    pub loc_a: f64,
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
    pub loc_a: f64,
    pub idsw: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub per_alpha: Vec<AlphaScores>,
    /// Both sides were empty; every score was set to 1 by convention.
    pub empty_scene: bool,
}

/// Detection Jaccard index `TP / (TP + FN + FP)`; 1 for an empty scene.
pub fn det_a(tp: usize, fn_: usize, fp: usize) -> f64 {
    let denom = tp + fn_ + fp;
    if denom == 0 {
        1.0
    } else {
        tp as f64 / denom as f64
    }
}

/// HOTA at one threshold: the geometric mean of DetA and AssA.
pub fn hota_score(det_a: f64, ass_a: f64) -> f64 {
    (det_a * ass_a).sqrt()
}

/// Mean IoU over true positives.
pub fn loc_a(ious: &[f64]) -> f64 {
    if ious.is_empty() {
        return 0.0;
    }
    ious.iter().sum::<f64>() / ious.len() as f64
}

/// Association Jaccard index of one true-positive pair.
pub fn association_score(tpa: usize, fna: usize, fpa: usize) -> f64 {
    let denom = tpa + fna + fpa;
    if denom == 0 {
        0.0
    } else {
        tpa as f64 / denom as f64
    }
}

/// Full evaluation with the default options.
pub fn hota_report(gt: &GroundTruth, pred: &TrackSet) -> MetricReport {
    evaluate(gt, pred, &MetricOptions::default()).expect("default options are valid")
}

/// Mean counts over several sequences, as leaderboards report them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceSummary {
    pub sequences: usize,
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
    pub loc_a: f64,
    pub idsw: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
}

impl SequenceSummary {
    pub fn mean(reports: &[MetricReport]) -> Option<Self> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: &dyn Fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Some(SequenceSummary {
            sequences: reports.len(),
            hota: avg(&|r| r.hota),
            det_a: avg(&|r| r.det_a),
            ass_a: avg(&|r| r.ass_a),
            loc_a: avg(&|r| r.loc_a),
            idsw: avg(&|r| r.idsw as f64),
            fp: avg(&|r| r.fp as f64),
            fn_: avg(&|r| r.fn_ as f64),
        })
    }
}

/// Per-frame boxes of both sides with dense identity indices.
pub(crate) struct Prepared {
    pub frames: Vec<PreparedFrame>,
    pub gt_ids: Vec<u32>,
    pub pred_ids: Vec<u32>,
}

pub(crate) struct PreparedFrame {
    pub frame: u32,
    pub gt: Vec<usize>,
    pub pred: Vec<usize>,
    /// `gt.len() x pred.len()` IoU matrix, row-major.
    pub sim: Vec<f64>,
}

impl PreparedFrame {
    #[inline]
    pub fn sim(&self, g: usize, p: usize) -> f64 {
        self.sim[g * self.pred.len() + p]
    }
}

impl Prepared {
    pub fn new(gt: &GroundTruth, pred: &TrackSet) -> Self {
        let mut pred_frames: BTreeMap<u32, Vec<(u32, BoundingBox)>> = BTreeMap::new();
        for t in &pred.tracklets {
            for r in &t.records {
                pred_frames.entry(r.frame).or_default().push((t.id, r.bbox));
            }
        }
        for boxes in pred_frames.values_mut() {
            boxes.sort_by_key(|(id, _)| *id);
        }
        let gt_ids = gt.ids();
        let pred_ids: Vec<u32> = pred.tracklets.iter().map(|t| t.id).collect();
        let gt_index = |id: u32| gt_ids.binary_search(&id).expect("gt id present");
        let pred_index = |id: u32| pred_ids.binary_search(&id).expect("pred id present");

        let mut all: Vec<u32> = gt
            .frames
            .keys()
            .chain(pred_frames.keys())
            .copied()
            .collect();
        all.sort_unstable();
        all.dedup();

        let frames = all
            .into_iter()
            .map(|frame| {
                let g = gt.frame(frame);
                let p = pred_frames.get(&frame).map_or(&[][..], Vec::as_slice);
                let mut sim = Vec::with_capacity(g.len() * p.len());
                for (_, gb) in g {
                    for (_, pb) in p {
                        sim.push(crate::geometry::iou_unchecked(gb, pb));
                    }
                }
                PreparedFrame {
                    frame,
                    gt: g.iter().map(|(id, _)| gt_index(*id)).collect(),
                    pred: p.iter().map(|(id, _)| pred_index(*id)).collect(),
                    sim,
                }
            })
            .collect();
        Prepared {
            frames,
            gt_ids,
            pred_ids,
        }
    }
}
