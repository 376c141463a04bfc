//! HOTA with the two-pass matching used by the reference evaluator.
//!
//! Pass 1 accumulates, for every (gt id, pred id) pair, a soft count of how
//! often the two could be associated, and turns it into a global alignment
//! score. Pass 2 matches each frame by maximizing the summed
//! `alignment * IoU` over pairs whose IoU reaches the threshold.

use rayon::prelude::*;

use crate::assignment::max_weight_matching;
use crate::error::Result;
use crate::tracklet::TrackSet;

use super::{
    check_alpha, det_a, hota_score, idsw, AlphaScores, GroundTruth, MetricOptions, MetricReport,
    Prepared,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatching {
    pub frame: u32,
    /// `(gt id, pred id, IoU)` of each true positive.
    pub tp: Vec<(u32, u32, f64)>,
    pub fn_ids: Vec<u32>,
    pub fp_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatching {
    pub alpha: f64,
    pub frames: Vec<FrameMatching>,
}

struct Alignment {
    pred_n: usize,
    score: Vec<f64>,
    gt_count: Vec<usize>,
    pred_count: Vec<usize>,
}

impl Alignment {
    fn new(prep: &Prepared) -> Self {
        let (gn, pn) = (prep.gt_ids.len(), prep.pred_ids.len());
        let mut potential = vec![0.0; gn * pn];
        let mut gt_count = vec![0usize; gn];
        let mut pred_count = vec![0usize; pn];
        for f in &prep.frames {
            let (rows, cols) = (f.gt.len(), f.pred.len());
            let row_sum: Vec<f64> = (0..rows)
                .map(|g| (0..cols).map(|p| f.sim(g, p)).sum())
                .collect();
            let col_sum: Vec<f64> = (0..cols)
                .map(|p| (0..rows).map(|g| f.sim(g, p)).sum())
                .collect();
            for g in 0..rows {
                for p in 0..cols {
                    let s = f.sim(g, p);
                    if s > 0.0 {
                        potential[f.gt[g] * pn + f.pred[p]] += s / (row_sum[g] + col_sum[p] - s);
                    }
                }
            }
            for &g in &f.gt {
                gt_count[g] += 1;
            }
            for &p in &f.pred {
                pred_count[p] += 1;
            }
        }
        let score = potential
            .iter()
            .enumerate()
            .map(|(i, &pot)| {
                let denom = (gt_count[i / pn.max(1)] + pred_count[i % pn.max(1)]) as f64 - pot;
                if pot > 0.0 {
                    pot / denom
                } else {
                    0.0
                }
            })
            .collect();
        Alignment {
            pred_n: pn,
            score,
            gt_count,
            pred_count,
        }
    }

    #[inline]
    fn get(&self, g: usize, p: usize) -> f64 {
        self.score[g * self.pred_n + p]
    }
}

/// Per-frame matches as `(gt index, pred index)` within each frame's lists.
fn match_frames(prep: &Prepared, align: &Alignment, alpha: f64) -> Vec<Vec<(usize, usize)>> {
    prep.frames
        .iter()
        .map(|f| {
            max_weight_matching(f.gt.len(), f.pred.len(), |g, p| {
                let s = f.sim(g, p);
                (s >= alpha - f64::EPSILON && s > 0.0).then(|| align.get(f.gt[g], f.pred[p]) * s)
            })
        })
        .collect()
}

pub fn match_per_alpha(gt: &GroundTruth, pred: &TrackSet, alpha: f64) -> Result<AlphaMatching> {
    check_alpha(alpha)?;
    let prep = Prepared::new(gt, pred);
    let align = Alignment::new(&prep);
    let matched = match_frames(&prep, &align, alpha);
    let frames = prep
        .frames
        .iter()
        .zip(matched)
        .map(|(f, pairs)| {
            let mut gt_hit = vec![false; f.gt.len()];
            let mut pred_hit = vec![false; f.pred.len()];
            let tp = pairs
                .iter()
                .map(|&(g, p)| {
                    gt_hit[g] = true;
                    pred_hit[p] = true;
                    (prep.gt_ids[f.gt[g]], prep.pred_ids[f.pred[p]], f.sim(g, p))
                })
                .collect();
            FrameMatching {
                frame: f.frame,
                tp,
                fn_ids: (0..f.gt.len())
                    .filter(|&g| !gt_hit[g])
                    .map(|g| prep.gt_ids[f.gt[g]])
                    .collect(),
                fp_ids: (0..f.pred.len())
                    .filter(|&p| !pred_hit[p])
                    .map(|p| prep.pred_ids[f.pred[p]])
                    .collect(),
            }
        })
        .collect();
    Ok(AlphaMatching { alpha, frames })
}

fn scores_for_alpha(prep: &Prepared, align: &Alignment, alpha: f64) -> AlphaScores {
    let matched = match_frames(prep, align, alpha);
    let pn = prep.pred_ids.len();
    let mut pair_tp = vec![0usize; prep.gt_ids.len() * pn];
    let mut tp = 0usize;
    let mut iou_sum = 0.0;
    for (f, pairs) in prep.frames.iter().zip(&matched) {
        for &(g, p) in pairs {
            pair_tp[f.gt[g] * pn + f.pred[p]] += 1;
            iou_sum += f.sim(g, p);
        }
        tp += pairs.len();
    }
    let gt_total: usize = align.gt_count.iter().sum();
    let pred_total: usize = align.pred_count.iter().sum();
    let fn_ = gt_total - tp;
    let fp = pred_total - tp;

    let empty = gt_total == 0 && pred_total == 0;
    let (ass_a, loc_a) = if empty {
        (1.0, 1.0)
    } else if tp == 0 {
        (0.0, 0.0)
    } else {
        // Every TP of pair (g, p) shares the same association score, so the
        // mean over TPs is a count-weighted sum over pairs.
        let mut acc = 0.0;
        for (i, &n) in pair_tp.iter().enumerate() {
            if n > 0 {
                let (g, p) = (i / pn, i % pn);
                let a = n as f64 / (align.gt_count[g] + align.pred_count[p] - n) as f64;
                acc += n as f64 * a;
            }
        }
        (acc / tp as f64, iou_sum / tp as f64)
    };
    let det = det_a(tp, fn_, fp);
    AlphaScores {
        alpha,
        hota: hota_score(det, ass_a),
        det_a: det,
        ass_a,
        loc_a,
        tp,
        fn_,
        fp,
    }
}

/// HOTA averaged over `options.alpha_grid`, with IDSW, FP and FN taken at
/// `options.clear_threshold`.
pub fn evaluate(
    gt: &GroundTruth,
    pred: &TrackSet,
    options: &MetricOptions,
) -> Result<MetricReport> {
    options.validate()?;
    let prep = Prepared::new(gt, pred);
    let align = Alignment::new(&prep);
    let per_alpha: Vec<AlphaScores> = options
        .alpha_grid
        .par_iter()
        .map(|&alpha| scores_for_alpha(&prep, &align, alpha))
        .collect();

    let n = per_alpha.len() as f64;
    let mean = |f: fn(&AlphaScores) -> f64| per_alpha.iter().map(f).sum::<f64>() / n;
    let clear = per_alpha
        .iter()
        .find(|s| s.alpha == options.clear_threshold)
        .cloned()
        .unwrap_or_else(|| scores_for_alpha(&prep, &align, options.clear_threshold));

    Ok(MetricReport {
        hota: mean(|s| s.hota),
        det_a: mean(|s| s.det_a),
        ass_a: mean(|s| s.ass_a),
        loc_a: mean(|s| s.loc_a),
        idsw: idsw(gt, pred, options.clear_threshold)?,
        fp: clear.fp,
        fn_: clear.fn_,
        empty_scene: prep.frames.is_empty(),
        per_alpha,
    })
}
