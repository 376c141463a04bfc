use crate::assignment::max_weight_matching;
use crate::error::Result;
use crate::tracklet::TrackSet;

use super::{check_alpha, GroundTruth, Prepared};

/// Bonus that makes keeping last frame's partner beat any IoU difference.
const CONTINUATION_BONUS: f64 = 1000.0;

/// CLEAR-style identity switches at IoU `threshold`.
///
/// Each frame is matched preferring every gt object's partner from the
/// previous frame; a switch is counted whenever a gt object's partner
/// differs from the last one it was ever matched to.
pub fn idsw(gt: &GroundTruth, pred: &TrackSet, threshold: f64) -> Result<usize> {
    check_alpha(threshold)?;
    let prep = Prepared::new(gt, pred);
    let mut last_partner: Vec<Option<usize>> = vec![None; prep.gt_ids.len()];
    let mut prev_step: Vec<Option<usize>> = vec![None; prep.gt_ids.len()];
    let mut prev_frame: Option<u32> = None;
    let mut switches = 0;
    for f in &prep.frames {
        if prev_frame.is_some_and(|pf| f.frame != pf + 1) {
            prev_step.fill(None);
        }
        prev_frame = Some(f.frame);
        let pairs = max_weight_matching(f.gt.len(), f.pred.len(), |g, p| {
            let s = f.sim(g, p);
            (s >= threshold - f64::EPSILON && s > 0.0).then(|| {
                let carry = prev_step[f.gt[g]] == Some(f.pred[p]);
                s + if carry { CONTINUATION_BONUS } else { 0.0 }
            })
        });
        prev_step.fill(None);
        for (g, p) in pairs {
            let (gi, pi) = (f.gt[g], f.pred[p]);
            if last_partner[gi].is_some_and(|q| q != pi) {
                switches += 1;
            }
            last_partner[gi] = Some(pi);
            prev_step[gi] = Some(pi);
        }
    }
    Ok(switches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;
    use crate::tracklet::{TrackRecord, Tracklet};

    fn track(id: u32, frames: std::ops::RangeInclusive<u32>, x: f64) -> Tracklet {
        let records = frames
            .map(|frame| TrackRecord {
                frame,
                bbox: BoundingBox::new(x, 0.0, 10.0, 10.0).unwrap(),
                confidence: 1.0,
            })
            .collect();
        Tracklet::new(id, records, vec![]).unwrap()
    }

    #[test]
    fn perfect_is_zero() {
        let ts = TrackSet::new(vec![track(1, 1..=5, 0.0), track(2, 1..=5, 40.0)]).unwrap();
        let gt = GroundTruth::from_track_set(&ts).unwrap();
        assert_eq!(idsw(&gt, &ts, 0.5).unwrap(), 0);
    }

    #[test]
    fn single_relabel_is_one_switch() {
        let gt = GroundTruth::from_track_set(&TrackSet::new(vec![track(1, 1..=6, 0.0)]).unwrap())
            .unwrap();
        let pred = TrackSet::new(vec![track(4, 1..=3, 0.0), track(9, 4..=6, 0.0)]).unwrap();
        assert_eq!(idsw(&gt, &pred, 0.5).unwrap(), 1);
    }

    #[test]
    fn switch_back_counts_twice() {
        let gt = GroundTruth::from_track_set(&TrackSet::new(vec![track(1, 1..=6, 0.0)]).unwrap())
            .unwrap();
        let pred = TrackSet::new(vec![
            track(4, 1..=2, 0.0),
            track(9, 3..=4, 0.0),
            track(5, 5..=6, 0.0),
        ])
        .unwrap();
        assert_eq!(idsw(&gt, &pred, 0.5).unwrap(), 2);
    }

    #[test]
    fn gap_does_not_reset_last_partner() {
        let gt = GroundTruth::from_track_set(&TrackSet::new(vec![track(1, 1..=6, 0.0)]).unwrap())
            .unwrap();
        let pred = TrackSet::new(vec![track(4, 1..=2, 0.0), track(7, 5..=6, 0.0)]).unwrap();
        assert_eq!(idsw(&gt, &pred, 0.5).unwrap(), 1);
    }
}
