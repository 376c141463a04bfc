use rayon::prelude::*;

use crate::appearance::tracklet_distance;
use crate::error::Result;
use crate::tracklet::Tracklet;

use super::RefineConfig;

/// Which rule allowed a merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeCriterion {
    /// Distance at or below the merge threshold.
    Threshold,
    /// Forced while the tracklet count exceeded the target count.
    TargetCount,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MergeEvent {
    pub kept: u32,
    pub absorbed: u32,
    pub distance: f64,
    pub criterion: MergeCriterion,
}

/// Frames on which both tracklets have a record.
fn shared_frames(a: &Tracklet, b: &Tracklet) -> u32 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.records.len() && j < b.records.len() {
        let (fa, fb) = (a.records[i].frame, b.records[j].frame);
        if fa == fb {
            n += 1;
        }
        if fa <= fb {
            i += 1;
        }
        if fb <= fa {
            j += 1;
        }
    }
    n
}

/// `a` comes first when it starts earlier, or starts together with a lower id.
fn precedes(a: &Tracklet, b: &Tracklet) -> bool {
    (a.first_frame(), a.id) < (b.first_frame(), b.id)
}

/// Temporal and gap-bridging constraints for merging two tracklets.
///
/// Spans may interleave as long as few enough frames are shared. Wherever
/// the merged sequence hands over from one tracklet to the other, the jump
/// between box centers must be coverable at `max_speed`.
pub fn compatible(a: &Tracklet, b: &Tracklet, config: &RefineConfig) -> bool {
    if a.embeddings.is_empty() || b.embeddings.is_empty() {
        return false;
    }
    if shared_frames(a, b) > config.max_temporal_overlap {
        return false;
    }
    let (mut i, mut j) = (0, 0);
    let mut prev: Option<(bool, u32, (f64, f64))> = None;
    while i < a.records.len() || j < b.records.len() {
        let take_a = j == b.records.len()
            || (i < a.records.len() && a.records[i].frame <= b.records[j].frame);
        let r = if take_a {
            i += 1;
            &a.records[i - 1]
        } else {
            j += 1;
            &b.records[j - 1]
        };
        let center = r.bbox.center();
        if let Some((from_a, frame, c)) = prev {
            if from_a != take_a {
                let gap = (r.frame - frame).max(1) as f64;
                let jump = ((center.0 - c.0).powi(2) + (center.1 - c.1).powi(2)).sqrt();
                if jump > config.max_speed * gap {
                    return false;
                }
            }
        }
        prev = Some((take_a, r.frame, center));
    }
    true
}

fn pair_distance(a: &Tracklet, b: &Tracklet, config: &RefineConfig) -> Result<Option<f64>> {
    if !compatible(a, b, config) {
        return Ok(None);
    }
    tracklet_distance(a, b, config.max_history).map(Some)
}

/// Concatenates two tracklets in frame order under the earlier one's id.
pub fn merge_pair(a: Tracklet, b: Tracklet) -> Tracklet {
    let (early, late) = if precedes(&a, &b) { (a, b) } else { (b, a) };
    let mut records = Vec::with_capacity(early.records.len() + late.records.len());
    let mut embeddings = Vec::with_capacity(early.embeddings.len() + late.embeddings.len());
    records.extend(early.records);
    records.extend(late.records);
    records.sort_by_key(|r| r.frame);
    embeddings.extend(early.embeddings);
    embeddings.extend(late.embeddings);
    embeddings.sort_by_key(|(f, _)| *f);
    Tracklet {
        id: early.id,
        records,
        embeddings,
    }
}

/// Greedy agglomeration of tracklet fragments.
///
/// Repeatedly merges the compatible pair with the smallest average
/// appearance distance (ties broken by the smaller ids) while that
/// distance is within `merge_threshold`, or, when `target_count` is set,
/// while more than `target_count` tracklets remain.
pub fn connect_tracklets(
    tracklets: Vec<Tracklet>,
    config: &RefineConfig,
) -> Result<(Vec<Tracklet>, Vec<MergeEvent>)> {
    let mut nodes: Vec<Option<Tracklet>> = tracklets.into_iter().map(Some).collect();
    let n = nodes.len();
    let mut alive = n;

    let rows: Vec<Vec<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = nodes[i].as_ref().expect("all nodes alive");
            (0..n)
                .map(|j| {
                    if j <= i {
                        Ok(None)
                    } else {
                        pair_distance(a, nodes[j].as_ref().expect("all nodes alive"), config)
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    // Upper triangle only: dist[i][j] with i < j.
    let mut dist = rows;

    let mut events = Vec::new();
    loop {
        if config.target_count.is_some_and(|t| alive <= t) {
            break;
        }
        let mut best: Option<(f64, u32, u32, usize, usize)> = None;
        for i in 0..n {
            let Some(a) = &nodes[i] else { continue };
            for j in i + 1..n {
                let (Some(d), Some(b)) = (dist[i][j], &nodes[j]) else {
                    continue;
                };
                let key = (d, a.id.min(b.id), a.id.max(b.id), i, j);
                let better = match &best {
                    None => true,
                    Some(cur) => d
                        .total_cmp(&cur.0)
                        .then((key.1, key.2).cmp(&(cur.1, cur.2)))
                        .is_lt(),
                };
                if better {
                    best = Some(key);
                }
            }
        }
        let Some((d, _, _, i, j)) = best else { break };
        let criterion = if d <= config.merge_threshold {
            MergeCriterion::Threshold
        } else if config.target_count.is_some() {
            MergeCriterion::TargetCount
        } else {
            break;
        };

        let a = nodes[i].take().expect("alive");
        let b = nodes[j].take().expect("alive");
        let (a_id, b_id) = (a.id, b.id);
        let merged = merge_pair(a, b);
        let (kept, absorbed) = if merged.id == a_id {
            (a_id, b_id)
        } else {
            (b_id, a_id)
        };
        events.push(MergeEvent {
            kept,
            absorbed,
            distance: d,
            criterion,
        });

        // The merged tracklet takes slot i; slot j stays empty.
        for row in dist.iter_mut().take(j) {
            row[j] = None;
        }
        for cell in dist[j].iter_mut().skip(j + 1) {
            *cell = None;
        }
        let fresh: Vec<(usize, Option<f64>)> = (0..n)
            .into_par_iter()
            .filter(|&k| k != i)
            .map(|k| match &nodes[k] {
                Some(other) => pair_distance(&merged, other, config).map(|d| (k, d)),
                None => Ok((k, None)),
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, d) in fresh {
            if k < i {
                dist[k][i] = d;
            } else {
                dist[i][k] = d;
            }
        }
        nodes[i] = Some(merged);
        alive -= 1;
    }

    let mut out: Vec<Tracklet> = nodes.into_iter().flatten().collect();
    out.sort_by_key(|t| t.id);
    Ok((out, events))
}
