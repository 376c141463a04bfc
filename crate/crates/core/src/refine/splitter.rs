use crate::appearance::Embedding;
use crate::error::Result;
use crate::tracklet::Tracklet;

use super::dbscan::{dbscan, NOISE};
use super::RefineConfig;

/// Splits a tracklet whose embeddings form more than one density cluster.
///
/// Each cluster becomes a tracklet with a fresh id drawn from `next_id`.
/// Noise embeddings, and records with no embedding, follow the cluster
/// owning the temporally nearest clustered embedding (lower cluster index
/// on ties). A tracklet with at most one cluster is returned as is.
pub fn split_tracklet(
    t: &Tracklet,
    config: &RefineConfig,
    next_id: &mut u32,
) -> Result<Vec<Tracklet>> {
    if t.embeddings.is_empty() {
        return Ok(vec![t.clone()]);
    }
    let points: Vec<Embedding> = t.embeddings.iter().map(|(_, e)| e.clone()).collect();
    let labels = dbscan(&points, config.eps, config.min_samples)?;
    let clusters = labels.iter().copied().max().map_or(0, |m| (m + 1) as usize);
    if clusters <= 1 {
        return Ok(vec![t.clone()]);
    }

    // (frame, cluster) of every clustered embedding, in frame order.
    let members: Vec<(u32, usize)> = t
        .embeddings
        .iter()
        .zip(&labels)
        .filter(|(_, &l)| l != NOISE)
        .map(|((f, _), &l)| (*f, l as usize))
        .collect();
    let nearest = |frame: u32| -> usize {
        members
            .iter()
            .min_by_key(|(f, c)| (f.abs_diff(frame), *c))
            .map(|(_, c)| *c)
            .expect("at least two clusters have members")
    };

    let emb_cluster: Vec<usize> = t
        .embeddings
        .iter()
        .zip(&labels)
        .map(|((f, _), &l)| if l == NOISE { nearest(*f) } else { l as usize })
        .collect();

    let mut parts: Vec<Tracklet> = (0..clusters)
        .map(|_| Tracklet {
            id: 0,
            records: Vec::new(),
            embeddings: Vec::new(),
        })
        .collect();
    for (record, slot) in t.records.iter().zip(t.embedding_slots()) {
        let c = match slot {
            Some(e) => {
                parts[emb_cluster[e]]
                    .embeddings
                    .push(t.embeddings[e].clone());
                emb_cluster[e]
            }
            None => nearest(record.frame),
        };
        parts[c].records.push(*record);
    }

    let mut out = Vec::with_capacity(clusters);
    for mut part in parts.into_iter().filter(|p| !p.records.is_empty()) {
        part.id = *next_id;
        *next_id += 1;
        out.push(part);
    }
    Ok(out)
}
