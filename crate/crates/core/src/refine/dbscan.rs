//! Density-based clustering of embeddings under cosine distance.

use std::collections::VecDeque;

use crate::appearance::{cosine_distance, Embedding};
use crate::error::Result;

pub const NOISE: i32 = -1;
const UNVISITED: i32 = -2;

/// Labels each point with a cluster index (`0..k`) or [`NOISE`].
///
/// A point is core when at least `min_samples` points, itself included,
/// lie within `eps`. Clusters are numbered by their lowest-index core
/// point; a border point reachable from several clusters joins the one
/// numbered first.
pub fn dbscan(points: &[Embedding], eps: f64, min_samples: usize) -> Result<Vec<i32>> {
    let n = points.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = cosine_distance(&points[i], &points[j])?;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let neighbors =
        |p: usize| -> Vec<usize> { (0..n).filter(|&q| dist[p * n + q] <= eps).collect() };

    let mut labels = vec![UNVISITED; n];
    let mut cluster = 0;
    for p in 0..n {
        if labels[p] != UNVISITED {
            continue;
        }
        let seeds = neighbors(p);
        if seeds.len() < min_samples {
            labels[p] = NOISE;
            continue;
        }
        labels[p] = cluster;
        let mut queue: VecDeque<usize> = seeds.into();
        while let Some(q) = queue.pop_front() {
            if labels[q] == NOISE {
                labels[q] = cluster;
            }
            if labels[q] != UNVISITED {
                continue;
            }
            labels[q] = cluster;
            let reach = neighbors(q);
            if reach.len() >= min_samples {
                queue.extend(reach);
            }
        }
        cluster += 1;
    }
    Ok(labels)
}
