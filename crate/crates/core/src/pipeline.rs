//! File-to-file stages. Each stage reads only its inputs and writes only
//! its outputs, so they compose through the file system.

use std::path::Path;

use crate::error::Result;
use crate::io::{
    read_ground_truth, read_tracks, read_tracks_with_embeddings, write_track_embeddings,
    write_tracks, PipelineConfig, SequenceBundle,
};
use crate::metrics::{evaluate, GroundTruth, MetricOptions, MetricReport};
use crate::refine::{refine, RefineConfig, RefineOutcome};
use crate::simulate::{generate, Scenario, ScenarioConfig};
use crate::tracker::run;
use crate::tracklet::TrackSet;

/// Runs the online tracker and writes the track file plus the embedding
/// sidecar that refinement reads back.
pub fn track_files(
    detections: &Path,
    embeddings: &Path,
    config: &PipelineConfig,
    out: &Path,
    out_embeddings: &Path,
) -> Result<TrackSet> {
    let bundle = SequenceBundle::load(detections, embeddings)?;
    let tracks = run(&bundle, &config.tracker, &config.appearance)?;
    write_tracks(&tracks, out)?;
    write_track_embeddings(&tracks, out_embeddings)?;
    log::info!(
        "{} tracklets, {} records",
        tracks.len(),
        tracks.record_count()
    );
    Ok(tracks)
}

pub fn refine_files(
    tracks: &Path,
    embeddings: &Path,
    config: &RefineConfig,
    out: &Path,
    out_embeddings: &Path,
) -> Result<RefineOutcome> {
    let input = read_tracks_with_embeddings(tracks, embeddings)?;
    let outcome = refine(&input, config)?;
    write_tracks(&outcome.tracks, out)?;
    write_track_embeddings(&outcome.tracks, out_embeddings)?;
    Ok(outcome)
}

pub fn eval_files(gt: &Path, pred: &Path, options: &MetricOptions) -> Result<MetricReport> {
    let gt = read_ground_truth(gt)?;
    let pred = read_tracks(pred)?;
    evaluate(&gt, &pred, options)
}

/// Evaluates a track file against ground truth already in memory.
pub fn eval_tracks(gt: &GroundTruth, pred: &Path, options: &MetricOptions) -> Result<MetricReport> {
    evaluate(gt, &read_tracks(pred)?, options)
}

/// Writes `gt.txt`, `det.txt` and `emb.bin` into `out_dir`.
pub fn gen_files(config: &ScenarioConfig, out_dir: &Path) -> Result<Scenario> {
    let scenario = generate(config)?;
    scenario.write(out_dir)?;
    Ok(scenario)
}
