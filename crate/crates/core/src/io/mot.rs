//! MOTChallenge-style comma-separated text files.
//!
//! Detections: `frame,id,x,y,w,h,conf[,x3d,y3d,z3d]` with `id = -1`.
//! Ground truth: `frame,id,x,y,w,h[,conf,class,vis]`.
//! Tracks: `frame,track_id,x,y,w,h,conf,-1,-1,-1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::appearance::Embedding;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::metrics::GroundTruth;
use crate::tracker::Detection;
use crate::tracklet::{TrackRecord, TrackSet, Tracklet};

use super::{read_to_string, write_atomic, FrameDetections};

struct Fields<'a> {
    path: &'a Path,
    line: usize,
    parts: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn split(path: &'a Path, line: usize, text: &'a str, min: usize) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() < min {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!(
                    "expected at least {min} comma-separated fields, found {}",
                    parts.len()
                ),
            });
        }
        Ok(Fields { path, line, parts })
    }

    fn err(&self, message: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: self.line,
            message,
        }
    }

    fn real(&self, i: usize, name: &str) -> Result<f64> {
        let v: f64 = self.parts[i].parse().map_err(|_| {
            self.err(format!(
                "{name}: cannot parse {:?} as a number",
                self.parts[i]
            ))
        })?;
        if !v.is_finite() {
            return Err(self.err(format!("{name}: non-finite value")));
        }
        Ok(v)
    }

    fn int(&self, i: usize, name: &str) -> Result<i64> {
        let raw = self.parts[i];
        if let Ok(v) = raw.parse::<i64>() {
            return Ok(v);
        }
        // Some writers emit integral columns as floats ("1.0").
        let v = self.real(i, name)?;
        if v.fract() != 0.0 {
            return Err(self.err(format!("{name}: expected an integer, found {raw:?}")));
        }
        Ok(v as i64)
    }

    fn frame(&self) -> Result<u32> {
        let f = self.int(0, "frame")?;
        if f < 1 || f > u32::MAX as i64 {
            return Err(self.err(format!("frame must be >= 1, found {f}")));
        }
        Ok(f as u32)
    }

    fn positive_id(&self) -> Result<u32> {
        let id = self.int(1, "id")?;
        if id < 1 || id > u32::MAX as i64 {
            return Err(self.err(format!("id must be >= 1, found {id}")));
        }
        Ok(id as u32)
    }

    fn bbox(&self) -> Result<BoundingBox> {
        let (x, y, w, h) = (
            self.real(2, "x")?,
            self.real(3, "y")?,
            self.real(4, "w")?,
            self.real(5, "h")?,
        );
        BoundingBox::new(x, y, w, h).map_err(|e| self.err(e.to_string()))
    }

    fn confidence(&self, i: usize) -> Result<f64> {
        let c = self.real(i, "confidence")?;
        if !(0.0..=1.0).contains(&c) {
            return Err(self.err(format!("confidence must lie in [0, 1], found {c}")));
        }
        Ok(c)
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn read_detections(path: &Path) -> Result<FrameDetections> {
    parse_detections(&read_to_string(path)?, path)
}

/// Parses a detection file. `embedding_index` follows file order; frames
/// are grouped in ascending order, keeping file order within a frame.
pub fn parse_detections(text: &str, path: &Path) -> Result<FrameDetections> {
    let mut frames: FrameDetections = BTreeMap::new();
    let mut index = 0usize;
    for (line, raw) in data_lines(text) {
        let f = Fields::split(path, line, raw, 7)?;
        let det = Detection {
            frame: f.frame()?,
            bbox: f.bbox()?,
            confidence: f.confidence(6)?,
            embedding_index: index,
        };
        index += 1;
        frames.entry(det.frame).or_default().push(det);
    }
    if index == 0 {
        log::warn!("{}: no detections", path.display());
    }
    Ok(frames)
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    parse_ground_truth(&read_to_string(path)?, path)
}

pub fn parse_ground_truth(text: &str, path: &Path) -> Result<GroundTruth> {
    let mut entries = Vec::new();
    for (line, raw) in data_lines(text) {
        let f = Fields::split(path, line, raw, 6)?;
        entries.push((f.frame()?, f.positive_id()?, f.bbox()?));
    }
    GroundTruth::from_entries(entries).map_err(|e| match e {
        Error::Data(message) => Error::Format {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// One parsed line of a track file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackLine {
    pub id: u32,
    pub record: TrackRecord,
}

pub fn parse_tracks(text: &str, path: &Path) -> Result<Vec<TrackLine>> {
    let mut out = Vec::new();
    for (line, raw) in data_lines(text) {
        let f = Fields::split(path, line, raw, 6)?;
        let confidence = if f.parts.len() > 6 {
            f.confidence(6)?
        } else {
            1.0
        };
        out.push(TrackLine {
            id: f.positive_id()?,
            record: TrackRecord {
                frame: f.frame()?,
                bbox: f.bbox()?,
                confidence,
            },
        });
    }
    Ok(out)
}

pub fn read_tracks(path: &Path) -> Result<TrackSet> {
    let lines = parse_tracks(&read_to_string(path)?, path)?;
    assemble(&lines, None)
}

/// Reads a track file together with its embedding sidecar, whose row `i`
/// holds the embedding banked for line `i` (all-zero when none was).
pub fn read_tracks_with_embeddings(tracks: &Path, embeddings: &Path) -> Result<TrackSet> {
    let lines = parse_tracks(&read_to_string(tracks)?, tracks)?;
    let rows = super::read_track_embeddings(embeddings, lines.len())?;
    assemble(&lines, Some(rows))
}

fn assemble(lines: &[TrackLine], embeddings: Option<Vec<Option<Embedding>>>) -> Result<TrackSet> {
    let mut by_id: BTreeMap<u32, Vec<(TrackRecord, Option<Embedding>)>> = BTreeMap::new();
    let mut embeddings = embeddings.map(Vec::into_iter);
    for line in lines {
        let emb = embeddings.as_mut().and_then(|it| it.next().flatten());
        by_id.entry(line.id).or_default().push((line.record, emb));
    }
    let tracklets = by_id
        .into_iter()
        .map(|(id, mut rows)| {
            rows.sort_by_key(|(r, _)| r.frame);
            let embeddings = rows
                .iter()
                .filter_map(|(r, e)| e.clone().map(|e| (r.frame, e)))
                .collect();
            Tracklet::new(id, rows.into_iter().map(|(r, _)| r).collect(), embeddings)
        })
        .collect::<Result<Vec<_>>>()?;
    TrackSet::new(tracklets)
}

/// `(tracklet index, record index)` for every output line, sorted by
/// `(frame, track id)` and stable otherwise.
pub(crate) fn line_order(ts: &TrackSet) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = ts
        .tracklets
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| (0..t.records.len()).map(move |ri| (ti, ri)))
        .collect();
    order.sort_by_key(|&(ti, ri)| (ts.tracklets[ti].records[ri].frame, ts.tracklets[ti].id));
    order
}

pub fn format_tracks(ts: &TrackSet) -> String {
    let mut out = String::new();
    for (ti, ri) in line_order(ts) {
        let t = &ts.tracklets[ti];
        let r = &t.records[ri];
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},-1,-1,-1",
            r.frame, t.id, r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h, r.confidence
        );
    }
    out
}

pub fn write_tracks(ts: &TrackSet, path: &Path) -> Result<()> {
    write_atomic(path, format_tracks(ts).as_bytes())
}

/// Detection lines in the order given; `embedding_index` is not written,
/// since it is implied by line order.
pub fn format_detections(dets: &[Detection]) -> String {
    let mut out = String::new();
    for d in dets {
        let b = &d.bbox;
        let _ = writeln!(
            out,
            "{},-1,{:.6},{:.6},{:.6},{:.6},{:.6},-1,-1,-1",
            d.frame, b.x, b.y, b.w, b.h, d.confidence
        );
    }
    out
}

pub fn write_detections(dets: &[Detection], path: &Path) -> Result<()> {
    write_atomic(path, format_detections(dets).as_bytes())
}

pub fn format_ground_truth(gt: &GroundTruth) -> String {
    let mut out = String::new();
    for (frame, boxes) in gt.frames() {
        for (id, b) in boxes {
            let _ = writeln!(
                out,
                "{frame},{id},{:.6},{:.6},{:.6},{:.6},1,1,1",
                b.x, b.y, b.w, b.h
            );
        }
    }
    out
}

pub fn write_ground_truth(gt: &GroundTruth, path: &Path) -> Result<()> {
    write_atomic(path, format_ground_truth(gt).as_bytes())
}
