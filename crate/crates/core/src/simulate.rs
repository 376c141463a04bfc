//! Deterministic synthetic scenarios: irregular player motion, a noisy
//! detector and identity-conditioned embeddings.
//!
//! # Random source
//!
//! All randomness comes from ChaCha8 (`rand_chacha` 0.9). Every generator
//! is keyed by 32 bytes: `seed` and a purpose code, both little-endian u64,
//! then 16 zero bytes. Purposes are 0 motion, 1 detector, 2 embedding,
//! 100 clutter and 101 occlusion. Identity `k` reads ChaCha stream
//! `seed ^ k` and the two global generators read stream `seed`, so adding
//! identities leaves existing ones untouched. Each identity draws the same
//! number of values every frame whatever the outcome, keeping its streams
//! aligned across configurations.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::appearance::{normalize, Embedding};
use crate::error::{Error, Result};
use crate::geometry::{iou_unchecked, BoundingBox};
use crate::io::{encode_embeddings, write_detections, write_ground_truth, SequenceBundle};
use crate::metrics::GroundTruth;
use crate::tracker::Detection;
use crate::tracklet::{TrackRecord, TrackSet, Tracklet};

const PURPOSE_MOTION: u64 = 0;
const PURPOSE_DETECTOR: u64 = 1;
const PURPOSE_EMBEDDING: u64 = 2;
const PURPOSE_CLUTTER: u64 = 100;
const PURPOSE_OCCLUSION: u64 = 101;

const MIN_SCALE: f64 = 0.8;
const MAX_SCALE: f64 = 1.25;
const CLUTTER_CONF: (f64, f64) = (0.05, 0.5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionConfig {
    /// Speed range in pixels per frame.
    pub speed: [f64; 2],
    /// Per-frame probability of drawing a new direction and speed.
    pub p_turn: f64,
    /// Per-frame standard deviation of the log box scale.
    pub scale_drift: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            speed: [0.5, 6.0],
            p_turn: 0.05,
            scale_drift: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub p_miss: f64,
    /// Mean number of clutter boxes per frame.
    pub clutter_rate: f64,
    /// Standard deviation of the box jitter in pixels.
    pub jitter: f64,
    /// True detections score `1 - U(0, conf_spread)`.
    pub conf_spread: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            p_miss: 0.05,
            clutter_rate: 0.5,
            jitter: 1.0,
            conf_spread: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcclusionConfig {
    /// IoU above which the smaller of two boxes may be hidden.
    pub threshold: f64,
    pub p_drop: f64,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        OcclusionConfig {
            threshold: 0.3,
            p_drop: 0.3,
        }
    }
}

/// Exchange the labels of two identities from `frame` onwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdSwap {
    pub frame: u32,
    pub ids: [u32; 2],
}

/// Split tracklet `id` so that records from `frame` on get a fresh id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cut {
    pub id: u32,
    pub frame: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_ids: u32,
    pub frames: u32,
    /// Field width and height in pixels.
    pub field: [f64; 2],
    pub embed_dim: usize,
    /// Range of base box widths.
    pub box_width: [f64; 2],
    /// Range of height-to-width ratios.
    pub aspect: [f64; 2],
    pub motion: MotionConfig,
    pub detector: DetectorConfig,
    /// Expected norm of the Gaussian noise added to an identity vector.
    pub embedding_sigma: f64,
    pub occlusion: OcclusionConfig,
    /// Pairs `[a, b]` where `b` reuses `a`'s identity vector.
    pub appearance_twins: Vec<[u32; 2]>,
    pub id_swap_injections: Vec<IdSwap>,
    pub cut_injections: Vec<Cut>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            num_ids: 22,
            frames: 600,
            field: [4096.0, 1080.0],
            embed_dim: 32,
            box_width: [20.0, 60.0],
            aspect: [2.0, 3.0],
            motion: MotionConfig::default(),
            detector: DetectorConfig::default(),
            embedding_sigma: 0.1,
            occlusion: OcclusionConfig::default(),
            appearance_twins: Vec::new(),
            id_swap_injections: Vec::new(),
            cut_injections: Vec::new(),
            seed: 0,
        }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "scenario.{name} must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

fn check_non_negative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scenario.{name} must be finite and >= 0, got {v}"
        )));
    }
    Ok(())
}

fn check_range(name: &str, r: [f64; 2], positive: bool) -> Result<()> {
    let ok = r[0].is_finite()
        && r[1].is_finite()
        && r[0] <= r[1]
        && if positive { r[0] > 0.0 } else { r[0] >= 0.0 };
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "scenario.{name} must be an ordered range, got {r:?}"
        )));
    }
    Ok(())
}

impl ScenarioConfig {
    /// Default motion with every noise source switched off.
    pub fn noiseless() -> Self {
        ScenarioConfig {
            detector: DetectorConfig {
                p_miss: 0.0,
                clutter_rate: 0.0,
                jitter: 0.0,
                conf_spread: 0.0,
            },
            embedding_sigma: 0.0,
            occlusion: OcclusionConfig {
                threshold: 0.3,
                p_drop: 0.0,
            },
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ids == 0 {
            return Err(Error::InvalidParameter(
                "scenario.num_ids must be >= 1".into(),
            ));
        }
        if self.frames == 0 {
            return Err(Error::InvalidParameter(
                "scenario.frames must be >= 1".into(),
            ));
        }
        if self.embed_dim < 2 {
            return Err(Error::InvalidParameter(
                "scenario.embed_dim must be >= 2".into(),
            ));
        }
        if !self.field.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scenario.field must be positive, got {:?}",
                self.field
            )));
        }
        check_range("box_width", self.box_width, true)?;
        check_range("aspect", self.aspect, true)?;
        check_range("motion.speed", self.motion.speed, false)?;
        check_probability("motion.p_turn", self.motion.p_turn)?;
        check_non_negative("motion.scale_drift", self.motion.scale_drift)?;
        check_probability("detector.p_miss", self.detector.p_miss)?;
        check_non_negative("detector.clutter_rate", self.detector.clutter_rate)?;
        check_non_negative("detector.jitter", self.detector.jitter)?;
        check_probability("detector.conf_spread", self.detector.conf_spread)?;
        check_non_negative("embedding_sigma", self.embedding_sigma)?;
        check_probability("occlusion.threshold", self.occlusion.threshold)?;
        check_probability("occlusion.p_drop", self.occlusion.p_drop)?;
        let known = |id: u32| (1..=self.num_ids).contains(&id);
        for &[a, b] in &self.appearance_twins {
            if a == b || !known(a) || !known(b) {
                return Err(Error::InvalidParameter(format!(
                    "scenario.appearance_twins: invalid pair [{a}, {b}]"
                )));
            }
        }
        for s in &self.id_swap_injections {
            let [a, b] = s.ids;
            if a == b || !known(a) || !known(b) || s.frame == 0 {
                return Err(Error::InvalidParameter(format!(
                    "scenario.id_swap_injections: invalid swap {s:?}"
                )));
            }
        }
        for c in &self.cut_injections {
            if !known(c.id) || c.frame == 0 {
                return Err(Error::InvalidParameter(format!(
                    "scenario.cut_injections: invalid cut {c:?}"
                )));
            }
        }
        Ok(())
    }

    /// Rejects fields that cannot hold the requested players.
    fn check_satisfiable(&self) -> Result<()> {
        let [fw, fh] = self.field;
        let max_w = self.box_width[1] * MAX_SCALE;
        let max_h = max_w * self.aspect[1];
        if max_w >= fw || max_h >= fh {
            return Err(Error::Generation(format!(
                "field {fw}x{fh} cannot hold a {max_w:.1}x{max_h:.1} box"
            )));
        }
        let occupied = self.num_ids as f64 * max_w * max_h;
        if occupied > fw * fh {
            return Err(Error::Generation(format!(
                "{} identities of up to {max_w:.1}x{max_h:.1} px do not fit in a {fw}x{fh} field",
                self.num_ids
            )));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn stream(seed: u64, purpose: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&purpose.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Embedding {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        if let Ok(e) = normalize(&v) {
            return e;
        }
    }
}

struct Walker {
    x: f64,
    y: f64,
    base_w: f64,
    aspect: f64,
    log_scale: f64,
    vx: f64,
    vy: f64,
}

impl Walker {
    fn spawn(rng: &mut ChaCha8Rng, c: &ScenarioConfig) -> Self {
        let base_w = uniform(rng, c.box_width[0], c.box_width[1]);
        let aspect = uniform(rng, c.aspect[0], c.aspect[1]);
        let (w, h) = (base_w, base_w * aspect);
        let x = uniform(rng, 0.0, c.field[0] - w);
        let y = uniform(rng, 0.0, c.field[1] - h);
        let speed = uniform(rng, c.motion.speed[0], c.motion.speed[1]);
        let dir = uniform(rng, 0.0, TAU);
        Walker {
            x,
            y,
            base_w,
            aspect,
            log_scale: 0.0,
            vx: speed * dir.cos(),
            vy: speed * dir.sin(),
        }
    }

    fn bbox(&self) -> BoundingBox {
        let w = self.base_w * self.log_scale.exp();
        BoundingBox {
            x: self.x,
            y: self.y,
            w,
            h: w * self.aspect,
        }
    }

    fn advance(&mut self, rng: &mut ChaCha8Rng, c: &ScenarioConfig) {
        let turn = rng.random::<f64>();
        let speed = uniform(rng, c.motion.speed[0], c.motion.speed[1]);
        let dir = uniform(rng, 0.0, TAU);
        let drift = gaussian(rng);
        if turn < c.motion.p_turn {
            self.vx = speed * dir.cos();
            self.vy = speed * dir.sin();
        }
        self.log_scale =
            (self.log_scale + c.motion.scale_drift * drift).clamp(MIN_SCALE.ln(), MAX_SCALE.ln());
        let b = self.bbox();
        (self.x, self.vx) = reflect(self.x + self.vx, self.vx, c.field[0] - b.w);
        (self.y, self.vy) = reflect(self.y + self.vy, self.vy, c.field[1] - b.h);
    }
}

fn reflect(pos: f64, vel: f64, max: f64) -> (f64, f64) {
    if pos < 0.0 {
        ((-pos).min(max), -vel)
    } else if pos > max {
        ((2.0 * max - pos).max(0.0), -vel)
    } else {
        (pos, vel)
    }
}

/// A generated sequence with everything needed to score and test against it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub ground_truth: GroundTruth,
    /// Detections in file order; `embedding_index` is the position.
    pub detections: Vec<Detection>,
    pub embeddings: Vec<Embedding>,
    /// Source identity of each detection; `None` for clutter.
    pub sources: Vec<Option<u32>>,
    /// Identity vector of id `k` at index `k - 1`.
    pub identity_vectors: Vec<Embedding>,
}

pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    config.check_satisfiable()?;
    let n = config.num_ids as usize;
    let dim = config.embed_dim;
    let ids: Vec<u32> = (1..=config.num_ids).collect();

    let mut motion: Vec<ChaCha8Rng> = ids
        .iter()
        .map(|&k| stream(config.seed, PURPOSE_MOTION, config.seed ^ k as u64))
        .collect();
    let mut detector: Vec<ChaCha8Rng> = ids
        .iter()
        .map(|&k| stream(config.seed, PURPOSE_DETECTOR, config.seed ^ k as u64))
        .collect();
    let mut appearance: Vec<ChaCha8Rng> = ids
        .iter()
        .map(|&k| stream(config.seed, PURPOSE_EMBEDDING, config.seed ^ k as u64))
        .collect();
    let mut clutter = stream(config.seed, PURPOSE_CLUTTER, config.seed);
    let mut occlusion = stream(config.seed, PURPOSE_OCCLUSION, config.seed);

    let mut walkers: Vec<Walker> = motion
        .iter_mut()
        .map(|rng| Walker::spawn(rng, config))
        .collect();
    let mut identity_vectors: Vec<Embedding> = appearance
        .iter_mut()
        .map(|rng| random_unit(rng, dim))
        .collect();
    for &[a, b] in &config.appearance_twins {
        identity_vectors[b as usize - 1] = identity_vectors[a as usize - 1].clone();
    }
    // Per-component deviation, so `embedding_sigma` is the expected noise
    // norm whatever the dimension.
    let noise_scale = config.embedding_sigma / (dim as f64).sqrt();
    let clutter_count = if config.detector.clutter_rate > 0.0 {
        Some(
            Poisson::new(config.detector.clutter_rate)
                .map_err(|e| Error::Generation(e.to_string()))?,
        )
    } else {
        None
    };

    let mut gt_entries = Vec::with_capacity(n * config.frames as usize);
    let mut detections = Vec::new();
    let mut embeddings = Vec::new();
    let mut sources = Vec::new();

    for frame in 1..=config.frames {
        if frame > 1 {
            for (w, rng) in walkers.iter_mut().zip(motion.iter_mut()) {
                w.advance(rng, config);
            }
        }
        let boxes: Vec<BoundingBox> = walkers.iter().map(Walker::bbox).collect();
        for (i, b) in boxes.iter().enumerate() {
            gt_entries.push((frame, ids[i], *b));
        }

        let mut hidden = vec![false; n];
        for i in 0..n {
            for j in i + 1..n {
                if iou_unchecked(&boxes[i], &boxes[j]) > config.occlusion.threshold
                    && occlusion.random::<f64>() < config.occlusion.p_drop
                {
                    let smaller = if boxes[j].area() <= boxes[i].area() {
                        j
                    } else {
                        i
                    };
                    hidden[smaller] = true;
                }
            }
        }

        for i in 0..n {
            let rng = &mut detector[i];
            let miss = rng.random::<f64>() < config.detector.p_miss;
            let jitter: [f64; 4] = std::array::from_fn(|_| config.detector.jitter * gaussian(rng));
            let confidence = 1.0 - config.detector.conf_spread * rng.random::<f64>();
            let noise: Vec<f64> = (0..dim).map(|_| gaussian(&mut appearance[i])).collect();
            if miss || hidden[i] {
                continue;
            }
            let b = &boxes[i];
            let bbox = BoundingBox {
                x: b.x + jitter[0],
                y: b.y + jitter[1],
                w: (b.w + jitter[2]).max(0.5 * b.w),
                h: (b.h + jitter[3]).max(0.5 * b.h),
            };
            let base = &identity_vectors[i];
            let embedding = if config.embedding_sigma == 0.0 {
                base.clone()
            } else {
                let v: Vec<f64> = base
                    .as_slice()
                    .iter()
                    .zip(&noise)
                    .map(|(m, z)| m + noise_scale * z)
                    .collect();
                normalize(&v).unwrap_or_else(|_| base.clone())
            };
            detections.push(Detection {
                frame,
                bbox,
                confidence,
                embedding_index: detections.len(),
            });
            embeddings.push(embedding);
            sources.push(Some(ids[i]));
        }

        let extra = clutter_count
            .as_ref()
            .map_or(0, |d| d.sample(&mut clutter) as usize);
        for _ in 0..extra {
            let w = uniform(&mut clutter, config.box_width[0], config.box_width[1]);
            let h = w * uniform(&mut clutter, config.aspect[0], config.aspect[1]);
            let x = uniform(&mut clutter, 0.0, config.field[0] - w);
            let y = uniform(&mut clutter, 0.0, config.field[1] - h);
            let confidence = uniform(&mut clutter, CLUTTER_CONF.0, CLUTTER_CONF.1);
            let embedding = random_unit(&mut clutter, dim);
            detections.push(Detection {
                frame,
                bbox: BoundingBox { x, y, w, h },
                confidence,
                embedding_index: detections.len(),
            });
            embeddings.push(embedding);
            sources.push(None);
        }
    }

    Ok(Scenario {
        config: config.clone(),
        ground_truth: GroundTruth::from_entries(gt_entries)?,
        detections,
        embeddings,
        sources,
        identity_vectors,
    })
}

/// What one injected cut produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CutLog {
    /// Tracklet that was split (the original id or an earlier fragment).
    pub from: u32,
    pub frame: u32,
    /// Fresh id of the later part.
    pub fragment: u32,
}

/// What one injected label swap produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SwapLog {
    pub frame: u32,
    pub ids: [u32; 2],
    /// Switches an evaluator should count for this swap when the input
    /// tracks equal the ground truth.
    pub expected_switches: usize,
}

/// Splits tracklets at the given frames. Several cuts on one id apply to
/// whichever fragment of it holds the frame.
pub fn inject_cuts(ts: &TrackSet, cuts: &[Cut]) -> Result<(TrackSet, Vec<CutLog>)> {
    let mut tracklets = ts.tracklets.clone();
    let first_fresh = ts.max_id() + 1;
    let mut lineage: Vec<(u32, u32)> = tracklets.iter().map(|t| (t.id, t.id)).collect();
    let mut log = Vec::with_capacity(cuts.len());
    let mut ordered = cuts.to_vec();
    ordered.sort_by_key(|c| (c.id, c.frame));
    for cut in ordered {
        let target = tracklets.iter().position(|t| {
            lineage
                .iter()
                .any(|&(piece, root)| piece == t.id && root == cut.id)
                && t.first_frame() < cut.frame
                && t.last_frame() >= cut.frame
        });
        let Some(ti) = target else {
            return Err(Error::Data(format!(
                "cannot cut tracklet {} at frame {}: no fragment spans it",
                cut.id, cut.frame
            )));
        };
        let next_id = first_fresh + log.len() as u32;
        let t = &mut tracklets[ti];
        let at = t.records.partition_point(|r| r.frame < cut.frame);
        let e_at = t.embeddings.partition_point(|(f, _)| *f < cut.frame);
        let piece = Tracklet {
            id: next_id,
            records: t.records.split_off(at),
            embeddings: t.embeddings.split_off(e_at),
        };
        log.push(CutLog {
            from: t.id,
            frame: cut.frame,
            fragment: next_id,
        });
        lineage.push((next_id, cut.id));
        tracklets.push(piece);
    }
    Ok((TrackSet::new(tracklets)?, log))
}

/// Exchanges the labels of two tracklets from a frame onwards, in order.
pub fn inject_id_swaps(ts: &TrackSet, swaps: &[IdSwap]) -> Result<(TrackSet, Vec<SwapLog>)> {
    let mut tracklets = ts.tracklets.clone();
    let mut log = Vec::with_capacity(swaps.len());
    for s in swaps {
        let [a, b] = s.ids;
        let find = |id: u32, ts: &[Tracklet]| {
            ts.iter()
                .position(|t| t.id == id)
                .ok_or_else(|| Error::Data(format!("cannot swap: no tracklet {id}")))
        };
        let (ia, ib) = (find(a, &tracklets)?, find(b, &tracklets)?);
        let spans = |t: &Tracklet| t.first_frame() < s.frame && t.last_frame() >= s.frame;
        let expected_switches =
            usize::from(spans(&tracklets[ia])) + usize::from(spans(&tracklets[ib]));

        let tail = |t: &mut Tracklet| {
            let at = t.records.partition_point(|r| r.frame < s.frame);
            let e_at = t.embeddings.partition_point(|(f, _)| *f < s.frame);
            (t.records.split_off(at), t.embeddings.split_off(e_at))
        };
        let (ra, ea) = tail(&mut tracklets[ia]);
        let (rb, eb) = tail(&mut tracklets[ib]);
        tracklets[ia].records.extend(rb);
        tracklets[ia].embeddings.extend(eb);
        tracklets[ib].records.extend(ra);
        tracklets[ib].embeddings.extend(ea);
        log.push(SwapLog {
            frame: s.frame,
            ids: s.ids,
            expected_switches,
        });
    }
    tracklets.retain(|t| !t.records.is_empty());
    Ok((TrackSet::new(tracklets)?, log))
}

type IdentityTrack = (Vec<TrackRecord>, Vec<(u32, Embedding)>);

impl Scenario {
    pub fn bundle(&self) -> Result<SequenceBundle> {
        let mut frames = std::collections::BTreeMap::new();
        for d in &self.detections {
            frames.entry(d.frame).or_insert_with(Vec::new).push(*d);
        }
        SequenceBundle::new(frames, self.embeddings.clone())
    }

    /// Ground truth as a track set, carrying each detected box's embedding.
    pub fn oracle_tracks(&self) -> Result<TrackSet> {
        let mut per_id: Vec<IdentityTrack> =
            vec![(Vec::new(), Vec::new()); self.config.num_ids as usize];
        for (frame, boxes) in self.ground_truth.frames() {
            for (id, b) in boxes {
                per_id[*id as usize - 1].0.push(TrackRecord {
                    frame,
                    bbox: *b,
                    confidence: 1.0,
                });
            }
        }
        for (d, src) in self.detections.iter().zip(&self.sources) {
            if let Some(id) = src {
                per_id[*id as usize - 1]
                    .1
                    .push((d.frame, self.embeddings[d.embedding_index].clone()));
            }
        }
        let tracklets = per_id
            .into_iter()
            .enumerate()
            .filter(|(_, (records, _))| !records.is_empty())
            .map(|(i, (records, embeddings))| Tracklet::new(i as u32 + 1, records, embeddings))
            .collect::<Result<Vec<_>>>()?;
        TrackSet::new(tracklets)
    }

    /// Oracle tracks with the configured swaps, then cuts, applied.
    pub fn injected_tracks(&self) -> Result<(TrackSet, Vec<SwapLog>, Vec<CutLog>)> {
        let (swapped, swaps) =
            inject_id_swaps(&self.oracle_tracks()?, &self.config.id_swap_injections)?;
        let (cut, cuts) = inject_cuts(&swapped, &self.config.cut_injections)?;
        Ok((cut, swaps, cuts))
    }

    /// Writes `gt.txt`, `det.txt` and `emb.bin` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_ground_truth(&self.ground_truth, &dir.join("gt.txt"))?;
        write_detections(&self.detections, &dir.join("det.txt"))?;
        let rows: Vec<&[f64]> = self.embeddings.iter().map(Embedding::as_slice).collect();
        let bytes = encode_embeddings(self.config.embed_dim, &rows)?;
        let path = dir.join("emb.bin");
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            num_ids: 4,
            frames: 30,
            field: [800.0, 400.0],
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn noiseless_detections_equal_ground_truth() {
        let s = generate(&ScenarioConfig {
            num_ids: 4,
            frames: 30,
            ..ScenarioConfig::noiseless()
        })
        .unwrap();
        assert_eq!(s.detections.len(), 4 * 30);
        for (d, src) in s.detections.iter().zip(&s.sources) {
            let id = src.unwrap();
            let gt = s
                .ground_truth
                .frame(d.frame)
                .iter()
                .find(|(g, _)| *g == id)
                .unwrap()
                .1;
            assert_eq!(d.bbox, gt);
            assert_eq!(d.confidence, 1.0);
            assert_eq!(
                s.embeddings[d.embedding_index],
                s.identity_vectors[id as usize - 1]
            );
        }
    }

    #[test]
    fn full_miss_gives_no_true_detections() {
        let mut c = small();
        c.detector.p_miss = 1.0;
        c.detector.clutter_rate = 0.0;
        let s = generate(&c).unwrap();
        assert!(s.detections.is_empty());
        assert_eq!(s.ground_truth.box_count(), 4 * 30);
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.detections, b.detections);
        assert_eq!(a.embeddings, b.embeddings);
        assert_eq!(a.ground_truth, b.ground_truth);
        let mut c = small();
        c.seed = 1;
        assert_ne!(generate(&c).unwrap().ground_truth, a.ground_truth);
    }

    #[test]
    fn adding_identities_keeps_existing_trajectories() {
        let a = generate(&small()).unwrap();
        let b = generate(&ScenarioConfig {
            num_ids: 6,
            ..small()
        })
        .unwrap();
        for f in 1..=30 {
            assert_eq!(a.ground_truth.frame(f), &b.ground_truth.frame(f)[..4]);
        }
    }

    #[test]
    fn boxes_stay_in_field() {
        let mut c = small();
        c.motion.speed = [20.0, 40.0];
        let s = generate(&c).unwrap();
        for (_, boxes) in s.ground_truth.frames() {
            for (_, b) in boxes {
                assert!(
                    b.x >= 0.0
                        && b.y >= 0.0
                        && b.right() <= 800.0 + 1e-9
                        && b.bottom() <= 400.0 + 1e-9
                );
            }
        }
    }

    #[test]
    fn crowded_field_is_a_generation_error() {
        let c = ScenarioConfig {
            field: [100.0, 300.0],
            ..ScenarioConfig::default()
        };
        assert!(matches!(generate(&c), Err(Error::Generation(_))));
    }

    #[test]
    fn invalid_probability_rejected() {
        let mut c = small();
        c.detector.p_miss = 1.5;
        assert!(matches!(c.validate(), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn cuts_are_logged_and_conserve_records() {
        let s = generate(&small()).unwrap();
        let ts = s.oracle_tracks().unwrap();
        let (cut, log) = inject_cuts(
            &ts,
            &[
                Cut { id: 2, frame: 10 },
                Cut { id: 2, frame: 20 },
                Cut { id: 3, frame: 5 },
            ],
        )
        .unwrap();
        assert_eq!(cut.len(), ts.len() + 3);
        assert_eq!(log.len(), 3);
        assert_eq!(cut.record_count(), ts.record_count());
        assert_eq!(log[1].from, log[0].fragment);
        let (same, none) = inject_cuts(&ts, &[]).unwrap();
        assert_eq!(same, ts);
        assert!(none.is_empty());
        assert!(inject_cuts(&ts, &[Cut { id: 1, frame: 1 }]).is_err());
    }

    #[test]
    fn swaps_exchange_tails() {
        let s = generate(&small()).unwrap();
        let ts = s.oracle_tracks().unwrap();
        let (sw, log) = inject_id_swaps(
            &ts,
            &[IdSwap {
                frame: 11,
                ids: [1, 2],
            }],
        )
        .unwrap();
        assert_eq!(log[0].expected_switches, 2);
        assert_eq!(
            sw.get(1).unwrap().records[10],
            ts.get(2).unwrap().records[10]
        );
        assert_eq!(sw.get(1).unwrap().records[9], ts.get(1).unwrap().records[9]);
        assert_eq!(sw.record_count(), ts.record_count());
    }

    #[test]
    fn twins_share_identity_vectors() {
        let c = ScenarioConfig {
            appearance_twins: vec![[1, 3]],
            ..small()
        };
        let s = generate(&c).unwrap();
        assert_eq!(s.identity_vectors[0], s.identity_vectors[2]);
        assert_ne!(s.identity_vectors[0], s.identity_vectors[1]);
    }
}
