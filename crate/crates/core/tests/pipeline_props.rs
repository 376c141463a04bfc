use std::collections::HashSet;

use proptest::prelude::*;
use trackforge::appearance::normalize;
use trackforge::io::{
    decode_embeddings, encode_embeddings, format_tracks, parse_tracks, read_tracks_with_embeddings,
    write_track_embeddings, write_tracks,
};
use trackforge::metrics::{evaluate, idsw};
use trackforge::refine::refine;
use trackforge::simulate::{generate, inject_cuts, inject_id_swaps, Cut, IdSwap};
use trackforge::tracker::run;
use trackforge::{
    iou, AppearanceConfig, BoundingBox, Detection, Embedding, MetricOptions, OnlineTracker,
    RefineConfig, ScenarioConfig, TrackerConfig,
};

fn small_scenario(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        num_ids: 6,
        frames: 80,
        seed,
        ..ScenarioConfig::default()
    }
}

fn embedding(axis: usize, wobble: f64) -> Embedding {
    let mut v = vec![0.0; 8];
    v[axis % 8] = 1.0;
    v[(axis + 1) % 8] = wobble;
    normalize(&v).unwrap()
}

/// Tracks parked at fixed slots, reached through two different histories.
fn park(offsets: &[(f64, f64)], frames: u32) -> (OnlineTracker, Vec<Embedding>) {
    let tracker = TrackerConfig {
        n_init: 1,
        ..TrackerConfig::default()
    };
    let appearance = AppearanceConfig {
        momentum: 0.0,
        ..AppearanceConfig::default()
    };
    let mut t = OnlineTracker::new(tracker, appearance).unwrap();
    let table: Vec<Embedding> = (0..offsets.len()).map(|i| embedding(i, 0.0)).collect();
    for f in 1..=frames {
        let fade = if f == frames { 0.0 } else { 1.0 };
        let dets: Vec<Detection> = offsets
            .iter()
            .enumerate()
            .map(|(i, (dx, dy))| Detection {
                frame: f,
                bbox: BoundingBox::new(200.0 * i as f64 + fade * dx, 300.0 + fade * dy, 40.0, 80.0)
                    .unwrap(),
                confidence: 0.95,
                embedding_index: i,
            })
            .collect();
        t.step(f, &dets, &table).unwrap();
    }
    (t, table)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn association_ignores_earlier_history(
        offsets in prop::collection::vec((-6.0..6.0f64, -6.0..6.0f64), 2..5),
        probes in prop::collection::vec((0usize..5, -30.0..30.0f64, -30.0..30.0f64, 0.05..1.0f64, 0.0..0.8f64), 0..8),
    ) {
        let n = offsets.len();
        let still = vec![(0.0, 0.0); n];
        let (mut a, table) = park(&still, 4);
        let (mut b, _) = park(&offsets, 4);
        for (ta, tb) in a.tracks().iter().zip(b.tracks()) {
            prop_assert_eq!(ta.last_box, tb.last_box);
            prop_assert_eq!(ta.bank.current(), tb.bank.current());
        }

        let mut emb = table.clone();
        let dets: Vec<Detection> = probes
            .iter()
            .enumerate()
            .map(|(k, &(slot, dx, dy, conf, wobble))| {
                emb.push(embedding(slot % n, wobble));
                Detection {
                    frame: 5,
                    bbox: BoundingBox::new(200.0 * (slot % n) as f64 + dx, 300.0 + dy, 40.0, 80.0).unwrap(),
                    confidence: conf,
                    embedding_index: table.len() + k,
                }
            })
            .collect();
        let ma = a.step(5, &dets, &emb).unwrap();
        let mb = b.step(5, &dets, &emb).unwrap();
        prop_assert_eq!(ma, mb);
    }

    #[test]
    fn each_frame_matches_one_to_one(seed in 0u64..1000) {
        let s = generate(&small_scenario(seed)).unwrap();
        let bundle = s.bundle().unwrap();
        let mut t = OnlineTracker::new(TrackerConfig::default(), AppearanceConfig::default()).unwrap();
        for (&frame, dets) in &bundle.detections {
            let matches = t.step(frame, dets, &bundle.embeddings).unwrap();
            let tracks: HashSet<u32> = matches.iter().map(|m| m.track_id).collect();
            let cols: HashSet<usize> = matches.iter().map(|m| m.detection).collect();
            prop_assert_eq!(tracks.len(), matches.len());
            prop_assert_eq!(cols.len(), matches.len());
        }
        let once = t.finish().unwrap();
        let again = run(&bundle, &TrackerConfig::default(), &AppearanceConfig::default()).unwrap();
        prop_assert_eq!(format_tracks(&once), format_tracks(&again));
    }

    #[test]
    fn refinement_conserves_records(seed in 0u64..1000, split in any::<bool>(), target in prop::option::of(1usize..10)) {
        let s = generate(&small_scenario(seed)).unwrap();
        let online = run(&s.bundle().unwrap(), &TrackerConfig::default(), &AppearanceConfig::default()).unwrap();
        let config = RefineConfig { enable_split: split, target_count: target, ..RefineConfig::default() };
        let out = refine(&online, &config).unwrap();
        prop_assert_eq!(out.tracks.record_count(), online.record_count());
        prop_assert!(out.after_connect <= out.after_split);
        prop_assert_eq!(out.after_connect, out.tracks.len());
    }

    #[test]
    fn injected_swaps_are_counted(
        seed in 0u64..1000,
        picks in prop::collection::btree_map(2u32..79, (1u32..7, 1u32..6), 1..4),
    ) {
        let mut config = small_scenario(seed);
        config.box_width = [12.0, 20.0];
        let s = generate(&config).unwrap();
        let swaps: Vec<IdSwap> = picks
            .iter()
            .map(|(&frame, &(a, k))| IdSwap { frame, ids: [a, (a - 1 + k) % 6 + 1] })
            .collect();
        for sw in &swaps {
            let boxes = s.ground_truth.frame(sw.frame);
            let find = |id: u32| boxes.iter().find(|(g, _)| *g == id).unwrap().1;
            prop_assume!(iou(&find(sw.ids[0]), &find(sw.ids[1])).unwrap() < 0.5);
        }
        let (swapped, log) = inject_id_swaps(&s.oracle_tracks().unwrap(), &swaps).unwrap();
        let expected: usize = log.iter().map(|l| l.expected_switches).sum();
        prop_assert_eq!(idsw(&s.ground_truth, &swapped, 0.5).unwrap(), expected);
    }

    #[test]
    fn cut_tracks_are_rejoined(seed in 0u64..1000, cuts in prop::collection::btree_set((1u32..7, 2u32..79), 1..6)) {
        let s = generate(&small_scenario(seed)).unwrap();
        let oracle = s.oracle_tracks().unwrap();
        let cuts: Vec<Cut> = cuts.into_iter().map(|(id, frame)| Cut { id, frame }).collect();
        let (fragmented, log) = inject_cuts(&oracle, &cuts).unwrap();
        prop_assert_eq!(log.len(), cuts.len());
        prop_assert_eq!(fragmented.len(), oracle.len() + cuts.len());
        prop_assert_eq!(fragmented.record_count(), oracle.record_count());

        let config = RefineConfig { enable_split: false, ..RefineConfig::default() };
        let out = refine(&fragmented, &config).unwrap();
        prop_assert_eq!(out.tracks.len(), oracle.len());
        let report = evaluate(&s.ground_truth, &out.tracks, &MetricOptions::default()).unwrap();
        prop_assert_eq!(report.hota, 1.0);
        prop_assert_eq!(report.idsw, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tracks_round_trip_through_files(seed in 0u64..1000) {
        let s = generate(&small_scenario(seed)).unwrap();
        let online = run(&s.bundle().unwrap(), &TrackerConfig::default(), &AppearanceConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (trk, emb) = (dir.path().join("t.txt"), dir.path().join("t.emb"));
        write_tracks(&online, &trk).unwrap();
        write_track_embeddings(&online, &emb).unwrap();
        let back = read_tracks_with_embeddings(&trk, &emb).unwrap();
        prop_assert_eq!(format_tracks(&back), format_tracks(&online));
        prop_assert_eq!(back.record_count(), online.record_count());
        let lines = parse_tracks(&format_tracks(&online), &trk).unwrap();
        prop_assert_eq!(lines.len(), online.record_count());
    }

    #[test]
    fn embedding_table_round_trips(rows in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 4), 0..20)) {
        let slices: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let bytes = encode_embeddings(4, &slices).unwrap();
        prop_assert_eq!(bytes.len(), 16 + 16 * rows.len());
        let (count, dim, values) = decode_embeddings(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!((count, dim), (rows.len(), 4));
        for (got, want) in values.iter().zip(rows.iter().flatten()) {
            prop_assert_eq!(*got, *want as f32);
        }
    }
}
