//! Fixtures shared by the benchmarks.

use trackforge::assignment::CostMatrix;
use trackforge::io::SequenceBundle;
use trackforge::simulate::{generate, Scenario};
use trackforge::{BoundingBox, ScenarioConfig, TrackSet};

/// Deterministic costs in `[0, 1)` with roughly a quarter of entries gated.
pub fn cost_matrix(rows: usize, cols: usize) -> CostMatrix {
    let mut state = 0x9e37_79b9_7f4a_7c15_u64;
    let mut m = CostMatrix::from_fn(rows, cols, |_, _| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    });
    m.gate_where(|_, _, c| c > 0.75);
    m
}

pub fn box_pairs(n: usize) -> Vec<(BoundingBox, BoundingBox)> {
    (0..n)
        .map(|i| {
            let f = i as f64;
            let a = BoundingBox::new(f * 3.0, 10.0, 30.0, 80.0).unwrap();
            let b = BoundingBox::new(f * 3.0 + (i % 40) as f64, 12.0, 28.0, 75.0).unwrap();
            (a, b)
        })
        .collect()
}

pub fn scenario(frames: u32) -> Scenario {
    generate(&ScenarioConfig {
        frames,
        seed: 11,
        ..ScenarioConfig::default()
    })
    .unwrap()
}

pub fn bundle(s: &Scenario) -> SequenceBundle {
    s.bundle().unwrap()
}

pub fn oracle(s: &Scenario) -> TrackSet {
    s.oracle_tracks().unwrap()
}
