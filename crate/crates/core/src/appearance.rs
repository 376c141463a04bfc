//! Appearance features: unit-norm embeddings, cosine distance, per-track
//! feature banks and the tracklet-to-tracklet average distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tracklet::Tracklet;

/// A unit-norm appearance feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn dot(&self, other: &Embedding) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(dot(&self.values, &other.values))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L2-normalizes a raw feature vector.
pub fn normalize(values: &[f64]) -> Result<Embedding> {
    if values.is_empty() {
        return Err(Error::InvalidEmbedding("empty vector".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidEmbedding(format!(
            "non-finite component at index {i}"
        )));
    }
    let norm = dot(values, values).sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidEmbedding(
            "zero vector cannot be normalized".into(),
        ));
    }
    Ok(Embedding {
        values: values.iter().map(|v| v / norm).collect(),
    })
}

/// Cosine distance `1 - a·b` between unit embeddings, in `[0, 2]`.
pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    Ok((1.0 - a.dot(b)?).clamp(0.0, 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppearanceConfig {
    /// Match against the smoothed bank representative instead of the most
    /// recent banked embedding.
    pub use_ema: bool,
    /// Weight kept by the old representative on each update.
    pub momentum: f64,
    /// Raw history kept per bank (most recent entries win).
    pub max_history: usize,
}

impl Default for AppearanceConfig {
    fn default() -> Self {
        AppearanceConfig {
            use_ema: true,
            momentum: 0.9,
            max_history: 30,
        }
    }
}

impl AppearanceConfig {
    pub fn validate(&self) -> Result<()> {
        check_momentum(self.momentum)?;
        if self.max_history == 0 {
            return Err(Error::InvalidParameter(
                "appearance.max_history must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_momentum(momentum: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&momentum) {
        return Err(Error::InvalidParameter(format!(
            "momentum must lie in [0, 1], got {momentum}"
        )));
    }
    Ok(())
}

/// A track's appearance state: an exponentially smoothed representative
/// plus a bounded window of raw observations.
#[derive(Debug, Clone)]
pub struct FeatureBank {
    current: Embedding,
    history: Vec<(u32, Embedding)>,
    capacity: usize,
}

impl FeatureBank {
    pub fn new(frame: u32, first: Embedding, capacity: usize) -> Self {
        FeatureBank {
            current: first.clone(),
            history: vec![(frame, first)],
            capacity: capacity.max(1),
        }
    }

    pub fn current(&self) -> &Embedding {
        &self.current
    }

    pub fn latest(&self) -> &Embedding {
        // history is never empty
        &self.history[self.history.len() - 1].1
    }

    pub fn history(&self) -> &[(u32, Embedding)] {
        &self.history
    }

    /// Folds a new observation into the bank.
    pub fn update(&mut self, frame: u32, feature: Embedding, momentum: f64) -> Result<()> {
        check_momentum(momentum)?;
        if feature.dim() != self.current.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.current.dim(),
                actual: feature.dim(),
            });
        }
        if let Some(&(last, _)) = self.history.last() {
            if frame <= last {
                return Err(Error::Sequencing {
                    frame,
                    previous: last,
                });
            }
        }
        if momentum < 1.0 {
            let mixed: Vec<f64> = self
                .current
                .values
                .iter()
                .zip(&feature.values)
                .map(|(c, f)| momentum * c + (1.0 - momentum) * f)
                .collect();
            // Antipodal inputs at momentum 0.5 cancel out; take the newer observation.
            self.current = normalize(&mixed).unwrap_or_else(|_| feature.clone());
        }
        self.history.push((frame, feature));
        if self.history.len() > self.capacity {
            let excess = self.history.len() - self.capacity;
            self.history.drain(..excess);
        }
        Ok(())
    }
}

/// Mean cosine distance over every cross pair of the two embedding sets.
pub fn mean_pairwise_distance(a: &[&Embedding], b: &[&Embedding]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidEmbedding(
            "average distance needs non-empty embedding sets on both sides".into(),
        ));
    }
    let mut total = 0.0;
    for fa in a {
        for fb in b {
            total += cosine_distance(fa, fb)?;
        }
    }
    Ok(total / (a.len() * b.len()) as f64)
}

/// Picks at most `cap` embeddings spread evenly over the history, always
/// keeping the first and last. `cap == 0` keeps everything.
pub fn sample_history(history: &[(u32, Embedding)], cap: usize) -> Vec<&Embedding> {
    let n = history.len();
    if cap == 0 || n <= cap {
        return history.iter().map(|(_, e)| e).collect();
    }
    if cap == 1 {
        return vec![&history[n - 1].1];
    }
    (0..cap)
        .map(|k| &history[k * (n - 1) / (cap - 1)].1)
        .collect()
}

/// Average pairwise appearance distance between two tracklets' banked
/// embeddings, each side capped at `max_history` samples.
pub fn tracklet_distance(a: &Tracklet, b: &Tracklet, max_history: usize) -> Result<f64> {
    mean_pairwise_distance(
        &sample_history(&a.embeddings, max_history),
        &sample_history(&b.embeddings, max_history),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(values: &[f64]) -> Embedding {
        normalize(values).unwrap()
    }

    #[test]
    fn normalize_cases() {
        let e = unit(&[3.0, 4.0]);
        assert!((e.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((e.as_slice()[1] - 0.8).abs() < 1e-15);
        assert_eq!(unit(&[0.0, 1.0, 0.0]).as_slice(), &[0.0, 1.0, 0.0]);
        assert!(normalize(&[0.0, 0.0, 0.0]).is_err());
        assert!(normalize(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn distance_cases() {
        let x = unit(&[1.0, 0.0]);
        let y = unit(&[0.0, 1.0]);
        let nx = unit(&[-1.0, 0.0]);
        assert_eq!(cosine_distance(&x, &x).unwrap(), 0.0);
        assert_eq!(cosine_distance(&x, &y).unwrap(), 1.0);
        assert_eq!(cosine_distance(&x, &nx).unwrap(), 2.0);
        assert!(matches!(
            cosine_distance(&x, &unit(&[1.0, 0.0, 0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bank_momentum_extremes() {
        let x = unit(&[1.0, 0.0]);
        let y = unit(&[0.0, 1.0]);

        let mut replace = FeatureBank::new(1, x.clone(), 30);
        replace.update(2, y.clone(), 0.0).unwrap();
        assert_eq!(replace.current(), &y);

        let mut frozen = FeatureBank::new(1, x.clone(), 30);
        frozen.update(2, y.clone(), 1.0).unwrap();
        assert_eq!(frozen.current(), &x);
        assert_eq!(frozen.history().len(), 2);

        let mut half = FeatureBank::new(1, x, 30);
        half.update(2, y, 0.5).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((half.current().as_slice()[0] - s).abs() < 1e-12);
        assert!((half.current().as_slice()[1] - s).abs() < 1e-12);
    }

    #[test]
    fn bank_rejects_bad_updates() {
        let x = unit(&[1.0, 0.0]);
        let mut bank = FeatureBank::new(5, x.clone(), 30);
        assert!(matches!(
            bank.update(6, x.clone(), 1.5),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            bank.update(5, x.clone(), 0.5),
            Err(Error::Sequencing { .. })
        ));
        assert!(bank.update(6, unit(&[1.0, 0.0, 0.0]), 0.5).is_err());
    }

    #[test]
    fn bank_history_keeps_most_recent() {
        let x = unit(&[1.0, 0.0]);
        let mut bank = FeatureBank::new(1, x.clone(), 3);
        for f in 2..=10 {
            bank.update(f, x.clone(), 0.9).unwrap();
        }
        let frames: Vec<u32> = bank.history().iter().map(|(f, _)| *f).collect();
        assert_eq!(frames, vec![8, 9, 10]);
    }

    #[test]
    fn sample_history_is_even_and_bounded() {
        let x = unit(&[1.0, 0.0]);
        let hist: Vec<(u32, Embedding)> = (0..10).map(|f| (f, x.clone())).collect();
        assert_eq!(sample_history(&hist, 0).len(), 10);
        assert_eq!(sample_history(&hist, 20).len(), 10);
        assert_eq!(sample_history(&hist, 4).len(), 4);
        assert_eq!(sample_history(&hist, 1).len(), 1);
    }

    #[test]
    fn mean_distance_examples() {
        let x = unit(&[1.0, 0.0]);
        let y = unit(&[0.0, 1.0]);
        assert_eq!(mean_pairwise_distance(&[&x], &[&x]).unwrap(), 0.0);
        assert_eq!(mean_pairwise_distance(&[&x, &y], &[&x]).unwrap(), 0.5);
        assert!(mean_pairwise_distance(&[], &[&x]).is_err());
    }

    fn raw_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, dim)
            .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn normalize_is_unit_and_idempotent(v in raw_vec(8)) {
            let e = normalize(&v).unwrap();
            let n: f64 = e.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((n - 1.0).abs() < 1e-12);
            let again = normalize(e.as_slice()).unwrap();
            for (a, b) in e.as_slice().iter().zip(again.as_slice()) {
                prop_assert!((a - b).abs() < 1e-15);
            }
        }

        #[test]
        fn mean_distance_is_symmetric(
            a in prop::collection::vec(raw_vec(5), 1..5),
            b in prop::collection::vec(raw_vec(5), 1..5),
        ) {
            let a: Vec<Embedding> = a.iter().map(|v| normalize(v).unwrap()).collect();
            let b: Vec<Embedding> = b.iter().map(|v| normalize(v).unwrap()).collect();
            let ar: Vec<&Embedding> = a.iter().collect();
            let br: Vec<&Embedding> = b.iter().collect();
            let ab = mean_pairwise_distance(&ar, &br).unwrap();
            let ba = mean_pairwise_distance(&br, &ar).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((0.0..=2.0).contains(&ab));
        }
    }
}
