//! Seeded synthetic keyframe corpora for tests, examples and the reference
//! training run.
//!
//! Every animation starts and ends at StandInit. In between, keyframes move
//! the body along one random direction in joint space, scaled by a
//! per-animation intensity, and the eyes take a saturated color that shifts
//! from blue (low valence) to yellow (high valence).

use crate::anim::{
    standinit, JointTable, Keyframe, KeyframeAnimation, LedEvent, LedState, NUM_JOINTS, NUM_LEDS,
};
use crate::nn::RngStream;

pub const REFERENCE_SEED: u64 = 42;
pub const REFERENCE_ANIMATIONS: usize = 10;
pub const REFERENCE_FRAMES: u32 = 100;

/// 10 animations of 100 frames each: 1000 recorded frames, 2000 examples
/// after mirroring.
pub fn reference_corpus() -> Vec<KeyframeAnimation> {
    synthetic_corpus(REFERENCE_SEED, REFERENCE_ANIMATIONS, REFERENCE_FRAMES)
}

fn eye_color(valence: f64) -> [f64; 3] {
    [valence, valence * 0.9, 1.0 - valence]
}

pub fn synthetic_corpus(seed: u64, n_animations: usize, frames: u32) -> Vec<KeyframeAnimation> {
    assert!(frames >= 8, "synthetic animations need at least 8 frames");
    let table = JointTable::pepper();
    let rest = standinit();
    let mut rng = RngStream::new(seed);
    (0..n_animations)
        .map(|i| {
            let valence = [0.0, 0.5, 1.0][i % 3];
            let intensity = rng.uniform_range(0.15, 0.6);
            let direction: Vec<f64> = (0..NUM_JOINTS).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let last = frames - 1;
            let n_inner = 3 + rng.below(4) as u32;
            let mut keyframes = vec![Keyframe {
                frame_index: 0,
                joints: rest,
            }];
            for k in 1..=n_inner {
                let frame_index = last * k / (n_inner + 1);
                let swing = if k % 2 == 1 { 1.0 } else { -0.5 } * rng.uniform_range(0.6, 1.0);
                let mut joints = rest;
                for j in 0..NUM_JOINTS {
                    let spec = table.get(j);
                    let span = spec.max_angle - spec.min_angle;
                    let q = joints[j]
                        + intensity * swing * direction[j] * span * 0.5
                        + rng.uniform_range(-0.02, 0.02) * span;
                    // margin so smooth handles do not overshoot the limits
                    joints[j] = q.clamp(spec.min_angle + 0.1 * span, spec.max_angle - 0.1 * span);
                }
                keyframes.push(Keyframe {
                    frame_index,
                    joints,
                });
            }
            keyframes.push(Keyframe {
                frame_index: last,
                joints: rest,
            });

            let color = eye_color(valence);
            let mut led_events = Vec::new();
            for (n, onset) in [0, last / 3, 2 * last / 3].into_iter().enumerate() {
                let level = if n == 1 { 0.6 } else { 1.0 };
                let values: Vec<f64> = (0..NUM_LEDS)
                    .map(|c| (color[c % 3] * level).clamp(0.0, 1.0))
                    .collect();
                led_events.push(LedEvent {
                    onset_frame: onset,
                    state: LedState::new(values).expect("values in [0, 1]"),
                });
            }
            KeyframeAnimation {
                name: format!("synthetic_{i:02}"),
                keyframes,
                led_events,
                valence,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{build_dataset, DatasetOptions};

    #[test]
    fn reference_sizes() {
        let corpus = reference_corpus();
        assert_eq!(corpus.len(), 10);
        let table = JointTable::pepper();
        for a in &corpus {
            a.validate(&table).unwrap();
            assert_eq!(a.first_frame(), 0);
            assert_eq!(a.last_frame(), 99);
        }
        let (ds, _, summary) = build_dataset(&corpus, 42, &DatasetOptions::default()).unwrap();
        assert_eq!(summary.frames, 1000);
        assert_eq!(ds.len(), 2000);
        assert_eq!(ds.n_train, 1600);
    }

    #[test]
    fn seeded() {
        assert_eq!(synthetic_corpus(3, 4, 30), synthetic_corpus(3, 4, 30));
        assert_ne!(synthetic_corpus(3, 4, 30), synthetic_corpus(4, 4, 30));
    }
}
