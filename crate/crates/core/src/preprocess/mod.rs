//! Corpus preparation: StandInit padding, 25 fps resampling, left/right
//! mirroring, min-max normalization and the shuffled 80/20 training split.

mod bezier;
mod dataset;

pub use bezier::{bezier_resample, HandleMode};
pub use dataset::{
    build_dataset, corpus_hash, read_dataset, write_dataset, Dataset, DatasetManifest,
    DatasetOptions, DatasetSummary, TrainingExample, DATASET_CSV, DATASET_MANIFEST,
};

use serde::{Deserialize, Serialize};

use crate::anim::{
    Frame, FrameAnimation, JointTable, Joints, Keyframe, KeyframeAnimation, LedState, Provenance,
    FRAME_DIM, JOINT_NAMES, NUM_JOINTS,
};
use crate::error::{Error, Result};

pub const STANDINIT_LEAD_FRAMES: u32 = 12;
pub const STANDINIT_TOLERANCE: f64 = 1e-6;

fn differs(a: &Joints, b: &Joints) -> bool {
    a.iter().zip(b).any(|(x, y)| (x - y).abs() > STANDINIT_TOLERANCE)
}

/// Adds a StandInit keyframe `lead` frames before the first and after the last
/// keyframe wherever the animation does not already begin or end there.
pub fn pad_standinit(anim: &KeyframeAnimation, standinit: &Joints, lead: u32) -> KeyframeAnimation {
    let mut out = anim.clone();
    if let Some(first) = anim.keyframes.first() {
        if differs(&first.joints, standinit) {
            let start = first.frame_index;
            for k in &mut out.keyframes {
                k.frame_index += lead;
            }
            for e in &mut out.led_events {
                e.onset_frame += lead;
            }
            out.keyframes.insert(
                0,
                Keyframe {
                    frame_index: start,
                    joints: *standinit,
                },
            );
        }
    }
    if let Some(last) = out.keyframes.last() {
        if differs(&last.joints, standinit) {
            let end = last.frame_index + lead;
            out.keyframes.push(Keyframe {
                frame_index: end,
                joints: *standinit,
            });
        }
    }
    out
}

/// Left/right mirror of one posture: arm chains swap sides, roll and yaw
/// joints flip sign, head yaw and hip roll flip in place.
pub fn mirror_joints(joints: &Joints, table: &JointTable) -> Result<Joints> {
    let mut out = [0.0; NUM_JOINTS];
    for (i, spec) in table.joints().iter().enumerate() {
        out[i] = spec.mirror_sign * joints[spec.partner(i)];
        if !spec.contains(out[i]) {
            return Err(Error::Limit {
                context: "mirrored posture (asymmetric limit table?)".into(),
                joint: spec.name.to_string(),
                value: out[i],
                min: spec.min_angle,
                max: spec.max_angle,
            });
        }
    }
    Ok(out)
}

/// Swaps the left-eye and right-eye LED blocks.
pub fn mirror_leds(leds: &LedState) -> LedState {
    let v = leds.values();
    let half = v.len() / 2;
    let mut out = Vec::with_capacity(v.len());
    out.extend_from_slice(&v[half..]);
    out.extend_from_slice(&v[..half]);
    LedState::new(out).expect("permutation of a valid state")
}

pub fn mirror_frame(frame: &Frame, table: &JointTable, swap_eyes: bool) -> Result<Frame> {
    Ok(Frame {
        joints: mirror_joints(&frame.joints, table)?,
        leds: if swap_eyes {
            mirror_leds(&frame.leds)
        } else {
            frame.leds.clone()
        },
    })
}

/// Mirrors every frame. LEDs are left untouched unless `swap_eyes` is set.
pub fn mirror(anim: &FrameAnimation, table: &JointTable, swap_eyes: bool) -> Result<FrameAnimation> {
    let frames = anim
        .frames
        .iter()
        .map(|f| mirror_frame(f, table, swap_eyes))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameAnimation {
        name: format!("{}_mirrored", anim.name),
        fps: anim.fps,
        valence: anim.valence,
        provenance: Provenance::Mirrored,
        frames,
    })
}

/// Per-joint (min, max) used to scale angles into [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<NormalizationEntry>", into = "Vec<NormalizationEntry>")]
pub struct NormalizationTable {
    min: Joints,
    max: Joints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationEntry {
    pub joint: String,
    pub min: f64,
    pub max: f64,
}

impl NormalizationTable {
    pub fn new(min: Joints, max: Joints) -> Result<Self> {
        for j in 0..NUM_JOINTS {
            if !(min[j].is_finite() && max[j].is_finite() && max[j] > min[j]) {
                return Err(Error::schema(
                    "normalization table",
                    JOINT_NAMES[j],
                    "max must exceed min",
                ));
            }
        }
        Ok(NormalizationTable { min, max })
    }

    pub fn from_limits(table: &JointTable) -> Self {
        let mut min = [0.0; NUM_JOINTS];
        let mut max = [0.0; NUM_JOINTS];
        for (j, spec) in table.joints().iter().enumerate() {
            min[j] = spec.min_angle;
            max[j] = spec.max_angle;
        }
        NormalizationTable { min, max }
    }

    /// Observed per-joint range over the given frames. Joints that never move
    /// fall back to their limit range.
    pub fn from_frames<'a>(
        frames: impl IntoIterator<Item = &'a Frame>,
        table: &JointTable,
    ) -> Self {
        let mut min = [f64::INFINITY; NUM_JOINTS];
        let mut max = [f64::NEG_INFINITY; NUM_JOINTS];
        for f in frames {
            for j in 0..NUM_JOINTS {
                min[j] = min[j].min(f.joints[j]);
                max[j] = max[j].max(f.joints[j]);
            }
        }
        for (j, spec) in table.joints().iter().enumerate() {
            if !(max[j] > min[j]) {
                min[j] = spec.min_angle;
                max[j] = spec.max_angle;
            }
        }
        NormalizationTable { min, max }
    }

    pub fn min(&self) -> &Joints {
        &self.min
    }

    pub fn max(&self) -> &Joints {
        &self.max
    }

    /// Scales the joint part of a 65-value frame vector; LEDs pass through.
    pub fn normalize(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), FRAME_DIM, "frame vector length");
        let mut out = values.to_vec();
        for j in 0..NUM_JOINTS {
            out[j] = (values[j] - self.min[j]) / (self.max[j] - self.min[j]);
        }
        out
    }

    pub fn denormalize(&self, values: &[f64]) -> Vec<f64> {
        assert!(values.len() >= NUM_JOINTS, "frame vector length");
        let mut out = values.to_vec();
        for j in 0..NUM_JOINTS {
            out[j] = self.min[j] + values[j] * (self.max[j] - self.min[j]);
        }
        out
    }

    pub fn denormalize_joints(&self, values: &[f64]) -> Joints {
        let mut out = [0.0; NUM_JOINTS];
        for j in 0..NUM_JOINTS {
            out[j] = self.min[j] + values[j] * (self.max[j] - self.min[j]);
        }
        out
    }
}

impl From<NormalizationTable> for Vec<NormalizationEntry> {
    fn from(t: NormalizationTable) -> Self {
        (0..NUM_JOINTS)
            .map(|j| NormalizationEntry {
                joint: JOINT_NAMES[j].to_string(),
                min: t.min[j],
                max: t.max[j],
            })
            .collect()
    }
}

impl TryFrom<Vec<NormalizationEntry>> for NormalizationTable {
    type Error = Error;
    fn try_from(entries: Vec<NormalizationEntry>) -> Result<Self> {
        if entries.len() != NUM_JOINTS {
            return Err(Error::schema(
                "normalization table",
                "entries",
                format!("expected {NUM_JOINTS}, got {}", entries.len()),
            ));
        }
        let mut min = [0.0; NUM_JOINTS];
        let mut max = [0.0; NUM_JOINTS];
        for (j, e) in entries.iter().enumerate() {
            if e.joint != JOINT_NAMES[j] {
                return Err(Error::schema(
                    "normalization table",
                    &e.joint,
                    format!("expected {} at position {j}", JOINT_NAMES[j]),
                ));
            }
            min[j] = e.min;
            max[j] = e.max;
        }
        NormalizationTable::new(min, max)
    }
}
