use serde::{Deserialize, Serialize};

use crate::anim::{Frame, FrameAnimation, JointTable, KeyframeAnimation, Provenance, FPS, NUM_JOINTS};

/// How Bezier handles are placed around each keyframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandleMode {
    /// Catmull-Rom tangents at interior keyframes, flat at the first and last.
    #[default]
    Smooth,
    /// Handles on the chord: piecewise linear motion.
    Linear,
}

/// Slope (rad/frame) of every joint at every keyframe.
fn tangents(anim: &KeyframeAnimation, mode: HandleMode) -> Vec<[f64; NUM_JOINTS]> {
    let kf = &anim.keyframes;
    let n = kf.len();
    let mut out = vec![[0.0; NUM_JOINTS]; n];
    if mode == HandleMode::Linear {
        return out;
    }
    for k in 1..n.saturating_sub(1) {
        let dt = (kf[k + 1].frame_index - kf[k - 1].frame_index) as f64;
        for j in 0..NUM_JOINTS {
            out[k][j] = (kf[k + 1].joints[j] - kf[k - 1].joints[j]) / dt;
        }
    }
    out
}

/// The four Bezier ordinates of joint `j` on segment `k` (values only; the
/// time ordinates sit at thirds of the segment).
pub(crate) fn segment_ordinates(
    anim: &KeyframeAnimation,
    slopes: &[[f64; NUM_JOINTS]],
    mode: HandleMode,
    k: usize,
    j: usize,
) -> [f64; 4] {
    let a = &anim.keyframes[k];
    let b = &anim.keyframes[k + 1];
    let (p0, p3) = (a.joints[j], b.joints[j]);
    match mode {
        HandleMode::Linear => [p0, p0 + (p3 - p0) / 3.0, p0 + 2.0 * (p3 - p0) / 3.0, p3],
        HandleMode::Smooth => {
            let third = (b.frame_index - a.frame_index) as f64 / 3.0;
            [p0, p0 + slopes[k][j] * third, p3 - slopes[k + 1][j] * third, p3]
        }
    }
}

fn cubic(p: [f64; 4], s: f64) -> f64 {
    let u = 1.0 - s;
    u * u * u * p[0] + 3.0 * u * u * s * p[1] + 3.0 * u * s * s * p[2] + s * s * s * p[3]
}

/// Samples a keyframe animation at every integer frame between its first and
/// last keyframe, interpolating each joint with a cubic Bezier segment and
/// holding LED states between events. Overshoot past a joint limit is clamped.
pub fn bezier_resample(
    anim: &KeyframeAnimation,
    table: &JointTable,
    mode: HandleMode,
) -> FrameAnimation {
    let slopes = tangents(anim, mode);
    let first = anim.first_frame();
    let last = anim.last_frame();
    let mut frames = Vec::with_capacity((last - first + 1) as usize);
    let mut seg = 0;
    let mut clamped = 0;
    for t in first..=last {
        while seg + 2 < anim.keyframes.len() && anim.keyframes[seg + 1].frame_index <= t {
            seg += 1;
        }
        let a = &anim.keyframes[seg];
        let b = &anim.keyframes[seg + 1];
        let mut joints = if t == a.frame_index {
            a.joints
        } else if t == b.frame_index {
            b.joints
        } else {
            let s = (t - a.frame_index) as f64 / (b.frame_index - a.frame_index) as f64;
            let mut j = [0.0; NUM_JOINTS];
            for (idx, v) in j.iter_mut().enumerate() {
                *v = cubic(segment_ordinates(anim, &slopes, mode, seg, idx), s);
            }
            j
        };
        clamped += table.clamp(&mut joints);
        frames.push(Frame {
            joints,
            leds: anim.led_state_at(t),
        });
    }
    if clamped > 0 {
        log::warn!(
            "{}: clamped {clamped} interpolated joint values into limits",
            anim.name
        );
    }
    FrameAnimation {
        name: anim.name.clone(),
        fps: FPS,
        valence: anim.valence,
        provenance: Provenance::Recorded,
        frames,
    }
}
