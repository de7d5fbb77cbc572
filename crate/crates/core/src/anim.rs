//! Animation domain types: the joint table, eye-LED state, the sparse keyframe
//! representation used for authoring, and the dense 25 fps frame representation
//! used for training and generation.
//!
//! Joint vectors always follow [`JOINT_NAMES`]. LED vectors are ordered eye
//! (left, right), then LED index 0..8, then R, G, B.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write_bytes, Error, Result};

pub const NUM_JOINTS: usize = 17;
pub const NUM_LEDS: usize = 48;
/// Joints followed by LEDs.
pub const FRAME_DIM: usize = NUM_JOINTS + NUM_LEDS;
pub const FPS: u32 = 25;

pub type Joints = [f64; NUM_JOINTS];

pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "HeadYaw",
    "HeadPitch",
    "LShoulderPitch",
    "LShoulderRoll",
    "LElbowYaw",
    "LElbowRoll",
    "LWristYaw",
    "LHand",
    "RShoulderPitch",
    "RShoulderRoll",
    "RElbowYaw",
    "RElbowRoll",
    "RWristYaw",
    "RHand",
    "HipRoll",
    "HipPitch",
    "KneePitch",
];

const DEFAULT_LIMITS_JSON: &str = include_str!("../config/joint_limits.json");
const DEFAULT_STANDINIT_JSON: &str = include_str!("../config/standinit.json");

pub fn joint_index(name: &str) -> Option<usize> {
    JOINT_NAMES.iter().position(|n| *n == name)
}

/// Channel names of the 48 LED values, in vector order.
pub fn led_channel_names() -> Vec<String> {
    let mut names = Vec::with_capacity(NUM_LEDS);
    for eye in ["L", "R"] {
        for led in 0..8 {
            for c in ["r", "g", "b"] {
                names.push(format!("{eye}EyeLed{led}_{c}"));
            }
        }
    }
    names
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: &'static str,
    pub min_angle: f64,
    pub max_angle: f64,
    /// Index of the partner joint under left/right mirroring (`None` = itself).
    pub mirror_partner: Option<usize>,
    /// +1 or -1.
    pub mirror_sign: f64,
}

impl JointSpec {
    pub fn contains(&self, angle: f64) -> bool {
        angle.is_finite() && angle >= self.min_angle && angle <= self.max_angle
    }

    pub fn partner(&self, own_index: usize) -> usize {
        self.mirror_partner.unwrap_or(own_index)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointSpecFile {
    min: f64,
    max: f64,
    #[serde(default)]
    mirror_partner: Option<String>,
    mirror_sign: f64,
}

/// The canonical 17-entry joint table with limits and mirroring rules.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    joints: Vec<JointSpec>,
}

impl JointTable {
    /// Limits of the Pepper robot as shipped in `config/joint_limits.json`.
    pub fn pepper() -> Self {
        Self::from_json_str(DEFAULT_LIMITS_JSON, "built-in joint limits")
            .expect("shipped joint limit table is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&read_to_string(path)?, &path.display().to_string())
    }

    pub fn from_json_str(text: &str, context: &str) -> Result<Self> {
        let raw: BTreeMap<String, JointSpecFile> =
            serde_json::from_str(text).map_err(|e| Error::Parse {
                context: context.to_string(),
                message: e.to_string(),
            })?;
        for key in raw.keys() {
            if joint_index(key).is_none() {
                return Err(Error::schema(context, key, "unknown joint name"));
            }
        }
        let mut joints = Vec::with_capacity(NUM_JOINTS);
        for (i, name) in JOINT_NAMES.iter().enumerate() {
            let spec = raw
                .get(*name)
                .ok_or_else(|| Error::schema(context, *name, "missing joint"))?;
            if !(spec.min.is_finite() && spec.max.is_finite() && spec.min < spec.max) {
                return Err(Error::schema(context, *name, "min must be below max"));
            }
            if spec.mirror_sign != 1.0 && spec.mirror_sign != -1.0 {
                return Err(Error::schema(context, *name, "mirror_sign must be +1 or -1"));
            }
            let partner = match &spec.mirror_partner {
                None => None,
                Some(p) => {
                    let j = joint_index(p).ok_or_else(|| {
                        Error::schema(context, *name, format!("unknown mirror partner {p}"))
                    })?;
                    (j != i).then_some(j)
                }
            };
            joints.push(JointSpec {
                name,
                min_angle: spec.min,
                max_angle: spec.max,
                mirror_partner: partner,
                mirror_sign: spec.mirror_sign,
            });
        }
        let table = JointTable { joints };
        for (i, j) in table.joints.iter().enumerate() {
            let p = j.partner(i);
            let back = table.joints[p].partner(p);
            if back != i {
                return Err(Error::schema(
                    context,
                    j.name,
                    format!("mirror partner {} does not point back", JOINT_NAMES[p]),
                ));
            }
            if table.joints[p].mirror_sign != j.mirror_sign {
                return Err(Error::schema(context, j.name, "mirror signs of partners differ"));
            }
        }
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        let mut map = serde_json::Map::new();
        for (i, j) in self.joints.iter().enumerate() {
            let entry = JointSpecFile {
                min: j.min_angle,
                max: j.max_angle,
                mirror_partner: Some(JOINT_NAMES[j.partner(i)].to_string()),
                mirror_sign: j.mirror_sign,
            };
            map.insert(j.name.to_string(), serde_json::to_value(entry).unwrap());
        }
        serde_json::to_string_pretty(&map).unwrap()
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn get(&self, index: usize) -> &JointSpec {
        &self.joints[index]
    }

    /// Rejects the first out-of-limit angle, naming the joint.
    pub fn check(&self, joints: &Joints, context: &str) -> Result<()> {
        for (spec, &v) in self.joints.iter().zip(joints) {
            if !spec.contains(v) {
                return Err(Error::Limit {
                    context: context.to_string(),
                    joint: spec.name.to_string(),
                    value: v,
                    min: spec.min_angle,
                    max: spec.max_angle,
                });
            }
        }
        Ok(())
    }

    /// Clamps into limits, returning how many channels moved.
    pub fn clamp(&self, joints: &mut Joints) -> usize {
        let mut n = 0;
        for (spec, v) in self.joints.iter().zip(joints.iter_mut()) {
            let c = v.clamp(spec.min_angle, spec.max_angle);
            if c != *v {
                *v = c;
                n += 1;
            }
        }
        n
    }
}

impl Default for JointTable {
    fn default() -> Self {
        Self::pepper()
    }
}

/// The neutral symmetric standing posture shipped in `config/standinit.json`.
pub fn standinit() -> Joints {
    parse_posture(DEFAULT_STANDINIT_JSON, "built-in StandInit").expect("shipped StandInit is valid")
}

pub fn load_posture(path: &Path) -> Result<Joints> {
    parse_posture(&read_to_string(path)?, &path.display().to_string())
}

fn parse_posture(text: &str, context: &str) -> Result<Joints> {
    let raw: BTreeMap<String, f64> = serde_json::from_str(text).map_err(|e| Error::Parse {
        context: context.to_string(),
        message: e.to_string(),
    })?;
    named_joints(&raw, context)
}

fn named_joints(raw: &BTreeMap<String, f64>, context: &str) -> Result<Joints> {
    for key in raw.keys() {
        if joint_index(key).is_none() {
            return Err(Error::schema(context, key, "unknown joint name"));
        }
    }
    let mut out = [0.0; NUM_JOINTS];
    for (i, name) in JOINT_NAMES.iter().enumerate() {
        out[i] = *raw
            .get(*name)
            .ok_or_else(|| Error::schema(context, *name, "missing joint"))?;
    }
    Ok(out)
}

/// 48 eye-LED intensities in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LedState(Vec<f64>);

impl LedState {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != NUM_LEDS {
            return Err(Error::schema(
                "led state",
                "values",
                format!("expected {NUM_LEDS} values, got {}", values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::schema(
                "led state",
                format!("values[{i}]"),
                format!("{} outside [0, 1]", values[i]),
            ));
        }
        Ok(LedState(values))
    }

    pub fn uniform(value: f64) -> Self {
        LedState(vec![value.clamp(0.0, 1.0); NUM_LEDS])
    }

    /// Idle eyes: every channel at 1.0.
    pub fn white() -> Self {
        Self::uniform(1.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for LedState {
    fn default() -> Self {
        Self::white()
    }
}

impl TryFrom<Vec<f64>> for LedState {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        LedState::new(v)
    }
}

impl From<LedState> for Vec<f64> {
    fn from(s: LedState) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keyframe {
    pub frame_index: u32,
    pub joints: Joints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedEvent {
    pub onset_frame: u32,
    pub state: LedState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeAnimation {
    pub name: String,
    pub keyframes: Vec<Keyframe>,
    pub led_events: Vec<LedEvent>,
    pub valence: f64,
}

impl KeyframeAnimation {
    pub fn validate(&self, table: &JointTable) -> Result<()> {
        let ctx = self.name.as_str();
        if self.keyframes.len() < 2 {
            return Err(Error::schema(ctx, "keyframes", "at least 2 keyframes required"));
        }
        if self
            .keyframes
            .windows(2)
            .any(|w| w[1].frame_index <= w[0].frame_index)
        {
            return Err(Error::schema(ctx, "keyframes", "non-monotonic keyframes"));
        }
        if self
            .led_events
            .windows(2)
            .any(|w| w[1].onset_frame <= w[0].onset_frame)
        {
            return Err(Error::schema(ctx, "led_events", "non-monotonic led events"));
        }
        check_valence(self.valence, ctx)?;
        for (k, kf) in self.keyframes.iter().enumerate() {
            table.check(&kf.joints, &format!("{ctx} keyframe {k}"))?;
        }
        Ok(())
    }

    pub fn first_frame(&self) -> u32 {
        self.keyframes.first().map_or(0, |k| k.frame_index)
    }

    pub fn last_frame(&self) -> u32 {
        self.keyframes.last().map_or(0, |k| k.frame_index)
    }

    /// LED state holding at `frame`, white before the first event.
    pub fn led_state_at(&self, frame: u32) -> LedState {
        self.led_state_or(frame, &LedState::white())
    }

    pub fn led_state_or(&self, frame: u32, default: &LedState) -> LedState {
        let idx = self.led_events.partition_point(|e| e.onset_frame <= frame);
        if idx == 0 {
            default.clone()
        } else {
            self.led_events[idx - 1].state.clone()
        }
    }

    pub fn to_json(&self) -> String {
        let file = KeyframeFile {
            name: self.name.clone(),
            fps: FPS,
            valence: self.valence,
            keyframes: self
                .keyframes
                .iter()
                .map(|k| KeyframeEntry {
                    t: k.frame_index,
                    joints: JOINT_NAMES
                        .iter()
                        .zip(k.joints)
                        .map(|(n, v)| (n.to_string(), v))
                        .collect(),
                })
                .collect(),
            led_events: self
                .led_events
                .iter()
                .map(|e| LedEntry {
                    t: e.onset_frame,
                    values: e.state.values().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).unwrap()
    }

    pub fn from_json_str(text: &str, context: &str, table: &JointTable) -> Result<Self> {
        let file: KeyframeFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        if file.fps != FPS {
            return Err(Error::schema(context, "fps", format!("expected {FPS}, got {}", file.fps)));
        }
        let mut keyframes = Vec::with_capacity(file.keyframes.len());
        for (k, entry) in file.keyframes.iter().enumerate() {
            keyframes.push(Keyframe {
                frame_index: entry.t,
                joints: named_joints(&entry.joints, &format!("{context} keyframes[{k}]"))?,
            });
        }
        let mut led_events = Vec::with_capacity(file.led_events.len());
        for (k, entry) in file.led_events.into_iter().enumerate() {
            let state = LedState::new(entry.values).map_err(|e| match e {
                Error::Schema { field, message, .. } => {
                    Error::schema(context, format!("led_events[{k}].{field}"), message)
                }
                other => other,
            })?;
            led_events.push(LedEvent {
                onset_frame: entry.t,
                state,
            });
        }
        let anim = KeyframeAnimation {
            name: file.name,
            keyframes,
            led_events,
            valence: file.valence,
        };
        anim.validate(table).map_err(|e| match e {
            Error::Schema { field, message, .. } => Error::schema(context, field, message),
            Error::Limit {
                context: c,
                joint,
                value,
                min,
                max,
            } => Error::Limit {
                context: format!("{context}: {c}"),
                joint,
                value,
                min,
                max,
            },
            other => other,
        })?;
        Ok(anim)
    }
}

fn check_valence(valence: f64, ctx: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&valence) {
        return Err(Error::schema(ctx, "valence", format!("{valence} outside [0, 1]")));
    }
    Ok(())
}

pub fn load_keyframe_animation(path: &Path, table: &JointTable) -> Result<KeyframeAnimation> {
    KeyframeAnimation::from_json_str(&read_to_string(path)?, &path.display().to_string(), table)
}

pub fn save_keyframe_animation(anim: &KeyframeAnimation, path: &Path) -> Result<()> {
    write_bytes(path, anim.to_json().as_bytes())
}

/// Loads every `*.json` file of a directory, sorted by file name.
/// The `*.json` files of a corpus directory, sorted by path.
pub fn corpus_files(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn load_corpus(dir: &Path, table: &JointTable) -> Result<Vec<KeyframeAnimation>> {
    corpus_files(dir)?
        .iter()
        .map(|p| load_keyframe_animation(p, table))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyframeFile {
    name: String,
    fps: u32,
    valence: f64,
    keyframes: Vec<KeyframeEntry>,
    #[serde(default)]
    led_events: Vec<LedEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyframeEntry {
    t: u32,
    joints: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LedEntry {
    t: u32,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub joints: Joints,
    pub leds: LedState,
}

impl Frame {
    pub fn new(joints: Joints, leds: LedState, table: &JointTable) -> Result<Self> {
        table.check(&joints, "frame")?;
        Ok(Frame { joints, leds })
    }

    /// Joints followed by LEDs.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(FRAME_DIM);
        v.extend_from_slice(&self.joints);
        v.extend_from_slice(self.leds.values());
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Recorded,
    Mirrored,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAnimation {
    pub name: String,
    pub fps: u32,
    pub valence: f64,
    pub provenance: Provenance,
    pub frames: Vec<Frame>,
}

impl FrameAnimation {
    pub fn validate(&self, table: &JointTable) -> Result<()> {
        let ctx = self.name.as_str();
        if self.fps != FPS {
            return Err(Error::schema(ctx, "fps", format!("expected {FPS}, got {}", self.fps)));
        }
        if self.frames.len() < 2 {
            return Err(Error::schema(ctx, "frames", "at least 2 frames required"));
        }
        check_valence(self.valence, ctx)?;
        for (i, f) in self.frames.iter().enumerate() {
            table.check(&f.joints, &format!("{ctx} frame {i}"))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap()
    }

    pub fn from_json_str(text: &str, context: &str, table: &JointTable) -> Result<Self> {
        let anim: FrameAnimation = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        anim.validate(table)?;
        Ok(anim)
    }
}

pub fn save_frame_animation(anim: &FrameAnimation, path: &Path) -> Result<()> {
    write_bytes(path, anim.to_json().as_bytes())
}

pub fn load_frame_animation(path: &Path, table: &JointTable) -> Result<FrameAnimation> {
    FrameAnimation::from_json_str(&read_to_string(path)?, &path.display().to_string(), table)
}
