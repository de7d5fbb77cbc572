use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{condition, sphere_longitudes, Axis, LatentTrajectory, TorusGrid};
use crate::anim::{
    load_frame_animation, save_frame_animation, Frame, FrameAnimation, JointTable, LedState,
    Provenance, FPS, FRAME_DIM, JOINT_NAMES, NUM_JOINTS,
};
use crate::cvae::CvaeModel;
use crate::error::{read_to_string, write_bytes, Error, Result};
use crate::nn::Matrix;

pub const LIBRARY_MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    #[default]
    Torus,
    Sphere,
}

/// Which trajectories to sample and which labels to decode them with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationSpec {
    pub radii: Vec<f64>,
    /// Evaluation steps per control-point interval, one entry per radius.
    pub steps: Vec<usize>,
    pub valences: Vec<f64>,
    pub axes: Vec<Axis>,
    pub n_longitudes: usize,
    pub n_points: usize,
    pub grid: GridKind,
}

impl Default for GenerationSpec {
    fn default() -> Self {
        GenerationSpec {
            radii: vec![3.0, 4.0, 5.0],
            steps: vec![15, 20, 25],
            valences: vec![0.0, 0.5, 1.0],
            axes: Axis::ALL.to_vec(),
            n_longitudes: 8,
            n_points: 20,
            grid: GridKind::Torus,
        }
    }
}

impl GenerationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(format!("generation spec: {m}")));
        if self.radii.is_empty() || self.valences.is_empty() || self.axes.is_empty() {
            return bad("radii, valences and axes must be non-empty".into());
        }
        if self.steps.len() != self.radii.len() {
            return bad(format!(
                "{} step counts given for {} radii",
                self.steps.len(),
                self.radii.len()
            ));
        }
        if let Some(r) = self.radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return bad(format!("radius {r} must be positive"));
        }
        if self.steps.contains(&0) {
            return bad("steps must be at least 1".into());
        }
        if let Some(c) = self.valences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return bad(format!("valence {c} outside [0, 1]"));
        }
        if self.n_longitudes == 0 || self.n_points < 4 {
            return bad("need at least 1 longitude and 4 points per longitude".into());
        }
        Ok(())
    }

    pub fn trajectory_count(&self) -> usize {
        self.radii.len() * self.axes.len() * self.n_longitudes
    }

    pub fn animation_count(&self) -> usize {
        self.trajectory_count() * self.valences.len()
    }
}

/// All trajectories in enumeration order: radius, then axis, then longitude.
pub fn trajectories(spec: &GenerationSpec) -> Result<Vec<LatentTrajectory>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.trajectory_count());
    for (&radius, &steps) in spec.radii.iter().zip(&spec.steps) {
        for &axis in &spec.axes {
            match spec.grid {
                GridKind::Torus => {
                    let grid = TorusGrid {
                        n_longitudes: spec.n_longitudes,
                        n_points: spec.n_points,
                        ..TorusGrid::new(radius, axis)?
                    };
                    for k in 0..spec.n_longitudes {
                        out.push(LatentTrajectory::from_torus(&grid, k, steps)?);
                    }
                }
                GridKind::Sphere => {
                    let lons = sphere_longitudes(radius, spec.n_longitudes, spec.n_points)?;
                    for (k, pts) in lons.into_iter().enumerate() {
                        let control_points: Vec<_> = pts.into_iter().map(|p| axis.place(p)).collect();
                        let dense_points = super::bspline_densify(&control_points, steps)?;
                        out.push(LatentTrajectory {
                            control_points,
                            dense_points,
                            radius,
                            axis,
                            longitude: k,
                            steps,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn check_normalization(model: &CvaeModel, table: &JointTable) -> Result<()> {
    let norm = &model.normalization;
    for j in 0..NUM_JOINTS {
        let spec = table.get(j);
        let tol = 1e-9;
        if norm.min()[j] < spec.min_angle - tol || norm.max()[j] > spec.max_angle + tol {
            return Err(Error::Invalid(format!(
                "model/normalization mismatch: {} range [{}, {}] exceeds limits [{}, {}]",
                JOINT_NAMES[j],
                norm.min()[j],
                norm.max()[j],
                spec.min_angle,
                spec.max_angle
            )));
        }
    }
    Ok(())
}

/// Decodes `[z, c]` rows into denormalized frames.
pub fn decode_frames(model: &CvaeModel, rows: &[[f64; 4]], table: &JointTable) -> Result<Vec<Frame>> {
    check_normalization(model, table)?;
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let out = model.decode_batch(&Matrix::from_vec(rows.len(), 4, flat)?)?;
    (0..out.rows())
        .map(|i| {
            let row = out.row(i);
            let mut joints = model.normalization.denormalize_joints(&row[..NUM_JOINTS]);
            // rounding at the range ends only
            table.clamp(&mut joints);
            let leds = LedState::new(row[NUM_JOINTS..FRAME_DIM].to_vec())?;
            Ok(Frame { joints, leds })
        })
        .collect()
}

/// Decodes one trajectory under label `c` into a generated animation.
pub fn decode_trajectory(
    model: &CvaeModel,
    trajectory: &LatentTrajectory,
    c: f64,
    table: &JointTable,
) -> Result<FrameAnimation> {
    let frames = decode_frames(model, &condition(trajectory, c), table)?;
    Ok(FrameAnimation {
        name: animation_name(trajectory.radius, trajectory.axis, trajectory.longitude, c),
        fps: FPS,
        valence: c,
        provenance: Provenance::Generated,
        frames,
    })
}

pub fn animation_name(radius: f64, axis: Axis, longitude: usize, c: f64) -> String {
    format!("R{radius}_{axis}_k{longitude}_v{c}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedAnimation {
    pub animation: FrameAnimation,
    pub radius: f64,
    pub axis: Axis,
    pub longitude: usize,
    pub valence: f64,
    pub steps: usize,
}

/// Decodes every (radius, axis, longitude, valence) combination of `spec`, in
/// that nesting order.
pub fn generate_library(
    model: &CvaeModel,
    spec: &GenerationSpec,
    table: &JointTable,
) -> Result<Vec<GeneratedAnimation>> {
    check_normalization(model, table)?;
    let mut out = Vec::with_capacity(spec.animation_count());
    for t in trajectories(spec)? {
        for &c in &spec.valences {
            out.push(GeneratedAnimation {
                animation: decode_trajectory(model, &t, c, table)?,
                radius: t.radius,
                axis: t.axis,
                longitude: t.longitude,
                valence: c,
                steps: t.steps,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub name: String,
    pub radius: f64,
    pub axis: Axis,
    pub longitude: usize,
    pub valence: f64,
    pub n_frames: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryManifest {
    pub spec: GenerationSpec,
    pub count: usize,
    pub animations: Vec<LibraryEntry>,
}

/// Writes one frame-animation file per entry plus the manifest.
pub fn write_library(
    dir: &Path,
    spec: &GenerationSpec,
    library: &[GeneratedAnimation],
) -> Result<LibraryManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut animations = Vec::with_capacity(library.len());
    for g in library {
        let file = format!("{}.json", g.animation.name);
        save_frame_animation(&g.animation, &dir.join(&file))?;
        animations.push(LibraryEntry {
            name: g.animation.name.clone(),
            radius: g.radius,
            axis: g.axis,
            longitude: g.longitude,
            valence: g.valence,
            n_frames: g.animation.len(),
            file,
        });
    }
    let manifest = LibraryManifest {
        spec: spec.clone(),
        count: animations.len(),
        animations,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serializable");
    write_bytes(&dir.join(LIBRARY_MANIFEST), text.as_bytes())?;
    Ok(manifest)
}

pub fn read_library_manifest(dir: &Path) -> Result<LibraryManifest> {
    let path = dir.join(LIBRARY_MANIFEST);
    let manifest: LibraryManifest =
        serde_json::from_str(&read_to_string(&path)?).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            message: e.to_string(),
        })?;
    if manifest.count != manifest.animations.len() {
        return Err(Error::schema(
            path.display().to_string(),
            "count",
            format!("{} declared, {} listed", manifest.count, manifest.animations.len()),
        ));
    }
    Ok(manifest)
}

/// Loads the manifest and every animation it lists.
pub fn read_library(dir: &Path, table: &JointTable) -> Result<(LibraryManifest, Vec<FrameAnimation>)> {
    let manifest = read_library_manifest(dir)?;
    let anims = manifest
        .animations
        .iter()
        .map(|e| {
            let a = load_frame_animation(&dir.join(&e.file), table)?;
            if a.len() != e.n_frames {
                return Err(Error::schema(
                    &e.file,
                    "n_frames",
                    format!("manifest says {}, file has {}", e.n_frames, a.len()),
                ));
            }
            Ok(a)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, anims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvae::CvaeConfig;
    use crate::preprocess::NormalizationTable;

    fn model() -> CvaeModel {
        let cfg = CvaeConfig {
            encoder_hidden: vec![16],
            decoder_hidden: vec![16, 16],
            seed: 3,
            ..Default::default()
        };
        CvaeModel::from_seed(cfg, NormalizationTable::from_limits(&JointTable::pepper())).unwrap()
    }

    #[test]
    fn counting_identities() {
        let spec = GenerationSpec::default();
        assert_eq!(trajectories(&spec).unwrap().len(), 72);
        assert_eq!(spec.animation_count(), 216);
        let lib = generate_library(&model(), &spec, &JointTable::pepper()).unwrap();
        assert_eq!(lib.len(), 216);
        for c in [0.0, 0.5, 1.0] {
            assert_eq!(lib.iter().filter(|g| g.valence == c).count(), 72);
        }
        for (r, n) in [(3.0, 286), (4.0, 381), (5.0, 476)] {
            let group: Vec<_> = lib.iter().filter(|g| g.radius == r).collect();
            assert_eq!(group.len(), 72);
            assert!(group.iter().all(|g| g.animation.len() == n));
        }
        let mut names: Vec<_> = lib.iter().map(|g| g.animation.name.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 216);
        assert_eq!(lib[0].animation.name, "R3_LD1_k0_v0");
        assert_eq!(lib[1].animation.name, "R3_LD1_k0_v0.5");
    }

    #[test]
    fn endpoints_decode_the_origin_bitwise() {
        let m = model();
        let table = JointTable::pepper();
        let spec = GenerationSpec {
            radii: vec![4.0],
            steps: vec![20],
            ..Default::default()
        };
        for g in generate_library(&m, &spec, &table).unwrap() {
            let origin = decode_frames(&m, &[[0.0, 0.0, 0.0, g.valence]], &table).unwrap();
            assert_eq!(g.animation.frames[0], origin[0]);
            assert_eq!(*g.animation.frames.last().unwrap(), origin[0]);
        }
    }

    #[test]
    fn generation_is_pure() {
        let m = model();
        let table = JointTable::pepper();
        let spec = GenerationSpec {
            radii: vec![3.0],
            steps: vec![15],
            valences: vec![0.0],
            ..Default::default()
        };
        let a = generate_library(&m, &spec, &table).unwrap();
        let b = generate_library(&m, &spec, &table).unwrap();
        assert_eq!(a.len(), 24);
        assert_eq!(a, b);
    }

    #[test]
    fn spec_validation() {
        let mut spec = GenerationSpec {
            steps: vec![15, 20],
            ..Default::default()
        };
        assert!(spec.validate().is_err());
        spec.steps = vec![15, 20, 25];
        spec.valences = vec![1.5];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn normalization_outside_limits_is_rejected() {
        let mut m = model();
        let mut min = *m.normalization.min();
        min[0] -= 1.0;
        m.normalization = NormalizationTable::new(min, *m.normalization.max()).unwrap();
        let err = generate_library(&m, &GenerationSpec::default(), &JointTable::pepper()).unwrap_err();
        assert!(err.to_string().contains("model/normalization mismatch"));
    }

    #[test]
    fn library_round_trip() {
        let m = model();
        let table = JointTable::pepper();
        let spec = GenerationSpec {
            radii: vec![3.0],
            steps: vec![2],
            valences: vec![0.0, 1.0],
            axes: vec![Axis::Ld2],
            ..Default::default()
        };
        let lib = generate_library(&m, &spec, &table).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_library(dir.path(), &spec, &lib).unwrap();
        assert_eq!(manifest.count, 16);
        let (back, anims) = read_library(dir.path(), &table).unwrap();
        assert_eq!(back, manifest);
        for (a, g) in anims.iter().zip(&lib) {
            assert_eq!(a, &g.animation);
        }
        let text = std::fs::read_to_string(dir.path().join(LIBRARY_MANIFEST)).unwrap();
        assert!(text.contains("\"axis\": 2"));
    }

    #[test]
    fn sphere_grid_generates() {
        let spec = GenerationSpec {
            radii: vec![3.0],
            steps: vec![3],
            valences: vec![0.5],
            grid: GridKind::Sphere,
            ..Default::default()
        };
        let ts = trajectories(&spec).unwrap();
        assert_eq!(ts.len(), 24);
        for t in &ts {
            for p in &t.control_points {
                assert!((super::super::norm(p) - 3.0).abs() < 1e-12);
            }
        }
    }
}
