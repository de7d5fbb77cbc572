use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{bezier_resample, mirror, pad_standinit, HandleMode, NormalizationTable};
use crate::anim::{
    led_channel_names, standinit, FrameAnimation, JointTable, Joints, KeyframeAnimation,
    FRAME_DIM, JOINT_NAMES,
};
use crate::error::{read_to_string, write_bytes, Error, Result};
use crate::nn::{Matrix, RngStream};

pub const DATASET_CSV: &str = "dataset.csv";
pub const DATASET_MANIFEST: &str = "manifest.json";
/// Width of one training row: 65 frame values and the valence label.
pub const EXAMPLE_DIM: usize = FRAME_DIM + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    /// Normalized joints followed by LEDs.
    pub features: Vec<f64>,
    pub label: f64,
}

impl TrainingExample {
    pub fn row(&self) -> Vec<f64> {
        let mut r = self.features.clone();
        r.push(self.label);
        r
    }
}

/// Shuffled examples; the first `n_train` form the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub examples: Vec<TrainingExample>,
    pub n_train: usize,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn train_indices(&self) -> std::ops::Range<usize> {
        0..self.n_train
    }

    pub fn validation_indices(&self) -> std::ops::Range<usize> {
        self.n_train..self.examples.len()
    }

    fn matrix(&self, range: std::ops::Range<usize>) -> Matrix {
        let mut data = Vec::with_capacity(range.len() * EXAMPLE_DIM);
        for e in &self.examples[range.clone()] {
            data.extend_from_slice(&e.features);
            data.push(e.label);
        }
        Matrix::from_vec(range.len(), EXAMPLE_DIM, data).expect("sized")
    }

    /// Training rows as an `n_train x 66` matrix.
    pub fn train_matrix(&self) -> Matrix {
        self.matrix(self.train_indices())
    }

    pub fn validation_matrix(&self) -> Matrix {
        self.matrix(self.validation_indices())
    }
}

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub table: JointTable,
    pub standinit: Joints,
    pub lead_frames: u32,
    pub handles: HandleMode,
    /// Scale joints by the corpus' observed range instead of the joint limits.
    pub per_corpus_minmax: bool,
    /// Also swap the two eyes' LED blocks when mirroring.
    pub mirror_eye_leds: bool,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        DatasetOptions {
            table: JointTable::pepper(),
            standinit: standinit(),
            lead_frames: super::STANDINIT_LEAD_FRAMES,
            handles: HandleMode::Smooth,
            per_corpus_minmax: false,
            mirror_eye_leds: false,
        }
    }
}

/// Counts reported while building a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub animations: usize,
    pub keyframes: usize,
    pub keyframes_padded: usize,
    pub frames: usize,
    pub examples: usize,
    pub n_train: usize,
    pub n_val: usize,
}

impl std::fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} animations, {} keyframes ({} after StandInit padding), {} frames, {} examples ({} train / {} validation)",
            self.animations,
            self.keyframes,
            self.keyframes_padded,
            self.frames,
            self.examples,
            self.n_train,
            self.n_val
        )
    }
}

/// Pads, resamples, mirrors, normalizes, flattens, shuffles and splits a corpus.
pub fn build_dataset(
    corpus: &[KeyframeAnimation],
    seed: u64,
    options: &DatasetOptions,
) -> Result<(Dataset, NormalizationTable, DatasetSummary)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let table = &options.table;
    let mut recorded: Vec<FrameAnimation> = Vec::with_capacity(corpus.len());
    let mut keyframes_padded = 0;
    for anim in corpus {
        anim.validate(table)?;
        let padded = pad_standinit(anim, &options.standinit, options.lead_frames);
        keyframes_padded += padded.keyframes.len();
        recorded.push(bezier_resample(&padded, table, options.handles));
    }
    let frames: usize = recorded.iter().map(FrameAnimation::len).sum();
    let mut all = Vec::with_capacity(recorded.len() * 2);
    for anim in recorded {
        let mirrored = mirror(&anim, table, options.mirror_eye_leds)?;
        all.push(anim);
        all.push(mirrored);
    }

    let norm = if options.per_corpus_minmax {
        NormalizationTable::from_frames(all.iter().flat_map(|a| &a.frames), table)
    } else {
        NormalizationTable::from_limits(table)
    };

    let mut examples = Vec::with_capacity(frames * 2);
    for anim in &all {
        for f in &anim.frames {
            examples.push(TrainingExample {
                features: norm.normalize(&f.to_vector()),
                label: anim.valence,
            });
        }
    }
    RngStream::new(seed).shuffle(&mut examples);
    let n_train = (0.8 * examples.len() as f64).round() as usize;
    let summary = DatasetSummary {
        animations: corpus.len(),
        keyframes: corpus.iter().map(|a| a.keyframes.len()).sum(),
        keyframes_padded,
        frames,
        examples: examples.len(),
        n_train,
        n_val: examples.len() - n_train,
    };
    Ok((
        Dataset {
            examples,
            n_train,
            seed,
        },
        norm,
        summary,
    ))
}

/// SHA-256 over the canonical JSON of every animation, in corpus order.
pub fn corpus_hash(corpus: &[KeyframeAnimation]) -> String {
    let mut h = Sha256::new();
    for a in corpus {
        h.update(a.to_json().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub normalization_table: NormalizationTable,
    pub corpus_hash: String,
}

fn header() -> Vec<String> {
    let mut h: Vec<String> = JOINT_NAMES.iter().map(|s| s.to_string()).collect();
    h.extend(led_channel_names());
    h.push("valence".into());
    h
}

/// Writes `dataset.csv` (training rows first) and `manifest.json` into `dir`.
pub fn write_dataset(
    dir: &Path,
    dataset: &Dataset,
    norm: &NormalizationTable,
    corpus_hash: &str,
) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(DATASET_CSV);
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Parse {
        context: csv_path.display().to_string(),
        message: e.to_string(),
    };
    w.write_record(header()).map_err(io)?;
    for e in &dataset.examples {
        w.write_record(e.row().iter().map(|v| v.to_string()))
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse {
        context: csv_path.display().to_string(),
        message: e.to_string(),
    })?;
    write_bytes(&csv_path, &bytes)?;

    let manifest = DatasetManifest {
        seed: dataset.seed,
        n_train: dataset.n_train,
        n_val: dataset.len() - dataset.n_train,
        normalization_table: norm.clone(),
        corpus_hash: corpus_hash.to_string(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serializable");
    write_bytes(&dir.join(DATASET_MANIFEST), text.as_bytes())?;
    Ok(manifest)
}

pub fn read_dataset(dir: &Path) -> Result<(Dataset, DatasetManifest)> {
    let manifest_path = dir.join(DATASET_MANIFEST);
    let manifest: DatasetManifest =
        serde_json::from_str(&read_to_string(&manifest_path)?).map_err(|e| Error::Parse {
            context: manifest_path.display().to_string(),
            message: e.to_string(),
        })?;
    let csv_path = dir.join(DATASET_CSV);
    let ctx = csv_path.display().to_string();
    let text = read_to_string(&csv_path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let parse = |e: csv::Error| Error::Parse {
        context: ctx.clone(),
        message: e.to_string(),
    };
    let found: Vec<String> = r.headers().map_err(parse)?.iter().map(String::from).collect();
    if found != header() {
        return Err(Error::schema(&ctx, "header", "unexpected column names"));
    }
    let mut examples = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(parse)?;
        let mut row = Vec::with_capacity(EXAMPLE_DIM);
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::schema(&ctx, format!("row {i}"), format!("bad number {field:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::schema(&ctx, format!("row {i}"), format!("{v} outside [0, 1]")));
            }
            row.push(v);
        }
        let label = row.pop().expect("66 columns");
        examples.push(TrainingExample {
            features: row,
            label,
        });
    }
    if examples.len() != manifest.n_train + manifest.n_val {
        return Err(Error::schema(
            &ctx,
            "rows",
            format!(
                "{} rows, manifest says {}",
                examples.len(),
                manifest.n_train + manifest.n_val
            ),
        ));
    }
    Ok((
        Dataset {
            examples,
            n_train: manifest.n_train,
            seed: manifest.seed,
        },
        manifest,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anim::{Keyframe, LedEvent, LedState};

    fn flat_animation(name: &str, frames: u32, valence: f64) -> KeyframeAnimation {
        let s = standinit();
        let mut mid = s;
        mid[2] = 0.9;
        KeyframeAnimation {
            name: name.into(),
            keyframes: vec![
                Keyframe {
                    frame_index: 0,
                    joints: s,
                },
                Keyframe {
                    frame_index: frames / 2,
                    joints: mid,
                },
                Keyframe {
                    frame_index: frames - 1,
                    joints: s,
                },
            ],
            led_events: vec![LedEvent {
                onset_frame: 3,
                state: LedState::uniform(0.2),
            }],
            valence,
        }
    }

    #[test]
    fn fifty_frames_give_100_examples() {
        let corpus = vec![flat_animation("a", 50, 0.3)];
        let (ds, _, summary) = build_dataset(&corpus, 1, &DatasetOptions::default()).unwrap();
        assert_eq!(summary.frames, 50);
        assert_eq!(ds.len(), 100);
        assert_eq!(ds.n_train, 80);
        assert_eq!(ds.validation_indices().len(), 20);
        assert!(ds.examples.iter().all(|e| e.label == 0.3));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            build_dataset(&[], 0, &DatasetOptions::default()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn same_seed_same_split() {
        let corpus = vec![flat_animation("a", 40, 0.0), flat_animation("b", 31, 1.0)];
        let opts = DatasetOptions::default();
        let (a, _, _) = build_dataset(&corpus, 9, &opts).unwrap();
        let (b, _, _) = build_dataset(&corpus, 9, &opts).unwrap();
        let (c, _, _) = build_dataset(&corpus, 10, &opts).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn per_corpus_range_spans_unit_interval() {
        let corpus = vec![flat_animation("a", 40, 0.5)];
        let opts = DatasetOptions {
            per_corpus_minmax: true,
            ..Default::default()
        };
        let (ds, norm, _) = build_dataset(&corpus, 0, &opts).unwrap();
        assert!(norm.max()[2] > norm.min()[2]);
        let col: Vec<f64> = ds.examples.iter().map(|e| e.features[2]).collect();
        assert_eq!(col.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
    }

    #[test]
    fn files_round_trip() {
        let corpus = vec![flat_animation("a", 30, 0.5)];
        let (ds, norm, _) = build_dataset(&corpus, 3, &DatasetOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let hash = corpus_hash(&corpus);
        write_dataset(dir.path(), &ds, &norm, &hash).unwrap();
        let (back, manifest) = read_dataset(dir.path()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(manifest.normalization_table, norm);
        assert_eq!(manifest.corpus_hash, hash);
        assert_eq!(manifest.n_train + manifest.n_val, 60);
        let text = std::fs::read_to_string(dir.path().join(DATASET_CSV)).unwrap();
        assert_eq!(text.lines().next().unwrap().split(',').count(), EXAMPLE_DIM);
    }
}
