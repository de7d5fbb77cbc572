use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CvaeConfig, CvaeModel, TrainReport};
use crate::error::{read_to_string, write_bytes, Error, Result};
use crate::nn::{DenseLayer, Matrix, RngState};
use crate::preprocess::NormalizationTable;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub name: String,
    /// `[fan_in, fan_out]`.
    pub shape: [usize; 2],
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub epochs: usize,
    pub final_recon: f64,
    pub final_kl: f64,
    pub final_total: f64,
    pub final_val: f64,
    pub first_val: f64,
}

impl ReportSummary {
    pub fn from_report(r: &TrainReport) -> Option<Self> {
        let last = r.last()?;
        Some(ReportSummary {
            epochs: r.epochs.len(),
            final_recon: last.recon,
            final_kl: r.final_kl,
            final_total: last.total,
            final_val: last.val,
            first_val: r.first()?.val,
        })
    }
}

/// On-disk container for a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: CvaeConfig,
    pub normalization_table: NormalizationTable,
    pub layers: Vec<LayerRecord>,
    pub rng_state: Option<RngState>,
    pub train_report_summary: Option<ReportSummary>,
}

fn layer_names(cfg: &CvaeConfig) -> Vec<String> {
    let mut names: Vec<String> = (0..cfg.encoder_hidden.len())
        .map(|i| format!("encoder.{i}"))
        .collect();
    names.push("mu_head".into());
    names.push("logvar_head".into());
    names.extend((0..cfg.decoder_hidden.len()).map(|i| format!("decoder.{i}")));
    names.push("recon".into());
    names
}

impl Checkpoint {
    pub fn from_model(model: &CvaeModel, report: Option<&TrainReport>) -> Self {
        let layers = model
            .layers()
            .zip(layer_names(&model.config))
            .map(|(l, name)| LayerRecord {
                name,
                shape: [l.fan_in(), l.fan_out()],
                weights: l.weights.data().to_vec(),
                bias: l.bias.clone(),
            })
            .collect();
        Checkpoint {
            format_version: FORMAT_VERSION,
            config: model.config.clone(),
            normalization_table: model.normalization.clone(),
            layers,
            rng_state: report.map(|r| r.rng_state),
            train_report_summary: report.and_then(ReportSummary::from_report),
        }
    }

    pub fn into_model(self) -> Result<CvaeModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Version {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        // builds the expected shapes, then overwrites every parameter
        let mut model = CvaeModel::new(
            self.config.clone(),
            self.normalization_table.clone(),
            &mut crate::nn::RngStream::new(0),
        )?;
        let names = layer_names(&self.config);
        if self.layers.len() != names.len() {
            return Err(Error::schema(
                "checkpoint",
                "layers",
                format!("expected {} layers, found {}", names.len(), self.layers.len()),
            ));
        }
        for ((slot, rec), name) in model.layers_mut().zip(self.layers).zip(names) {
            let shape = [slot.fan_in(), slot.fan_out()];
            if rec.shape != shape || rec.name != name {
                return Err(Error::schema(
                    "checkpoint",
                    &rec.name,
                    format!("expected {name} with shape {shape:?}, found {:?}", rec.shape),
                ));
            }
            let weights = Matrix::from_vec(shape[0], shape[1], rec.weights)?;
            *slot = DenseLayer::new(weights, rec.bias)?;
            if !slot.is_finite() {
                return Err(Error::NonFinite("checkpoint parameters"));
            }
        }
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

pub fn save_checkpoint(model: &CvaeModel, report: Option<&TrainReport>, path: &Path) -> Result<()> {
    write_bytes(path, Checkpoint::from_model(model, report).to_json().as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<(CvaeModel, Checkpoint)> {
    let text = read_to_string(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })?;
    let model = ckpt.clone().into_model()?;
    Ok((model, ckpt))
}
