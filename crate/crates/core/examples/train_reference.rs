//! Trains the reference model on the seed-42 synthetic corpus and reports
//! training health, radius monotonicity and the valence effect.
//!
//! `cargo run --release --example train_reference [-- <checkpoint out>]`

use std::time::Instant;

use embogen::anim::JointTable;
use embogen::cvae::{save_checkpoint, train_with, CvaeConfig, CvaeModel};
use embogen::metrics::{radius_monotonicity, valence_effect};
use embogen::nn::RngStream;
use embogen::preprocess::{build_dataset, DatasetOptions};
use embogen::sampler::{generate_library, GenerationSpec};
use embogen::synthetic::{reference_corpus, REFERENCE_SEED};

fn main() -> anyhow::Result<()> {
    let corpus = reference_corpus();
    let (dataset, norm, summary) = build_dataset(&corpus, REFERENCE_SEED, &DatasetOptions::default())?;
    println!("{summary}");

    let config = CvaeConfig {
        seed: REFERENCE_SEED,
        ..Default::default()
    };
    let model = CvaeModel::from_seed(config, norm)?;
    let start = Instant::now();
    let (model, report) = train_with(model, &dataset, |e| {
        if e.epoch == 1 || e.epoch % 25 == 0 {
            println!(
                "epoch {:>3}  recon {:.6}  kl {:.4}  val {:.6}",
                e.epoch, e.recon, e.kl, e.val
            );
        }
    })?;
    println!("trained in {:.1?}", start.elapsed());

    let first = report.first().unwrap().val;
    let last = report.last().unwrap().val;
    println!(
        "val mse {first:.6} -> {last:.6} ({:.1}%), final kl {:.4}",
        100.0 * last / first,
        report.final_kl
    );

    let table = JointTable::pepper();
    let library = generate_library(&model, &GenerationSpec::default(), &table)?;
    let radius = radius_monotonicity(library.iter().map(|g| (g.radius, &g.animation)))?;
    println!("{radius}");

    let effect = valence_effect(&model, 100, &mut RngStream::new(REFERENCE_SEED))?;
    let mut ablated = model.clone();
    ablated.ablate_label();
    let base = valence_effect(&ablated, 100, &mut RngStream::new(REFERENCE_SEED))?;
    println!("valence effect {effect:.6} (ablated {base:.3e})");

    if let Some(path) = std::env::args().nth(1) {
        save_checkpoint(&model, Some(&report), path.as_ref())?;
        println!("wrote {path}");
    }
    Ok(())
}
