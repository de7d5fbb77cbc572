//! Decodes the 216-animation library from a checkpoint (or from a briefly
//! trained model when none is given) and writes it with its manifest.
//!
//! `cargo run --release --example generate_library -- <out dir> [<checkpoint>]`

use std::path::PathBuf;

use embogen::anim::JointTable;
use embogen::cvae::{load_checkpoint, train, CvaeConfig, CvaeModel};
use embogen::preprocess::{build_dataset, DatasetOptions};
use embogen::sampler::{generate_library, write_library, GenerationSpec};
use embogen::synthetic::reference_corpus;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "library".into()));
    let model = match args.next() {
        Some(path) => load_checkpoint(path.as_ref())?.0,
        None => {
            let (ds, norm, _) = build_dataset(&reference_corpus(), 42, &DatasetOptions::default())?;
            let config = CvaeConfig { epochs: 20, seed: 42, ..Default::default() };
            train(CvaeModel::from_seed(config, norm)?, &ds)?.0
        }
    };
    let spec = GenerationSpec::default();
    let library = generate_library(&model, &spec, &JointTable::pepper())?;
    let manifest = write_library(&out, &spec, &library)?;
    println!("{} animations written to {}", manifest.count, out.display());
    for e in manifest.animations.iter().step_by(27) {
        println!("  {:<18} {:>4} frames", e.name, e.n_frames);
    }
    Ok(())
}
