//! Turns a keyframe corpus into the normalized 66-column dataset and writes
//! `dataset.csv` and `manifest.json`.
//!
//! `cargo run --example build_dataset -- [<out dir>] [<corpus dir>]`

use std::path::PathBuf;

use embogen::anim::{load_corpus, JointTable};
use embogen::preprocess::{build_dataset, corpus_hash, write_dataset, DatasetOptions};
use embogen::synthetic::reference_corpus;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "dataset".into()));
    let corpus = match args.next() {
        Some(dir) => load_corpus(dir.as_ref(), &JointTable::pepper())?,
        None => reference_corpus(),
    };
    let (dataset, norm, summary) = build_dataset(&corpus, 42, &DatasetOptions::default())?;
    println!("{summary}");
    let manifest = write_dataset(&out, &dataset, &norm, &corpus_hash(&corpus))?;
    println!("corpus hash {}", manifest.corpus_hash);
    println!("wrote {}", out.display());
    Ok(())
}
