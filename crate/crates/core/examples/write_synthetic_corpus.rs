//! Writes the seeded synthetic keyframe corpus as JSON files, ready for
//! `embogen preprocess --corpus <dir>`.
//!
//! `cargo run --example write_synthetic_corpus -- <dir> [seed] [animations] [frames]`

use std::path::PathBuf;

use embogen::anim::save_keyframe_animation;
use embogen::synthetic::{synthetic_corpus, REFERENCE_ANIMATIONS, REFERENCE_FRAMES, REFERENCE_SEED};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "synthetic_corpus".into()));
    let seed = args.next().map_or(Ok(REFERENCE_SEED), |s| s.parse())?;
    let n = args.next().map_or(Ok(REFERENCE_ANIMATIONS), |s| s.parse())?;
    let frames = args.next().map_or(Ok(REFERENCE_FRAMES), |s| s.parse())?;

    std::fs::create_dir_all(&dir)?;
    for anim in synthetic_corpus(seed, n, frames) {
        let path = dir.join(format!("{}.json", anim.name));
        save_keyframe_animation(&anim, &path)?;
        println!(
            "{}: {} keyframes, {} led events, valence {}",
            path.display(),
            anim.keyframes.len(),
            anim.led_events.len(),
            anim.valence
        );
    }
    Ok(())
}
