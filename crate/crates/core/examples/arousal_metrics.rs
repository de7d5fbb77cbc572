//! Motion statistics of a generated library grouped by sampling radius, on
//! both the torus and the sphere grid, plus the valence effect.
//!
//! `cargo run --release --example arousal_metrics -- [<checkpoint>]`

use embogen::anim::JointTable;
use embogen::cvae::{load_checkpoint, train, CvaeConfig, CvaeModel};
use embogen::metrics::{motion_metrics, radius_monotonicity, valence_effect};
use embogen::nn::RngStream;
use embogen::preprocess::{build_dataset, DatasetOptions};
use embogen::sampler::{generate_library, GenerationSpec, GridKind};
use embogen::synthetic::reference_corpus;

fn main() -> anyhow::Result<()> {
    let model = match std::env::args().nth(1) {
        Some(path) => load_checkpoint(path.as_ref())?.0,
        None => {
            let (ds, norm, _) = build_dataset(&reference_corpus(), 42, &DatasetOptions::default())?;
            let config = CvaeConfig { epochs: 40, seed: 42, ..Default::default() };
            train(CvaeModel::from_seed(config, norm)?, &ds)?.0
        }
    };
    let table = JointTable::pepper();
    for grid in [GridKind::Torus, GridKind::Sphere] {
        let spec = GenerationSpec { grid, ..Default::default() };
        let library = generate_library(&model, &spec, &table)?;
        let m = motion_metrics(&library[0].animation);
        println!(
            "{grid:?}: first animation {} amplitude {:.4} variance {:.6} peak velocity {:.4}",
            library[0].animation.name, m.aggregate_amplitude, m.mean_variance, m.peak_velocity
        );
        println!("{}", radius_monotonicity(library.iter().map(|g| (g.radius, &g.animation)))?);
    }
    let effect = valence_effect(&model, 100, &mut RngStream::new(0))?;
    let mut ablated = model.clone();
    ablated.ablate_label();
    let base = valence_effect(&ablated, 100, &mut RngStream::new(0))?;
    println!("valence effect {effect:.5}, label-ablated {base:.5}");
    Ok(())
}
