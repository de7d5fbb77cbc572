//! Compares the hand-derived CVAE gradients against central finite
//! differences on a small network with fixed dropout masks and noise.
//!
//! `cargo run --example gradient_check`

use embogen::anim::JointTable;
use embogen::cvae::{CvaeConfig, CvaeModel, Noise};
use embogen::nn::{Matrix, RngStream};
use embogen::preprocess::NormalizationTable;

fn main() -> anyhow::Result<()> {
    let config = CvaeConfig {
        encoder_hidden: vec![6, 5],
        decoder_hidden: vec![5, 6],
        dropout_p: 0.3,
        beta: 0.5,
        seed: 11,
        ..Default::default()
    };
    let mut model = CvaeModel::from_seed(config.clone(), NormalizationTable::from_limits(&JointTable::pepper()))?;
    let mut rng = RngStream::new(3);
    // non-zero biases keep pre-activations off the ReLU kink
    for layer in model.layers_mut() {
        for b in &mut layer.bias {
            *b = 0.1 * rng.normal();
        }
    }
    let batch = Matrix::from_vec(4, 66, (0..4 * 66).map(|_| rng.uniform()).collect())?;
    let noise = Noise::sample(&config, 4, &mut rng);

    let (_, grads) = model.loss_and_grads(&batch, &noise)?;
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (p, g) in analytic.iter().enumerate() {
        for i in 0..g.len() {
            let orig = model.parameters_mut()[p][i];
            model.parameters_mut()[p][i] = orig + h;
            let up = model.loss(&batch, &noise)?.total;
            model.parameters_mut()[p][i] = orig - h;
            let down = model.loss(&batch, &noise)?.total;
            model.parameters_mut()[p][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let rel = (numeric - g[i]).abs() / (numeric.abs() + g[i].abs()).max(1e-8);
            worst = worst.max(rel);
            checked += 1;
        }
    }
    println!("{checked} parameters, max relative error {worst:.3e}");
    Ok(())
}
