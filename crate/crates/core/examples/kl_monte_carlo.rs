//! Checks the closed-form KL divergence against a Monte-Carlo estimate.
//!
//! `cargo run --release --example kl_monte_carlo`

use embogen::cvae::{kl_divergence, reparameterize, LatentParams};
use embogen::nn::RngStream;

fn log_normal(x: f64, mean: f64, log_var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI).ln() + log_var + (x - mean).powi(2) / log_var.exp())
}

fn main() {
    let mut rng = RngStream::new(1);
    for _ in 0..5 {
        let p = LatentParams {
            mu: [rng.normal(), rng.normal(), rng.normal()],
            log_var: [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)],
        };
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let eps = [rng.normal(), rng.normal(), rng.normal()];
            let z = reparameterize(&p, &eps);
            acc += (0..3)
                .map(|d| log_normal(z[d], p.mu[d], p.log_var[d]) - log_normal(z[d], 0.0, 0.0))
                .sum::<f64>();
        }
        println!("analytic {:.5}  monte carlo {:.5}", kl_divergence(&p), acc / n as f64);
    }
}
