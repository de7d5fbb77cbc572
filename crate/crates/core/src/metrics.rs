//! Motion statistics of decoded animations, and checks of how the sampling
//! radius and the valence label steer the decoder.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::anim::{FrameAnimation, FRAME_DIM, NUM_JOINTS};
use crate::cvae::CvaeModel;
use crate::error::{Error, Result};
use crate::nn::{Matrix, RngStream};

/// Joint-space statistics of one animation. LED channels are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionMetrics {
    /// Per joint `max - min` over frames (rad).
    pub amplitude: Vec<f64>,
    /// Per joint population variance over frames (rad^2).
    pub variance: Vec<f64>,
    /// Per joint mean `|q[t+1] - q[t]|` (rad/frame).
    pub mean_abs_velocity: Vec<f64>,
    pub aggregate_amplitude: f64,
    pub mean_variance: f64,
    pub aggregate_velocity: f64,
    /// Largest single-joint step between consecutive frames (rad/frame).
    pub peak_velocity: f64,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    mean(&xs.iter().map(|x| (x - m) * (x - m)).collect::<Vec<_>>()).sqrt()
}

pub fn motion_metrics(anim: &FrameAnimation) -> MotionMetrics {
    let n = anim.frames.len();
    let mut amplitude = vec![0.0; NUM_JOINTS];
    let mut variance = vec![0.0; NUM_JOINTS];
    let mut mean_abs_velocity = vec![0.0; NUM_JOINTS];
    let mut peak_velocity: f64 = 0.0;
    if n > 0 {
        for j in 0..NUM_JOINTS {
            let series: Vec<f64> = anim.frames.iter().map(|f| f.joints[j]).collect();
            let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            amplitude[j] = hi - lo;
            // shifted by the first value so a constant series gives exactly 0
            let shifted: Vec<f64> = series.iter().map(|x| x - series[0]).collect();
            let m = mean(&shifted);
            variance[j] = mean(&shifted.iter().map(|x| (x - m) * (x - m)).collect::<Vec<_>>());
            let steps: Vec<f64> = series.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            mean_abs_velocity[j] = mean(&steps);
            peak_velocity = steps.iter().copied().fold(peak_velocity, f64::max);
        }
    }
    MotionMetrics {
        aggregate_amplitude: mean(&amplitude),
        mean_variance: mean(&variance),
        aggregate_velocity: mean(&mean_abs_velocity),
        amplitude,
        variance,
        mean_abs_velocity,
        peak_velocity,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusLevel {
    pub radius: f64,
    pub count: usize,
    pub amplitude_mean: f64,
    pub amplitude_std: f64,
    pub variance_mean: f64,
    pub variance_std: f64,
}

/// Aggregate amplitude and variance per sampling radius, with verdicts on
/// whether both grow strictly with the radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub levels: Vec<RadiusLevel>,
    pub amplitude_increasing: bool,
    pub variance_increasing: bool,
}

impl RadiusReport {
    pub fn passed(&self) -> bool {
        self.amplitude_increasing && self.variance_increasing
    }

    fn verdict_line(&self, what: &str, ok: bool) -> String {
        let chain = self
            .levels
            .iter()
            .map(|l| l.radius.to_string())
            .collect::<Vec<_>>()
            .join("<");
        format!("{what}: {chain} {}", if ok { "PASS" } else { "FAIL" })
    }

    /// `amplitude: 3<4<5 PASS` and the matching variance line.
    pub fn verdict_lines(&self) -> [String; 2] {
        [
            self.verdict_line("amplitude", self.amplitude_increasing),
            self.verdict_line("variance", self.variance_increasing),
        ]
    }
}

impl fmt::Display for RadiusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8} {:>6} {:>14} {:>12} {:>14} {:>12}",
            "radius", "count", "amplitude", "(std)", "variance", "(std)"
        )?;
        for l in &self.levels {
            writeln!(
                f,
                "{:>8} {:>6} {:>14.6} {:>12.6} {:>14.8} {:>12.8}",
                l.radius, l.count, l.amplitude_mean, l.amplitude_std, l.variance_mean, l.variance_std
            )?;
        }
        let [a, v] = self.verdict_lines();
        writeln!(f, "{a}")?;
        write!(f, "{v}")
    }
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.len() >= 2 && xs.windows(2).all(|w| w[0] < w[1])
}

/// Groups `(radius, animation)` pairs by radius, ascending.
pub fn radius_monotonicity<'a>(
    items: impl IntoIterator<Item = (f64, &'a FrameAnimation)>,
) -> Result<RadiusReport> {
    let mut groups: BTreeMap<u64, (f64, Vec<MotionMetrics>)> = BTreeMap::new();
    for (r, anim) in items {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Invalid(format!("radius {r} is not a valid level")));
        }
        // non-negative floats order like their bit patterns
        groups
            .entry(r.to_bits())
            .or_insert_with(|| (r, Vec::new()))
            .1
            .push(motion_metrics(anim));
    }
    if groups.is_empty() {
        return Err(Error::Invalid("no animations to group".into()));
    }
    let levels: Vec<RadiusLevel> = groups
        .into_values()
        .map(|(radius, ms)| {
            let amp: Vec<f64> = ms.iter().map(|m| m.aggregate_amplitude).collect();
            let var: Vec<f64> = ms.iter().map(|m| m.mean_variance).collect();
            RadiusLevel {
                radius,
                count: ms.len(),
                amplitude_mean: mean(&amp),
                amplitude_std: population_std(&amp),
                variance_mean: mean(&var),
                variance_std: population_std(&var),
            }
        })
        .collect();
    let amps: Vec<f64> = levels.iter().map(|l| l.amplitude_mean).collect();
    let vars: Vec<f64> = levels.iter().map(|l| l.variance_mean).collect();
    Ok(RadiusReport {
        amplitude_increasing: strictly_increasing(&amps),
        variance_increasing: strictly_increasing(&vars),
        levels,
    })
}

/// Mean L2 distance, over the 65 frame features, between the decoder outputs
/// for labels 0 and 1 at `n_samples` latent codes drawn from the prior.
pub fn valence_effect(model: &CvaeModel, n_samples: usize, rng: &mut RngStream) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::Invalid("valence effect needs at least one sample".into()));
    }
    let mut rows = Vec::with_capacity(n_samples * 8);
    for _ in 0..n_samples {
        let z = [rng.normal(), rng.normal(), rng.normal()];
        rows.extend_from_slice(&[z[0], z[1], z[2], 0.0]);
        rows.extend_from_slice(&[z[0], z[1], z[2], 1.0]);
    }
    let out = model.decode_batch(&Matrix::from_vec(2 * n_samples, 4, rows)?)?;
    let total: f64 = (0..n_samples)
        .map(|i| {
            let a = &out.row(2 * i)[..FRAME_DIM];
            let b = &out.row(2 * i + 1)[..FRAME_DIM];
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        })
        .sum();
    Ok(total / n_samples as f64)
}

/// Contents of the metrics report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub torus: Option<RadiusReport>,
    pub sphere: Option<RadiusReport>,
    pub valence_effect: f64,
    pub valence_effect_ablated: f64,
    pub valence_samples: usize,
    pub seed: u64,
}
