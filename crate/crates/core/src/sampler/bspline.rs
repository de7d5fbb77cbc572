//! Interpolating clamped cubic B-splines through 3-D points, using chord-length
//! parameters and averaged knots.

use crate::error::{Error, Result};

pub type Point = [f64; 3];

const DEGREE: usize = 3;

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Chord-length parameters in [0, 1]. Repeated points would give equal
/// parameters (a singular system), so in that case the chord-length values are
/// averaged with uniform ones, which keeps them strictly increasing.
fn parameters(points: &[Point]) -> Option<Vec<f64>> {
    let n = points.len() - 1;
    let chords: Vec<f64> = points.windows(2).map(|w| dist(&w[0], &w[1])).collect();
    let total: f64 = chords.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut u = Vec::with_capacity(n + 1);
    u.push(0.0);
    let mut acc = 0.0;
    for c in &chords[..n - 1] {
        acc += c;
        u.push(acc / total);
    }
    u.push(1.0);
    let degenerate = chords.iter().any(|&c| c <= total * 1e-12);
    if degenerate {
        for (k, v) in u.iter_mut().enumerate().take(n).skip(1) {
            *v = 0.5 * (*v + k as f64 / n as f64);
        }
    }
    Some(u)
}

/// Clamped knot vector by averaging `DEGREE` consecutive parameters.
fn averaged_knots(u: &[f64]) -> Vec<f64> {
    let n = u.len() - 1;
    let mut knots = vec![0.0; DEGREE + 1];
    for j in 1..=n - DEGREE {
        knots.push(u[j..j + DEGREE].iter().sum::<f64>() / DEGREE as f64);
    }
    knots.extend(std::iter::repeat_n(1.0, DEGREE + 1));
    knots
}

/// Index of the knot span containing `t` (last non-empty span for `t = 1`).
fn find_span(knots: &[f64], n_ctrl: usize, t: f64) -> usize {
    if t >= knots[n_ctrl] {
        return n_ctrl - 1;
    }
    let mut span = DEGREE;
    while span + 1 < n_ctrl && knots[span + 1] <= t {
        span += 1;
    }
    span
}

/// The `DEGREE + 1` non-zero basis values on `span` (Cox-de Boor).
fn basis(knots: &[f64], span: usize, t: f64) -> [f64; DEGREE + 1] {
    let mut n = [0.0; DEGREE + 1];
    let mut left = [0.0; DEGREE + 1];
    let mut right = [0.0; DEGREE + 1];
    n[0] = 1.0;
    for j in 1..=DEGREE {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<Point>) -> Result<Vec<Point>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::Invalid("singular B-spline interpolation system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            for d in 0..3 {
                b[row][d] -= f * b[col][d];
            }
        }
    }
    let mut x = vec![[0.0; 3]; n];
    for row in (0..n).rev() {
        for d in 0..3 {
            let mut s = b[row][d];
            for k in row + 1..n {
                s -= a[row][k] * x[k][d];
            }
            x[row][d] = s / a[row][row];
        }
    }
    Ok(x)
}

/// A fitted interpolating spline.
#[derive(Debug, Clone)]
pub struct InterpolatingSpline {
    knots: Vec<f64>,
    control: Vec<Point>,
    params: Vec<f64>,
}

impl InterpolatingSpline {
    pub fn fit(points: &[Point]) -> Result<Option<Self>> {
        if points.len() < DEGREE + 1 {
            return Err(Error::Invalid(format!(
                "cubic B-spline needs at least {} points, got {}",
                DEGREE + 1,
                points.len()
            )));
        }
        let Some(u) = parameters(points) else {
            return Ok(None);
        };
        let knots = averaged_knots(&u);
        let n_ctrl = points.len();
        let mut rows = vec![vec![0.0; n_ctrl]; n_ctrl];
        for (k, &t) in u.iter().enumerate() {
            let span = find_span(&knots, n_ctrl, t);
            let b = basis(&knots, span, t);
            for (i, v) in b.iter().enumerate() {
                rows[k][span - DEGREE + i] = *v;
            }
        }
        let control = solve(rows, points.to_vec())?;
        Ok(Some(InterpolatingSpline {
            knots,
            control,
            params: u,
        }))
    }

    /// Parameter value at which the spline passes through data point `k`.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn eval(&self, t: f64) -> Point {
        let n_ctrl = self.control.len();
        let span = find_span(&self.knots, n_ctrl, t);
        let b = basis(&self.knots, span, t);
        let mut p = [0.0; 3];
        for (i, w) in b.iter().enumerate() {
            let c = &self.control[span - DEGREE + i];
            for d in 0..3 {
                p[d] += w * c[d];
            }
        }
        p
    }
}

/// Evaluates the interpolating spline `steps` times per interval between
/// consecutive points, giving `(P - 1) * steps + 1` points whose first and last
/// equal the first and last input points.
pub fn bspline_densify(points: &[Point], steps: usize) -> Result<Vec<Point>> {
    if steps == 0 {
        return Err(Error::Invalid("steps must be at least 1".into()));
    }
    let count = (points.len().saturating_sub(1)) * steps + 1;
    let Some(spline) = InterpolatingSpline::fit(points)? else {
        // every point identical
        return Ok(vec![points[0]; count]);
    };
    let u = spline.params();
    let mut out = Vec::with_capacity(count);
    for k in 0..points.len() - 1 {
        for s in 0..steps {
            if s == 0 {
                if k == 0 {
                    out.push(points[0]);
                } else {
                    out.push(spline.eval(u[k]));
                }
                continue;
            }
            let t = u[k] + (u[k + 1] - u[k]) * s as f64 / steps as f64;
            out.push(spline.eval(t));
        }
    }
    out.push(*points.last().expect("non-empty"));
    Ok(out)
}
