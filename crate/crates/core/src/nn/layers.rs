use serde::{Deserialize, Serialize};

use super::{Matrix, RngStream};
use crate::error::{Error, Result};

/// Fully connected layer computing `x · W + b` for a batch `x` of row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `fan_in x fan_out`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Parameter gradients of a [`DenseLayer`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::Shape(format!(
                "bias of {} for {} outputs",
                bias.len(),
                weights.cols()
            )));
        }
        Ok(DenseLayer { weights, bias })
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        DenseLayer {
            weights: Matrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    /// Glorot/Xavier uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn xavier_uniform(fan_in: usize, fan_out: usize, rng: &mut RngStream) -> Self {
        let bound = xavier_bound(fan_in, fan_out);
        let data = (0..fan_in * fan_out)
            .map(|_| rng.uniform_range(-bound, bound))
            .collect();
        DenseLayer {
            weights: Matrix::from_vec(fan_in, fan_out, data).expect("sized"),
            bias: vec![0.0; fan_out],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut y = x.matmul(&self.weights)?;
        for r in 0..y.rows() {
            for (v, b) in y.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(y)
    }

    /// Returns the input gradient and the parameter gradients, given the
    /// forward input `x` and the upstream gradient.
    pub fn backward(&self, x: &Matrix, grad_out: &Matrix) -> Result<(Matrix, DenseGrads)> {
        let grad_in = grad_out.matmul_t(&self.weights)?;
        let grads = DenseGrads {
            weights: x.t_matmul(grad_out)?,
            bias: grad_out.column_sums(),
        };
        Ok((grad_in, grads))
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }
}

pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub fn relu(x: &Matrix) -> Matrix {
    x.map(|v| v.max(0.0))
}

/// Gradient through a ReLU given its forward input.
pub fn relu_backward(x: &Matrix, grad: &Matrix) -> Result<Matrix> {
    x.map(|v| if v > 0.0 { 1.0 } else { 0.0 }).hadamard(grad)
}

pub fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Matrix) -> Matrix {
    x.map(sigmoid_scalar)
}

/// Gradient through a sigmoid given its forward output.
pub fn sigmoid_backward(y: &Matrix, grad: &Matrix) -> Result<Matrix> {
    y.map(|s| s * (1.0 - s)).hadamard(grad)
}

/// Inverted-dropout mask: each entry is 0 with probability `p`, otherwise `1/(1-p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask(pub Matrix);

impl DropoutMask {
    pub fn sample(rows: usize, cols: usize, p: f64, rng: &mut RngStream) -> Self {
        let keep = 1.0 / (1.0 - p);
        let data = (0..rows * cols)
            .map(|_| if rng.uniform() < p { 0.0 } else { keep })
            .collect();
        DropoutMask(Matrix::from_vec(rows, cols, data).expect("sized"))
    }

    /// Mask that keeps every unit unscaled.
    pub fn identity(rows: usize, cols: usize) -> Self {
        DropoutMask(Matrix::from_vec(rows, cols, vec![1.0; rows * cols]).expect("sized"))
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.0.hadamard(x)
    }

    pub fn backward(&self, grad: &Matrix) -> Result<Matrix> {
        self.0.hadamard(grad)
    }
}

/// Dropout layer; identity in eval mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dropout {
    pub p: f64,
}

impl Dropout {
    pub fn forward(
        &self,
        x: &Matrix,
        rng: &mut RngStream,
        train: bool,
    ) -> Result<(Matrix, Option<DropoutMask>)> {
        if !train || self.p == 0.0 {
            return Ok((x.clone(), None));
        }
        let mask = DropoutMask::sample(x.rows(), x.cols(), self.p, rng);
        Ok((mask.forward(x)?, Some(mask)))
    }
}

/// Mean squared error over every element, with its gradient w.r.t. `pred`.
pub fn mse(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "mse {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.data().len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.data().len());
    for (p, t) in pred.data().iter().zip(target.data()) {
        let d = p - t;
        loss += d * d;
        grad.push(2.0 * d / n);
    }
    Ok((
        loss / n,
        Matrix::from_vec(pred.rows(), pred.cols(), grad).expect("sized"),
    ))
}
