use rand::Rng;

use crate::error::{check_dim, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Softplus,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Softplus => softplus(x),
            Activation::Identity => x,
        }
    }

    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Softplus => sigmoid(pre),
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Softplus => "softplus",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "softplus" => Some(Activation::Softplus),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Glorot-uniform bound `sqrt(6 / (fan_in + fan_out))`.
fn glorot<R: Rng>(rng: &mut R, len: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.random_range(-bound..bound)).collect()
}

/// Fully connected layer, weights stored row-major as `in_dim × out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseTrace {
    input: Vec<f64>,
    pre: Vec<f64>,
    pub output: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn init<R: Rng>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: glorot(rng, in_dim * out_dim, in_dim, out_dim),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.in_dim, self.out_dim, self.activation)
    }

    pub fn forward(&self, x: &[f64]) -> Result<DenseTrace> {
        check_dim(self.in_dim, x.len())?;
        let mut pre = self.bias.clone();
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.out_dim..(i + 1) * self.out_dim];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += xi * w;
            }
        }
        let output = pre.iter().map(|p| self.activation.apply(*p)).collect();
        Ok(DenseTrace {
            input: x.to_vec(),
            pre,
            output,
        })
    }

    /// Backpropagates `grad_out` (gradient w.r.t. the activated output).
    /// Parameter gradients are accumulated into `grads` when given; the
    /// gradient w.r.t. the layer input is returned.
    pub fn backward(
        &self,
        trace: &DenseTrace,
        grad_out: &[f64],
        grads: Option<&mut DenseLayer>,
    ) -> Vec<f64> {
        let g_pre: Vec<f64> = grad_out
            .iter()
            .zip(&trace.pre)
            .map(|(g, p)| g * self.activation.derivative(*p))
            .collect();
        if let Some(grads) = grads {
            for (gb, g) in grads.bias.iter_mut().zip(&g_pre) {
                *gb += g;
            }
            for (i, xi) in trace.input.iter().enumerate() {
                if *xi == 0.0 {
                    continue;
                }
                let row = &mut grads.weights[i * self.out_dim..(i + 1) * self.out_dim];
                for (w, g) in row.iter_mut().zip(&g_pre) {
                    *w += xi * g;
                }
            }
        }
        (0..self.in_dim)
            .map(|i| {
                let row = &self.weights[i * self.out_dim..(i + 1) * self.out_dim];
                row.iter().zip(&g_pre).map(|(w, g)| w * g).sum()
            })
            .collect()
    }
}

/// `out_j = act(hᵀ W_j o + bias_j)` with `W` stored as
/// `left_dim × right_dim × out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearLayer {
    pub left_dim: usize,
    pub right_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct BilinearTrace {
    left: Vec<f64>,
    right: Vec<f64>,
    pre: Vec<f64>,
    pub output: Vec<f64>,
}

impl BilinearLayer {
    pub fn zeros(
        left_dim: usize,
        right_dim: usize,
        out_dim: usize,
        activation: Activation,
    ) -> Self {
        Self {
            left_dim,
            right_dim,
            out_dim,
            weights: vec![0.0; left_dim * right_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn init<R: Rng>(
        left_dim: usize,
        right_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Self {
            left_dim,
            right_dim,
            out_dim,
            weights: glorot(
                rng,
                left_dim * right_dim * out_dim,
                left_dim * right_dim,
                out_dim,
            ),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.left_dim, self.right_dim, self.out_dim, self.activation)
    }

    fn slice(&self, a: usize, b: usize) -> std::ops::Range<usize> {
        let start = (a * self.right_dim + b) * self.out_dim;
        start..start + self.out_dim
    }

    pub fn forward(&self, left: &[f64], right: &[f64]) -> Result<BilinearTrace> {
        check_dim(self.left_dim, left.len())?;
        check_dim(self.right_dim, right.len())?;
        let mut pre = self.bias.clone();
        for (a, h) in left.iter().enumerate() {
            if *h == 0.0 {
                continue;
            }
            for (b, o) in right.iter().enumerate() {
                let c = h * o;
                for (p, w) in pre.iter_mut().zip(&self.weights[self.slice(a, b)]) {
                    *p += c * w;
                }
            }
        }
        let output = pre.iter().map(|p| self.activation.apply(*p)).collect();
        Ok(BilinearTrace {
            left: left.to_vec(),
            right: right.to_vec(),
            pre,
            output,
        })
    }

    /// Returns gradients w.r.t. (left, right) inputs.
    pub fn backward(
        &self,
        trace: &BilinearTrace,
        grad_out: &[f64],
        mut grads: Option<&mut BilinearLayer>,
    ) -> (Vec<f64>, Vec<f64>) {
        let g_pre: Vec<f64> = grad_out
            .iter()
            .zip(&trace.pre)
            .map(|(g, p)| g * self.activation.derivative(*p))
            .collect();
        if let Some(grads) = grads.as_deref_mut() {
            for (gb, g) in grads.bias.iter_mut().zip(&g_pre) {
                *gb += g;
            }
        }
        let mut g_left = vec![0.0; self.left_dim];
        let mut g_right = vec![0.0; self.right_dim];
        for a in 0..self.left_dim {
            let h = trace.left[a];
            for b in 0..self.right_dim {
                let o = trace.right[b];
                let range = self.slice(a, b);
                // Σ_j W[a,b,j] g_j
                let wg: f64 = self.weights[range.clone()]
                    .iter()
                    .zip(&g_pre)
                    .map(|(w, g)| w * g)
                    .sum();
                g_left[a] += wg * o;
                g_right[b] += wg * h;
                if let Some(grads) = grads.as_deref_mut() {
                    let c = h * o;
                    if c != 0.0 {
                        for (w, g) in grads.weights[range].iter_mut().zip(&g_pre) {
                            *w += c * g;
                        }
                    }
                }
            }
        }
        (g_left, g_right)
    }
}
