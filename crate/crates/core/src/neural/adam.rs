//! Adam with decoupled weight decay over a fixed list of tensors.

use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl AdamState {
    pub fn new(sizes: &[usize]) -> Self {
        Self {
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            steps: 0,
        }
    }

    pub fn for_tensors(tensors: &[&[f64]]) -> Self {
        Self::new(&tensors.iter().map(|t| t.len()).collect::<Vec<_>>())
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One update: `θ ← θ - lr · (m̂ / (√v̂ + ε) + wd · θ)`.
    pub fn step(
        &mut self,
        params: Vec<&mut [f64]>,
        grads: &[&[f64]],
        lr: f64,
        weight_decay: f64,
    ) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::Dimension {
                expected: self.first.len(),
                actual: params.len(),
            });
        }
        if let Some(i) = grads.iter().position(|g| g.iter().any(|x| !x.is_finite())) {
            return Err(Error::Numeric(format!("non-finite gradient in tensor {i}")));
        }
        self.steps += 1;
        let t = self.steps as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::Dimension {
                    expected: m.len(),
                    actual: p.len(),
                });
            }
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = BETA1 * m[j] + (1.0 - BETA1) * gj;
                v[j] = BETA2 * v[j] + (1.0 - BETA2) * gj * gj;
                let mhat = m[j] / c1;
                let vhat = v[j] / c2;
                p[j] -= lr * (mhat / (vhat.sqrt() + EPSILON) + weight_decay * p[j]);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![1.0, -2.0, 0.5];
        let g = vec![0.3, -7.0, 1e-3];
        let mut adam = AdamState::new(&[3]);
        adam.step(vec![&mut p], &[&g], 0.01, 0.0).unwrap();
        // m̂ = g and v̂ = g², so every coordinate moves by ≈ lr·sign(g).
        assert!((p[0] - 0.99).abs() < 1e-6);
        assert!((p[1] + 1.99).abs() < 1e-6);
        assert!((p[2] - 0.49).abs() < 1e-4);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut p = vec![5.0, -3.0];
        let mut adam = AdamState::new(&[2]);
        for _ in 0..3000 {
            let g: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
            adam.step(vec![&mut p], &[&g], 0.05, 0.0).unwrap();
        }
        assert!(p.iter().all(|x| x.abs() < 1e-2), "{p:?}");
    }

    #[test]
    fn weight_decay_is_decoupled() {
        let mut p = vec![2.0];
        let mut adam = AdamState::new(&[1]);
        adam.step(vec![&mut p], &[&[0.0]], 0.1, 0.5).unwrap();
        assert!((p[0] - (2.0 - 0.1 * 0.5 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_mismatch_and_nan() {
        let mut p = vec![0.0; 2];
        let mut adam = AdamState::new(&[3]);
        assert!(adam.step(vec![&mut p], &[&[0.0, 0.0]], 0.1, 0.0).is_err());
        let mut adam = AdamState::new(&[2]);
        assert!(adam
            .step(vec![&mut p], &[&[f64::NAN, 0.0]], 0.1, 0.0)
            .is_err());
    }
}
