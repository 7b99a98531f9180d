//! Evidential losses with analytic gradients with respect to the Dirichlet
//! (or Beta) concentration parameters.

use crate::error::{check_dim, Error, Result};
use crate::special::{
    digamma_unchecked as psi, ln_gamma_unchecked as ln_gamma, trigamma_unchecked as psi1,
};

pub use crate::special::digamma;

/// A scalar loss together with `∂loss/∂α`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValueWithGrad {
    pub value: f64,
    pub grad_alpha: Vec<f64>,
}

/// Label-smoothed binary correctness target, ordered (trust, distrust).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedTarget {
    pub probs: [f64; 2],
}

fn check_alpha(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() {
        return Err(Error::domain("alpha must be nonempty"));
    }
    match alpha.iter().find(|a| !a.is_finite() || **a <= 0.0) {
        Some(bad) => Err(Error::domain(format!(
            "alpha components must be finite and > 0, got {bad}"
        ))),
        None => Ok(()),
    }
}

/// Index of the hot entry of a one-hot vector.
pub fn one_hot_index(y: &[f64]) -> Result<usize> {
    let mut hot = None;
    for (k, v) in y.iter().enumerate() {
        if *v == 1.0 && hot.is_none() {
            hot = Some(k);
        } else if *v != 0.0 {
            return Err(Error::domain(format!("target {y:?} is not one-hot")));
        }
    }
    hot.ok_or_else(|| Error::domain(format!("target {y:?} is not one-hot")))
}

pub fn one_hot(label: usize, num_classes: usize) -> Vec<f64> {
    let mut y = vec![0.0; num_classes];
    y[label] = 1.0;
    y
}

/// Bayes risk of the cross-entropy under `Dir(α)`: `ψ(S) - ψ(α_g)`.
pub fn ace_loss(alpha: &[f64], y: &[f64]) -> Result<LossValueWithGrad> {
    check_dim(alpha.len(), y.len())?;
    let target = one_hot_index(y)?;
    ace_loss_for_label(alpha, target)
}

pub fn ace_loss_for_label(alpha: &[f64], target: usize) -> Result<LossValueWithGrad> {
    check_alpha(alpha)?;
    if target >= alpha.len() {
        return Err(Error::domain(format!(
            "label {target} out of range for K = {}",
            alpha.len()
        )));
    }
    let s: f64 = alpha.iter().sum();
    let psi1_s = psi1(s);
    let mut grad_alpha = vec![psi1_s; alpha.len()];
    grad_alpha[target] -= psi1(alpha[target]);
    Ok(LossValueWithGrad {
        value: psi(s) - psi(alpha[target]),
        grad_alpha,
    })
}

/// `KL[Dir(α) ‖ Dir(1)]` in closed form.
pub fn kl_uniform(alpha_tilde: &[f64]) -> Result<LossValueWithGrad> {
    check_alpha(alpha_tilde)?;
    let k = alpha_tilde.len() as f64;
    let s: f64 = alpha_tilde.iter().sum();
    let psi_s = psi(s);
    let psi1_s = psi1(s);
    let mut value = ln_gamma(s) - ln_gamma(k);
    let mut grad_alpha = Vec::with_capacity(alpha_tilde.len());
    for &a in alpha_tilde {
        value += -ln_gamma(a) + (a - 1.0) * (psi(a) - psi_s);
        grad_alpha.push((a - 1.0) * psi1(a) - (s - k) * psi1_s);
    }
    Ok(LossValueWithGrad { value, grad_alpha })
}

/// Sets the target coordinate to 1 so that only misleading evidence is
/// penalized by the KL term.
pub fn adjusted_alpha(alpha: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_dim(alpha.len(), y.len())?;
    Ok(alpha
        .iter()
        .zip(y)
        .map(|(a, t)| t + (1.0 - t) * a)
        .collect())
}

/// KL annealing weight `min(1, epoch / 10)`.
pub fn annealing(epoch: usize) -> f64 {
    (epoch as f64 / 10.0).min(1.0)
}

/// `ace(α, y) + λ(epoch) · KL[Dir(α̃) ‖ Dir(1)]`.
///
/// The target coordinate of `α̃` is the constant 1, so the KL term
/// contributes no gradient there.
pub fn overall_loss(alpha: &[f64], y: &[f64], epoch: usize) -> Result<LossValueWithGrad> {
    check_dim(alpha.len(), y.len())?;
    let target = one_hot_index(y)?;
    overall_loss_for_label(alpha, target, annealing(epoch))
}

/// [`overall_loss`] with an explicit KL weight.
pub fn overall_loss_for_label(
    alpha: &[f64],
    target: usize,
    kl_weight: f64,
) -> Result<LossValueWithGrad> {
    let mut loss = ace_loss_for_label(alpha, target)?;
    if kl_weight == 0.0 {
        return Ok(loss);
    }
    let mut tilde = alpha.to_vec();
    tilde[target] = 1.0;
    let kl = kl_uniform(&tilde)?;
    loss.value += kl_weight * kl.value;
    for (k, (g, gk)) in loss.grad_alpha.iter_mut().zip(&kl.grad_alpha).enumerate() {
        if k != target {
            *g += kl_weight * gk;
        }
    }
    Ok(loss)
}

/// 1 when the functional prediction matches the label.
pub fn correctness_target(pred_label: usize, true_label: usize) -> u8 {
    u8::from(pred_label == true_label)
}

/// `one_hot(z) · η + (1 - η) / 2`, ordered (trust, distrust).
pub fn smooth_label(z: u8, eta: f64) -> Result<SmoothedTarget> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain(format!(
            "smoothing factor must lie in (0, 1], got {eta}"
        )));
    }
    if z > 1 {
        return Err(Error::domain(format!(
            "correctness target must be 0 or 1, got {z}"
        )));
    }
    let off = (1.0 - eta) / 2.0;
    let hot = eta + off;
    Ok(SmoothedTarget {
        probs: if z == 1 { [hot, off] } else { [off, hot] },
    })
}

/// Beta Bayes risk against a soft target:
/// `Σ_j z_j (ψ(α_1 + α_2) - ψ(α_j))`. No KL term.
pub fn warmup_loss(beta_alpha: [f64; 2], target: &SmoothedTarget) -> Result<LossValueWithGrad> {
    check_alpha(&beta_alpha)?;
    let s = beta_alpha[0] + beta_alpha[1];
    let psi_s = psi(s);
    let psi1_s = psi1(s);
    let weight: f64 = target.probs.iter().sum();
    let mut value = 0.0;
    let mut grad_alpha = vec![0.0; 2];
    for j in 0..2 {
        let z = target.probs[j];
        value += z * (psi_s - psi(beta_alpha[j]));
        grad_alpha[j] = weight * psi1_s - z * psi1(beta_alpha[j]);
    }
    Ok(LossValueWithGrad { value, grad_alpha })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ace_examples() {
        let l = ace_loss(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((l.value - 1.0).abs() < 1e-14);
        let l = ace_loss(&[1001.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!(l.value < 0.01);
        // Only S and α_g matter.
        let a = ace_loss(&[3.0, 2.0, 7.0], &[1.0, 0.0, 0.0]).unwrap();
        let b = ace_loss(&[3.0, 7.0, 2.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn ace_rejects_bad_targets() {
        assert!(ace_loss(&[1.0, 1.0], &[0.5, 0.5]).is_err());
        assert!(ace_loss(&[1.0, 1.0], &[0.0, 0.0]).is_err());
        assert!(ace_loss(&[1.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(ace_loss(&[0.0, 1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn ace_decreases_in_target_alpha() {
        let mut last = f64::INFINITY;
        for g in 1..50 {
            let l = ace_loss(&[g as f64, 2.0, 3.0], &[1.0, 0.0, 0.0]).unwrap();
            assert!(l.value < last);
            assert!(l.grad_alpha[0] < 0.0);
            last = l.value;
        }
    }

    #[test]
    fn kl_examples() {
        for k in 1..8 {
            assert!(kl_uniform(&vec![1.0; k]).unwrap().value.abs() < 1e-14);
        }
        let kl = kl_uniform(&[2.0, 1.0]).unwrap();
        assert!((kl.value - (std::f64::consts::LN_2 - 0.5)).abs() < 1e-14);
        assert!(kl_uniform(&[1.0, 1.3, 4.0]).unwrap().value > 0.0);
        assert!(kl_uniform(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn adjusted_alpha_examples() {
        assert_eq!(
            adjusted_alpha(&[5.0, 3.0], &[1.0, 0.0]).unwrap(),
            vec![1.0, 3.0]
        );
        assert_eq!(
            adjusted_alpha(&[1.0; 4], &[0.0, 0.0, 1.0, 0.0]).unwrap(),
            vec![1.0; 4]
        );
        let tilde = adjusted_alpha(&[9.0, 1.0, 1.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(kl_uniform(&tilde).unwrap().value, 0.0);
        let tilde = adjusted_alpha(&[9.0, 1.5, 1.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!(kl_uniform(&tilde).unwrap().value > 0.0);
    }

    #[test]
    fn annealing_schedule() {
        assert_eq!(annealing(0), 0.0);
        assert_eq!(annealing(5), 0.5);
        assert_eq!(annealing(10), 1.0);
        assert_eq!(annealing(37), 1.0);
    }

    #[test]
    fn overall_examples() {
        let alpha = [4.0, 2.5, 1.5];
        let y = [0.0, 1.0, 0.0];
        assert_eq!(
            overall_loss(&alpha, &y, 0).unwrap(),
            ace_loss(&alpha, &y).unwrap()
        );

        let ones = overall_loss(&[1.0; 5], &one_hot(2, 5), 20).unwrap();
        let want = digamma(5.0).unwrap() - digamma(1.0).unwrap();
        assert!((ones.value - want).abs() < 1e-14);

        let full = overall_loss(&alpha, &y, 12).unwrap();
        let ace = ace_loss(&alpha, &y).unwrap().value;
        let kl = kl_uniform(&adjusted_alpha(&alpha, &y).unwrap())
            .unwrap()
            .value;
        assert_eq!(full.value, ace + kl);
    }

    #[test]
    fn correctness_and_smoothing() {
        assert_eq!(correctness_target(3, 3), 1);
        assert_eq!(correctness_target(3, 5), 0);
        let t = smooth_label(1, 0.9).unwrap();
        assert!((t.probs[0] - 0.95).abs() < 1e-15 && (t.probs[1] - 0.05).abs() < 1e-15);
        assert_eq!(smooth_label(1, 1.0).unwrap().probs, [1.0, 0.0]);
        let t = smooth_label(0, 0.8).unwrap();
        assert!((t.probs[0] - 0.10).abs() < 1e-15 && (t.probs[1] - 0.90).abs() < 1e-15);
        assert!(smooth_label(1, 0.0).is_err());
        assert!(smooth_label(1, 1.1).is_err());
    }

    #[test]
    fn warmup_examples() {
        let l = warmup_loss([1.0, 1.0], &smooth_label(1, 0.9).unwrap()).unwrap();
        assert!((l.value - 1.0).abs() < 1e-14);
        let hard = warmup_loss([3.5, 1.2], &smooth_label(1, 1.0).unwrap()).unwrap();
        let ace = ace_loss(&[3.5, 1.2], &[1.0, 0.0]).unwrap();
        assert_eq!(hard.value, ace.value);
        assert_eq!(hard.grad_alpha, ace.grad_alpha);
    }
}
