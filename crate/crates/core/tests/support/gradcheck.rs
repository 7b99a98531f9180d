//! Analytic gradients against central finite differences.
//!
//! Each suite runs `cases` randomized cases from `seed` and returns the
//! worst relative error it saw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trustfuse::losses::{
    ace_loss, kl_uniform, one_hot, overall_loss_for_label, warmup_loss, SmoothedTarget,
};
use trustfuse::neural::{EvidentialNets, NetShape, Parameters};
use trustfuse::training::{fused_loss_grad, view_loss_grad, warmup_loss_grad};

pub const H: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;

/// `‖a - n‖∞ / max(‖a‖∞, ‖n‖∞)` over a whole gradient vector.
///
/// Componentwise ratios are meaningless for entries that cancel to ~1e-6
/// while the loss itself is in the thousands (lnΓ(S) for α near 100): the
/// difference quotient carries ~1e-9 of rounding noise there.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max);
    let scale = analytic
        .iter()
        .chain(numeric)
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn numeric_grad(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[i] += H;
            minus[i] -= H;
            (f(&plus) - f(&minus)) / (2.0 * H)
        })
        .collect()
}

fn random_alpha(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(1.0..100.0)).collect()
}

pub fn ace(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let k = rng.random_range(2..=10);
        let g = rng.random_range(0..k);
        let alpha = random_alpha(&mut rng, k);
        let y = one_hot(g, k);
        let grad = ace_loss(&alpha, &y).unwrap().grad_alpha;
        let num = numeric_grad(|a| ace_loss(a, &y).unwrap().value, &alpha);
        worst = worst.max(rel_err(&grad, &num));
    }
    worst
}

pub fn kl(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let k = rng.random_range(2..=10);
        let alpha = random_alpha(&mut rng, k);
        let grad = kl_uniform(&alpha).unwrap().grad_alpha;
        let num = numeric_grad(|a| kl_uniform(a).unwrap().value, &alpha);
        worst = worst.max(rel_err(&grad, &num));
    }
    worst
}

pub fn overall(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let k = rng.random_range(2..=10);
        let g = rng.random_range(0..k);
        let alpha = random_alpha(&mut rng, k);
        let weight = rng.random_range(0.0..=1.0);
        let grad = overall_loss_for_label(&alpha, g, weight)
            .unwrap()
            .grad_alpha;
        let num = numeric_grad(
            |a| overall_loss_for_label(a, g, weight).unwrap().value,
            &alpha,
        );
        worst = worst.max(rel_err(&grad, &num));
    }
    worst
}

pub fn warmup(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let alpha = random_alpha(&mut rng, 2);
        let z: f64 = rng.random_range(0.0..=1.0);
        let target = SmoothedTarget {
            probs: [z, 1.0 - z],
        };
        let grad = warmup_loss([alpha[0], alpha[1]], &target)
            .unwrap()
            .grad_alpha;
        let num = numeric_grad(
            |a| warmup_loss([a[0], a[1]], &target).unwrap().value,
            &alpha,
        );
        worst = worst.max(rel_err(&grad, &num));
    }
    worst
}

/// A random micro model with inputs and a label.
pub struct Case {
    pub nets: EvidentialNets,
    pub xs: Vec<Vec<f64>>,
    pub label: usize,
}

impl Case {
    pub fn xs(&self) -> Vec<&[f64]> {
        self.xs.iter().map(Vec::as_slice).collect()
    }
}

pub fn micro_case(rng: &mut ChaCha8Rng, num_views: usize) -> Case {
    let k = rng.random_range(2..=4);
    let dims: Vec<usize> = (0..num_views).map(|_| rng.random_range(2..=4)).collect();
    let shape = NetShape {
        functional_hidden: rng.random_range(3..=8),
        referral_hidden: rng.random_range(3..=8),
        referral_bilinear: rng.random_range(2..=6),
    };
    let mut nets = EvidentialNets::init(&dims, k, shape, rng).unwrap();
    // Nonzero biases so relu units are not all at rest on the same side.
    for t in nets.tensors_mut() {
        for w in t.iter_mut() {
            *w += rng.random_range(-0.3..0.3);
        }
    }
    let xs = dims
        .iter()
        .map(|&d| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    Case {
        nets,
        xs,
        label: rng.random_range(0..k),
    }
}

/// Relative error of the analytic gradient over every parameter in the
/// tensors selected by `include`, and the number of parameters checked.
pub fn check_params(
    case: &Case,
    include: impl Fn(&str) -> bool,
    loss: impl Fn(&EvidentialNets, &mut EvidentialNets) -> f64,
) -> (f64, usize) {
    let mut grads = case.nets.zeros_like();
    loss(&case.nets, &mut grads);

    let mut probe = case.nets.clone();
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    let tensors: Vec<(String, Vec<f64>)> = grads
        .tensors()
        .iter()
        .map(|t| (t.name.clone(), t.data.to_vec()))
        .collect();
    for (ti, (name, grad)) in tensors.into_iter().enumerate() {
        if !include(&name) {
            continue;
        }
        for (j, g) in grad.into_iter().enumerate() {
            let original = probe.tensors_mut()[ti][j];
            probe.tensors_mut()[ti][j] = original + H;
            let plus = loss(&probe, &mut probe.zeros_like());
            probe.tensors_mut()[ti][j] = original - H;
            let minus = loss(&probe, &mut probe.zeros_like());
            probe.tensors_mut()[ti][j] = original;
            analytic.push(g);
            numeric.push((plus - minus) / (2.0 * H));
        }
    }
    (rel_err(&analytic, &numeric), analytic.len())
}

/// Fused loss through trust discounting into both networks.
pub fn fused_td(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..cases {
        let case = micro_case(&mut rng, 2 + trial % 2);
        let xs = case.xs();
        let kl = [0.0, 0.4, 1.0][trial % 3];
        let (err, _) = check_params(
            &case,
            |_| true,
            |nets, grads| {
                fused_loss_grad(nets, &xs, case.label, kl, true, grads)
                    .unwrap()
                    .loss
            },
        );
        worst = worst.max(err);
    }
    worst
}

/// Fused loss without trust discounting; the referral nets must get no
/// gradient at all.
pub fn fused_plain(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..cases {
        let case = micro_case(&mut rng, 2 + trial % 2);
        let xs = case.xs();
        let mut grads = case.nets.zeros_like();
        fused_loss_grad(&case.nets, &xs, case.label, 1.0, false, &mut grads).unwrap();
        if grads
            .referral_tensors()
            .iter()
            .any(|t| t.iter().any(|g| *g != 0.0))
        {
            return f64::INFINITY;
        }
        let (err, _) = check_params(
            &case,
            |_| true,
            |nets, grads| {
                fused_loss_grad(nets, &xs, case.label, 1.0, false, grads)
                    .unwrap()
                    .loss
            },
        );
        worst = worst.max(err);
    }
    worst
}

pub fn per_view(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..cases {
        let case = micro_case(&mut rng, 1 + trial % 3);
        let xs = case.xs();
        let (err, _) = check_params(
            &case,
            |_| true,
            |nets, grads| view_loss_grad(nets, &xs, case.label, 0.7, grads).unwrap(),
        );
        worst = worst.max(err);
    }
    worst
}

/// Warm-up loss into the referral nets; the functional nets must get no
/// gradient.
pub fn warmup_referral(seed: u64, cases: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..cases {
        let case = micro_case(&mut rng, 1 + trial % 3);
        let xs = case.xs();
        let mut grads = case.nets.zeros_like();
        warmup_loss_grad(&case.nets, &xs, case.label, 0.9, &mut grads).unwrap();
        if grads
            .functional_tensors()
            .iter()
            .any(|t| t.iter().any(|g| *g != 0.0))
        {
            return f64::INFINITY;
        }
        let (err, checked) = check_params(
            &case,
            |name| name.starts_with("referral."),
            |nets, grads| {
                warmup_loss_grad(nets, &xs, case.label, 0.9, grads)
                    .unwrap()
                    .loss
            },
        );
        if checked == 0 {
            return f64::INFINITY;
        }
        worst = worst.max(err);
    }
    worst
}
