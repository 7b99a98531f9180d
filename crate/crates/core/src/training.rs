//! Stage-wise training of the functional and referral networks, prediction,
//! and model checkpoints.
//!
//! Training runs four stages over the training split:
//!
//! 1. warm-up: referral nets learn whether each view's functional prediction
//!    is correct (Beta Bayes risk against a label-smoothed target);
//! 2. per batch, one step on the sum of per-view evidential losses, then one
//!    step on the loss of the trust-discounted fused opinion, both on the
//!    functional nets;
//! 3. the fused-loss step again, now on the referral nets;
//! 4. stage 2 again.
//!
//! The KL annealing factor reads a single epoch counter that starts at 0 in
//! stage 2 and keeps counting through stages 3 and 4. With `use_td = false`
//! stages 1 and 3 are skipped and the fused loss uses undiscounted opinions.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{make_pseudo_view, stream_rng, MultiViewDataset, Normalizer, Stream};
use crate::error::{check_dim, Error, Result};
use crate::losses::{
    annealing, correctness_target, overall_loss_for_label, smooth_label, warmup_loss,
};
use crate::metrics::PredictionRecord;
use crate::neural::{
    AdamState, Architecture, EvidentialNets, FunctionalTrace, NetShape, Parameters, ReferralTrace,
};
use crate::opinion::{
    argmax, bcf_evidence_all, bcf_fuse_all, discounted_fuse, evidence_to_opinion,
    DirichletEvidence, MultinomialOpinion, ReferralOpinion,
};

/// All training hyperparameters. Serialized as flat `key = value` TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Functional-network learning rate.
    pub lr: f64,
    /// Referral-network learning rate.
    pub rlr: f64,
    pub weight_decay: f64,
    pub warmup_epochs: usize,
    /// Epochs of stages 2, 3 and 4.
    pub stage_epochs: [usize; 3],
    pub smoothing_eta: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub use_pseudo_view: bool,
    pub use_td: bool,
    pub train_fraction: f64,
    /// z-score features with training-split statistics.
    pub normalize: bool,
    /// Functional hidden width; 0 means `min(64, input_dim)`.
    pub functional_hidden: usize,
    pub referral_hidden: usize,
    pub referral_bilinear: usize,
    /// Count the pseudo-view as a rater in agreement metrics.
    pub pseudo_view_rater: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 3e-3,
            rlr: 3e-4,
            weight_decay: 1e-4,
            warmup_epochs: 1,
            stage_epochs: [100, 50, 100],
            smoothing_eta: 0.9,
            batch_size: 200,
            seed: 0,
            use_pseudo_view: false,
            use_td: true,
            train_fraction: 0.8,
            normalize: true,
            functional_hidden: 0,
            referral_hidden: 32,
            referral_bilinear: 16,
            pseudo_view_rater: false,
        }
    }
}

/// Learning rates `(lr, rlr)` for the benchmark datasets.
pub const DATASET_PRESETS: [(&str, f64, f64); 6] = [
    ("handwritten", 3e-3, 3e-4),
    ("caltech101", 1e-4, 3e-5),
    ("pie", 3e-3, 1e-3),
    ("scene15", 1e-2, 3e-3),
    ("hmdb", 3e-4, 1e-4),
    ("cub", 1e-3, 3e-4),
];

impl TrainConfig {
    /// Defaults with the learning rates of a named benchmark dataset.
    pub fn preset(name: &str) -> Option<Self> {
        let key = name.to_ascii_lowercase();
        DATASET_PRESETS
            .iter()
            .find(|p| p.0 == key)
            .map(|&(_, lr, rlr)| Self {
                lr,
                rlr,
                ..Self::default()
            })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.lr) || !positive(self.rlr) {
            return Err(Error::Config(format!(
                "learning rates must be positive, got lr = {} rlr = {}",
                self.lr, self.rlr
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight decay must be ≥ 0, got {}",
                self.weight_decay
            )));
        }
        if !(self.smoothing_eta > 0.0 && self.smoothing_eta <= 1.0) {
            return Err(Error::Config(format!(
                "smoothing factor must lie in (0, 1], got {}",
                self.smoothing_eta
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.referral_hidden == 0 || self.referral_bilinear == 0 {
            return Err(Error::Config("referral widths must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::load(path, e.to_string()))
    }

    /// Network sizes implied by this config.
    pub fn shape(&self) -> NetShape {
        NetShape {
            functional_hidden: self.functional_hidden,
            referral_hidden: self.referral_hidden,
            referral_bilinear: self.referral_bilinear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Warmup,
    Functional,
    Referral,
    Refine,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Warmup => "warmup",
            Stage::Functional => "stage2",
            Stage::Referral => "stage3",
            Stage::Refine => "stage4",
        }
    }
}

/// Training-split statistics of one epoch, accumulated before each update.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub stage: Stage,
    /// Warm-up epochs count from 0 on their own; stages 2–4 share one
    /// counter.
    pub epoch: usize,
    pub kl_weight: f64,
    /// Mean fused loss (warm-up: summed per-view warm-up loss).
    pub loss: f64,
    /// Mean summed per-view loss of substage 2a; `None` outside stages 2/4.
    pub view_loss: Option<f64>,
    /// Accuracy of the fused prediction.
    pub train_accuracy: f64,
    pub view_accuracy: Vec<f64>,
    pub skipped: usize,
}

impl EpochReport {
    pub fn csv_header(num_views: usize) -> String {
        let mut h = "stage,epoch,kl_weight,loss,view_loss,train_accuracy".to_string();
        for v in 1..=num_views {
            write!(h, ",view{v}_accuracy").expect("writing to a String");
        }
        h.push_str(",skipped");
        h
    }

    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{:.16e},{:.16e},{},{:.16e}",
            self.stage.name(),
            self.epoch,
            self.kl_weight,
            self.loss,
            self.view_loss
                .map_or_else(String::new, |x| format!("{x:.16e}")),
            self.train_accuracy
        );
        for a in &self.view_accuracy {
            write!(row, ",{a:.16e}").expect("writing to a String");
        }
        write!(row, ",{}", self.skipped).expect("writing to a String");
        row
    }
}

/// Forward state of one view inside the fused loss.
struct ViewForward {
    functional: FunctionalTrace,
    referral: Option<ReferralTrace>,
    strength: f64,
    trust: f64,
    factor: f64,
    discounted: Vec<f64>,
}

fn opinion_vector(evidence: &[f64]) -> (Vec<f64>, f64) {
    let k = evidence.len() as f64;
    let s = evidence.iter().sum::<f64>() + k;
    let mut o: Vec<f64> = evidence.iter().map(|e| e / s).collect();
    o.push(k / s);
    (o, s)
}

fn view_forward(nets: &EvidentialNets, v: usize, x: &[f64], use_td: bool) -> Result<ViewForward> {
    let functional = nets.functional[v].forward(x)?;
    let evidence = functional.evidence();
    let (o, strength) = opinion_vector(evidence);
    if !use_td {
        let discounted = evidence.to_vec();
        return Ok(ViewForward {
            functional,
            referral: None,
            strength,
            trust: 1.0,
            factor: 1.0,
            discounted,
        });
    }
    let referral = nets.referral[v].forward(x, &o)?;
    let trust = referral.degree_of_trust();
    let u = o[o.len() - 1];
    let factor = trust * u / (1.0 - trust + trust * u);
    let discounted = evidence.iter().map(|e| factor * e).collect();
    Ok(ViewForward {
        functional,
        referral: Some(referral),
        strength,
        trust,
        factor,
        discounted,
    })
}

/// Loss and predictions of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceLoss {
    pub loss: f64,
    pub fused_label: usize,
    pub view_labels: Vec<usize>,
}

/// Fused evidential loss of one instance; adds `∂loss/∂θ` for every
/// functional and referral parameter into `grads`.
///
/// The forward pass works in evidence form: each view's evidence is scaled
/// by `p·u / (1 - p + p·u)` and the views are folded with
/// `E ← E + ĕ + E∘ĕ / K`.
pub fn fused_loss_grad(
    nets: &EvidentialNets,
    xs: &[&[f64]],
    label: usize,
    kl_weight: f64,
    use_td: bool,
    grads: &mut EvidentialNets,
) -> Result<InstanceLoss> {
    check_dim(nets.num_views(), xs.len())?;
    let k = nets.num_classes as f64;
    let views = xs
        .iter()
        .enumerate()
        .map(|(v, x)| view_forward(nets, v, x, use_td))
        .collect::<Result<Vec<_>>>()?;

    let mut prefix: Vec<Vec<f64>> = Vec::with_capacity(views.len());
    prefix.push(views[0].discounted.clone());
    for view in &views[1..] {
        let prev = prefix.last().expect("nonempty");
        let next = prev
            .iter()
            .zip(&view.discounted)
            .map(|(a, b)| a + b + a * b / k)
            .collect();
        prefix.push(next);
    }
    let fused = prefix.last().expect("nonempty");
    if fused.iter().any(|e| !e.is_finite()) {
        return Err(Error::Numeric("fused evidence overflowed".into()));
    }
    let alpha: Vec<f64> = fused.iter().map(|e| e + 1.0).collect();
    let loss = overall_loss_for_label(&alpha, label, kl_weight)?;
    if !loss.value.is_finite() {
        return Err(Error::Numeric("fused loss is not finite".into()));
    }

    // Unfold the fusion back to the per-view discounted evidence.
    let mut g_fused = loss.grad_alpha.clone();
    let mut g_discounted = vec![Vec::new(); views.len()];
    for v in (1..views.len()).rev() {
        let prev = &prefix[v - 1];
        let cur = &views[v].discounted;
        g_discounted[v] = g_fused
            .iter()
            .zip(prev)
            .map(|(g, p)| g * (1.0 + p / k))
            .collect();
        g_fused = g_fused
            .iter()
            .zip(cur)
            .map(|(g, c)| g * (1.0 + c / k))
            .collect();
    }
    g_discounted[0] = g_fused;

    for (v, (view, g_disc)) in views.iter().zip(&g_discounted).enumerate() {
        let evidence = view.functional.evidence();
        let s = view.strength;
        let mut g_evidence: Vec<f64> = g_disc.iter().map(|g| g * view.factor).collect();
        if let Some(referral) = &view.referral {
            let (p, u) = (view.trust, k / s);
            let d = 1.0 - p + p * u;
            let g_factor: f64 = g_disc.iter().zip(evidence).map(|(g, e)| g * e).sum();
            let g_p = g_factor * u / (d * d);
            let mut g_u = g_factor * p * (1.0 - p) / (d * d);

            let [t, dis] = referral.evidence();
            let s_r = t + dis + 2.0;
            let g_ref = [
                g_p * (dis + 1.0) / (s_r * s_r),
                -g_p * (t + 1.0) / (s_r * s_r),
            ];
            let g_op = nets.referral[v].backward(referral, g_ref, Some(&mut grads.referral[v]));

            // o = [e / S; K / S] with S = Σe + K.
            let kk = evidence.len();
            g_u += g_op[kk];
            let weighted: f64 = g_op[..kk].iter().zip(evidence).map(|(g, e)| g * e).sum();
            for (j, ge) in g_evidence.iter_mut().enumerate() {
                *ge += g_op[j] / s - weighted / (s * s) - g_u * k / (s * s);
            }
        }
        nets.functional[v].backward(
            &view.functional,
            &g_evidence,
            Some(&mut grads.functional[v]),
        );
    }

    Ok(InstanceLoss {
        loss: loss.value,
        fused_label: argmax(fused),
        view_labels: views
            .iter()
            .map(|vf| argmax(vf.functional.evidence()))
            .collect(),
    })
}

/// Sum over views of each view's own evidential loss; gradients go to the
/// functional nets.
pub fn view_loss_grad(
    nets: &EvidentialNets,
    xs: &[&[f64]],
    label: usize,
    kl_weight: f64,
    grads: &mut EvidentialNets,
) -> Result<f64> {
    check_dim(nets.num_views(), xs.len())?;
    let mut passes = Vec::with_capacity(xs.len());
    for (v, x) in xs.iter().enumerate() {
        let trace = nets.functional[v].forward(x)?;
        let alpha: Vec<f64> = trace.evidence().iter().map(|e| e + 1.0).collect();
        let loss = overall_loss_for_label(&alpha, label, kl_weight)?;
        passes.push((trace, loss));
    }
    let total: f64 = passes.iter().map(|(_, l)| l.value).sum();
    if !total.is_finite() {
        return Err(Error::Numeric("per-view loss is not finite".into()));
    }
    for (v, (trace, loss)) in passes.iter().enumerate() {
        nets.functional[v].backward(trace, &loss.grad_alpha, Some(&mut grads.functional[v]));
    }
    Ok(total)
}

/// Sum over views of the warm-up loss of the referral Beta evidence against
/// the smoothed correctness of that view's functional prediction; gradients
/// go to the referral nets.
pub fn warmup_loss_grad(
    nets: &EvidentialNets,
    xs: &[&[f64]],
    label: usize,
    eta: f64,
    grads: &mut EvidentialNets,
) -> Result<InstanceLoss> {
    check_dim(nets.num_views(), xs.len())?;
    let mut passes = Vec::with_capacity(xs.len());
    let mut view_labels = Vec::with_capacity(xs.len());
    let mut discounted = Vec::with_capacity(xs.len());
    for (v, x) in xs.iter().enumerate() {
        let trace = nets.functional[v].forward(x)?;
        let evidence = trace.evidence();
        let predicted = argmax(evidence);
        let target = smooth_label(correctness_target(predicted, label), eta)?;
        let (o, _) = opinion_vector(evidence);
        let referral = nets.referral[v].forward(x, &o)?;
        let [t, d] = referral.evidence();
        let loss = warmup_loss([t + 1.0, d + 1.0], &target)?;

        let p = referral.degree_of_trust();
        let u = o[o.len() - 1];
        let f = p * u / (1.0 - p + p * u);
        discounted.push(DirichletEvidence::new(
            evidence.iter().map(|e| f * e).collect(),
        )?);
        view_labels.push(predicted);
        passes.push((referral, loss));
    }
    let total: f64 = passes.iter().map(|(_, l)| l.value).sum();
    if !total.is_finite() {
        return Err(Error::Numeric("warm-up loss is not finite".into()));
    }
    let fused = bcf_evidence_all(&discounted)?;
    for (v, (referral, loss)) in passes.iter().enumerate() {
        nets.referral[v].backward(
            referral,
            [loss.grad_alpha[0], loss.grad_alpha[1]],
            Some(&mut grads.referral[v]),
        );
    }
    Ok(InstanceLoss {
        loss: total,
        fused_label: argmax(fused.evidence()),
        view_labels,
    })
}

/// Which parameter group an optimizer step updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Functional,
    Referral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pass {
    Warmup,
    Views,
    Fused,
}

/// Accumulates one epoch's statistics.
struct Tally {
    loss: f64,
    view_loss: f64,
    count: usize,
    correct: usize,
    view_correct: Vec<usize>,
    skipped: usize,
}

impl Tally {
    fn new(num_views: usize) -> Self {
        Self {
            loss: 0.0,
            view_loss: 0.0,
            count: 0,
            correct: 0,
            view_correct: vec![0; num_views],
            skipped: 0,
        }
    }

    fn report(&self, stage: Stage, epoch: usize, kl_weight: f64, with_views: bool) -> EpochReport {
        let n = self.count.max(1) as f64;
        EpochReport {
            stage,
            epoch,
            kl_weight,
            loss: self.loss / n,
            view_loss: with_views.then(|| self.view_loss / n),
            train_accuracy: self.correct as f64 / n,
            view_accuracy: self.view_correct.iter().map(|&c| c as f64 / n).collect(),
            skipped: self.skipped,
        }
    }
}

/// Mutable training state over a prepared dataset.
pub struct Trainer<'a> {
    pub nets: EvidentialNets,
    config: TrainConfig,
    data: &'a MultiViewDataset,
    functional_adam: AdamState,
    referral_adam: AdamState,
    batch_rng: ChaCha8Rng,
    epoch: usize,
}

impl<'a> Trainer<'a> {
    /// `data` must already be normalized and carry any pseudo-view.
    pub fn new(
        nets: EvidentialNets,
        data: &'a MultiViewDataset,
        config: TrainConfig,
    ) -> Result<Self> {
        config.validate()?;
        check_dim(nets.num_views(), data.num_views())?;
        check_dim(nets.num_classes, data.num_classes())?;
        for (net_dim, data_dim) in nets.input_dims().into_iter().zip(data.dims()) {
            check_dim(net_dim, data_dim)?;
        }
        if data.train_indices().is_empty() {
            return Err(Error::domain("training split is empty"));
        }
        let functional_adam = AdamState::for_tensors(&nets.functional_tensors());
        let referral_adam = AdamState::for_tensors(&nets.referral_tensors());
        let batch_rng = stream_rng(config.seed, Stream::Batching);
        Ok(Self {
            nets,
            config,
            data,
            functional_adam,
            referral_adam,
            batch_rng,
            epoch: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Global epoch counter of stages 2–4.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn batches(&mut self) -> Vec<Vec<usize>> {
        let mut order = self.data.train_indices().to_vec();
        order.shuffle(&mut self.batch_rng);
        order
            .chunks(self.config.batch_size)
            .map(<[usize]>::to_vec)
            .collect()
    }

    /// Mean gradient of `pass` over `batch`, then one Adam step on `group`.
    fn step(
        &mut self,
        batch: &[usize],
        pass: Pass,
        group: Group,
        kl_weight: f64,
        tally: &mut Tally,
    ) -> Result<()> {
        let mut grads = self.nets.zeros_like();
        let mut used = 0usize;
        for &i in batch {
            let xs = self.data.instance(i);
            let y = self.data.labels()[i];
            let outcome = match pass {
                Pass::Warmup => {
                    warmup_loss_grad(&self.nets, &xs, y, self.config.smoothing_eta, &mut grads)
                }
                Pass::Fused => fused_loss_grad(
                    &self.nets,
                    &xs,
                    y,
                    kl_weight,
                    self.config.use_td,
                    &mut grads,
                ),
                Pass::Views => {
                    view_loss_grad(&self.nets, &xs, y, kl_weight, &mut grads).map(|loss| {
                        InstanceLoss {
                            loss,
                            fused_label: usize::MAX,
                            view_labels: Vec::new(),
                        }
                    })
                }
            };
            let outcome = match outcome {
                Ok(o) => o,
                Err(Error::Numeric(_) | Error::Conflict(_)) => {
                    tally.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            used += 1;
            if pass == Pass::Views {
                tally.view_loss += outcome.loss;
                continue;
            }
            tally.loss += outcome.loss;
            tally.count += 1;
            tally.correct += usize::from(outcome.fused_label == y);
            for (c, &l) in tally.view_correct.iter_mut().zip(&outcome.view_labels) {
                *c += usize::from(l == y);
            }
        }
        if used == 0 {
            return Ok(());
        }
        grads.scale(1.0 / used as f64);
        let wd = self.config.weight_decay;
        match group {
            Group::Functional => {
                let g = grads.functional_tensors();
                self.functional_adam.step(
                    self.nets.functional_tensors_mut(),
                    &g,
                    self.config.lr,
                    wd,
                )
            }
            Group::Referral => {
                let g = grads.referral_tensors();
                self.referral_adam
                    .step(self.nets.referral_tensors_mut(), &g, self.config.rlr, wd)
            }
        }
    }

    /// Stage 1; updates the referral nets only.
    pub fn stage1_warmup(&mut self) -> Result<Vec<EpochReport>> {
        let mut reports = Vec::new();
        for epoch in 0..self.config.warmup_epochs {
            let mut tally = Tally::new(self.nets.num_views());
            for batch in self.batches() {
                self.step(&batch, Pass::Warmup, Group::Referral, 0.0, &mut tally)?;
            }
            reports.push(tally.report(Stage::Warmup, epoch, 0.0, false));
        }
        Ok(reports)
    }

    fn functional_epochs(&mut self, stage: Stage, epochs: usize) -> Result<Vec<EpochReport>> {
        let mut reports = Vec::new();
        for _ in 0..epochs {
            let kl = annealing(self.epoch);
            let mut tally = Tally::new(self.nets.num_views());
            for batch in self.batches() {
                self.step(&batch, Pass::Views, Group::Functional, kl, &mut tally)?;
                self.step(&batch, Pass::Fused, Group::Functional, kl, &mut tally)?;
            }
            reports.push(tally.report(stage, self.epoch, kl, true));
            self.epoch += 1;
        }
        Ok(reports)
    }

    /// Stage 2; updates the functional nets only.
    pub fn stage2_functional(&mut self) -> Result<Vec<EpochReport>> {
        self.functional_epochs(Stage::Functional, self.config.stage_epochs[0])
    }

    /// Stage 3; updates the referral nets only.
    pub fn stage3_referral(&mut self) -> Result<Vec<EpochReport>> {
        let mut reports = Vec::new();
        for _ in 0..self.config.stage_epochs[1] {
            let kl = annealing(self.epoch);
            let mut tally = Tally::new(self.nets.num_views());
            for batch in self.batches() {
                self.step(&batch, Pass::Fused, Group::Referral, kl, &mut tally)?;
            }
            reports.push(tally.report(Stage::Referral, self.epoch, kl, false));
            self.epoch += 1;
        }
        Ok(reports)
    }

    /// Stage 4; same contract as stage 2.
    pub fn stage4_functional(&mut self) -> Result<Vec<EpochReport>> {
        self.functional_epochs(Stage::Refine, self.config.stage_epochs[2])
    }

    /// All stages in order. Stages 1 and 3 only run with trust discounting.
    pub fn run(&mut self, mut on_epoch: impl FnMut(&EpochReport)) -> Result<Vec<EpochReport>> {
        let mut reports = Vec::new();
        let mut extend = |rs: Vec<EpochReport>, reports: &mut Vec<EpochReport>| {
            rs.iter().for_each(&mut on_epoch);
            reports.extend(rs);
        };
        if self.config.use_td {
            extend(self.stage1_warmup()?, &mut reports);
        }
        extend(self.stage2_functional()?, &mut reports);
        if self.config.use_td {
            extend(self.stage3_referral()?, &mut reports);
        }
        extend(self.stage4_functional()?, &mut reports);
        Ok(reports)
    }
}

/// Opinions behind one prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub fused: MultinomialOpinion,
    pub view_opinions: Vec<MultinomialOpinion>,
    /// Degree of trust per view; 1 when trust discounting is off.
    pub view_trust: Vec<f64>,
}

/// Functional and referral forward passes per view, then discounted fusion
/// in opinion form (plain fusion without trust discounting). Ties in the
/// fused belief go to the lowest class index.
pub fn predict(nets: &EvidentialNets, xs: &[&[f64]], use_td: bool) -> Result<Prediction> {
    check_dim(nets.num_views(), xs.len())?;
    let mut view_opinions = Vec::with_capacity(xs.len());
    let mut view_trust = Vec::with_capacity(xs.len());
    for (v, x) in xs.iter().enumerate() {
        let trace = nets.functional[v].forward(x)?;
        let op = evidence_to_opinion(&DirichletEvidence::new(trace.evidence().to_vec())?);
        let trust = if use_td {
            let [t, d] = nets.referral[v].forward(x, &op.to_vector())?.evidence();
            ReferralOpinion::from_evidence(t, d)?.degree_of_trust()
        } else {
            1.0
        };
        view_opinions.push(op);
        view_trust.push(trust);
    }
    let fused = if use_td {
        discounted_fuse(&view_opinions, &view_trust)?
    } else {
        bcf_fuse_all(&view_opinions)?
    };
    Ok(Prediction {
        label: fused.argmax(),
        fused,
        view_opinions,
        view_trust,
    })
}

/// Trained networks with the preprocessing they expect.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub nets: EvidentialNets,
    pub config: TrainConfig,
    /// Statistics of the raw (pre-pseudo-view) views.
    pub normalizer: Option<Normalizer>,
}

/// Output of [`train`].
pub struct TrainOutput {
    pub model: Model,
    pub reports: Vec<EpochReport>,
}

/// Trains on the training split of a raw dataset.
pub fn train(data: &MultiViewDataset, config: &TrainConfig) -> Result<TrainOutput> {
    train_with(data, config, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    data: &MultiViewDataset,
    config: &TrainConfig,
    on_epoch: impl FnMut(&EpochReport),
) -> Result<TrainOutput> {
    config.validate()?;
    let normalizer = config.normalize.then(|| Normalizer::fit(data));
    let prepared = prepare(data, normalizer.as_ref(), config.use_pseudo_view)?;
    let mut rng = stream_rng(config.seed, Stream::Init);
    let nets = EvidentialNets::init(
        &prepared.dims(),
        prepared.num_classes(),
        config.shape(),
        &mut rng,
    )?;
    let mut trainer = Trainer::new(nets, &prepared, config.clone())?;
    let reports = trainer.run(on_epoch)?;
    let model = Model {
        nets: trainer.nets,
        config: config.clone(),
        normalizer,
    };
    Ok(TrainOutput { model, reports })
}

fn prepare(
    raw: &MultiViewDataset,
    normalizer: Option<&Normalizer>,
    pseudo_view: bool,
) -> Result<MultiViewDataset> {
    let normalized = match normalizer {
        Some(n) => n.apply(raw)?,
        None => raw.clone(),
    };
    Ok(if pseudo_view {
        make_pseudo_view(&normalized)
    } else {
        normalized
    })
}

/// Per-instance evaluation output.
pub struct Evaluation {
    pub indices: Vec<usize>,
    pub predictions: Vec<Prediction>,
    pub records: Vec<PredictionRecord>,
    /// Instances whose fusion hit total conflict.
    pub flagged: Vec<usize>,
}

impl Model {
    /// Applies normalization and appends the pseudo-view when configured.
    pub fn prepare(&self, raw: &MultiViewDataset) -> Result<MultiViewDataset> {
        prepare(raw, self.normalizer.as_ref(), self.config.use_pseudo_view)
    }

    /// Number of raw views the model consumes.
    pub fn num_input_views(&self) -> usize {
        self.nets.num_views() - usize::from(self.config.use_pseudo_view)
    }

    pub fn input_dims(&self) -> Vec<usize> {
        let mut dims = self.nets.input_dims();
        dims.truncate(self.num_input_views());
        dims
    }

    /// Prediction from raw per-view feature rows.
    pub fn predict_raw(&self, raw: &[&[f64]]) -> Result<Prediction> {
        check_dim(self.num_input_views(), raw.len())?;
        let mut rows: Vec<Vec<f64>> = raw.iter().map(|r| r.to_vec()).collect();
        for (v, (row, dim)) in rows.iter_mut().zip(self.input_dims()).enumerate() {
            check_dim(dim, row.len())?;
            if let Some(n) = &self.normalizer {
                n.apply_row(v, row);
            }
        }
        if self.config.use_pseudo_view {
            rows.push(rows.concat());
        }
        let xs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        predict(&self.nets, &xs, self.config.use_td)
    }

    /// Predicts the given instances of a raw dataset.
    pub fn evaluate(&self, raw: &MultiViewDataset, indices: &[usize]) -> Result<Evaluation> {
        if raw.num_views() != self.num_input_views() || raw.dims() != self.input_dims() {
            return Err(Error::domain(format!(
                "model expects view dims {:?}, dataset has {:?}",
                self.input_dims(),
                raw.dims()
            )));
        }
        if raw.num_classes() != self.nets.num_classes {
            return Err(Error::domain(format!(
                "model has {} classes, dataset has {}",
                self.nets.num_classes,
                raw.num_classes()
            )));
        }
        let prepared = self.prepare(raw)?;
        let raters = if self.config.use_pseudo_view && !self.config.pseudo_view_rater {
            self.num_input_views()
        } else {
            self.nets.num_views()
        };
        let mut out = Evaluation {
            indices: Vec::new(),
            predictions: Vec::new(),
            records: Vec::new(),
            flagged: Vec::new(),
        };
        for &i in indices {
            let p = match predict(&self.nets, &prepared.instance(i), self.config.use_td) {
                Ok(p) => p,
                Err(Error::Conflict(_)) => {
                    out.flagged.push(i);
                    continue;
                }
                Err(e) => return Err(e),
            };
            out.records.push(PredictionRecord {
                fused_label: p.label,
                fused_uncertainty: p.fused.uncertainty(),
                true_label: raw.labels()[i],
                view_labels: p.view_opinions[..raters]
                    .iter()
                    .map(MultinomialOpinion::argmax)
                    .collect(),
                view_trust: p.view_trust.clone(),
            });
            out.indices.push(i);
            out.predictions.push(p);
        }
        Ok(out)
    }

    /// Writes the checkpoint text format; see [`Model::from_checkpoint`].
    pub fn to_checkpoint(&self) -> String {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            architecture: self.nets.architecture(),
            config: self.config.clone(),
        };
        let mut out = toml::to_string(&header).expect("header serializes");
        out.push_str(CHECKPOINT_SEPARATOR);
        out.push('\n');
        let mut tensor = |name: &str, shape: &[usize], data: &[f64]| {
            let dims: Vec<String> = shape.iter().map(usize::to_string).collect();
            writeln!(out, "{name} {}", dims.join(" ")).expect("writing to a String");
            let values: Vec<String> = data.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", values.join(" ")).expect("writing to a String");
        };
        for t in self.nets.tensors() {
            tensor(&t.name, &t.shape, t.data);
        }
        if let Some(n) = &self.normalizer {
            for (v, (mean, std)) in n.mean.iter().zip(&n.std).enumerate() {
                tensor(&format!("normalizer.{v}.mean"), &[mean.len()], mean);
                tensor(&format!("normalizer.{v}.std"), &[std.len()], std);
            }
        }
        out
    }

    /// Parses the checkpoint text format:
    ///
    /// ```text
    /// format = "trustfuse-checkpoint"
    /// version = 1
    /// [architecture]   num_classes, input_dims, functional_hidden, ...
    /// [config]         the full TrainConfig
    /// ---
    /// <tensor name> <dim> <dim> ...
    /// <row-major values, space-separated, {:.16e}>
    /// ...
    /// ```
    ///
    /// Network tensors come first in a fixed order (functional nets, then
    /// referral nets, view by view), followed by `normalizer.{v}.mean` and
    /// `normalizer.{v}.std` when the model normalizes its inputs.
    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Config(format!("checkpoint: {m}"));
        let (head, body) = text
            .split_once(&format!("\n{CHECKPOINT_SEPARATOR}\n"))
            .ok_or_else(|| bad("missing header separator".into()))?;
        let header: CheckpointHeader = toml::from_str(head).map_err(|e| bad(e.to_string()))?;
        if header.format != CHECKPOINT_FORMAT || header.version != CHECKPOINT_VERSION {
            return Err(bad(format!(
                "unsupported format {} version {}",
                header.format, header.version
            )));
        }
        header.config.validate()?;
        let mut lines = body.lines();
        let mut next_tensor = |name: &str, shape: &[usize]| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("missing tensor {name}")))?;
            let mut fields = line.split_whitespace();
            let found = fields.next().unwrap_or_default();
            let dims: Vec<usize> = fields
                .map(|f| f.parse().map_err(|_| bad(format!("bad shape for {found}"))))
                .collect::<Result<_>>()?;
            if found != name || dims != shape {
                return Err(bad(format!(
                    "expected tensor {name} {shape:?}, found {found} {dims:?}"
                )));
            }
            let values: Vec<f64> = lines
                .next()
                .unwrap_or_default()
                .split_whitespace()
                .map(|f| f.parse().map_err(|_| bad(format!("bad value in {name}"))))
                .collect::<Result<_>>()?;
            if values.len() != shape.iter().product::<usize>()
                || values.iter().any(|x| !x.is_finite())
            {
                return Err(bad(format!(
                    "tensor {name} has {} values or non-finite entries",
                    values.len()
                )));
            }
            Ok(values)
        };

        let mut nets = EvidentialNets::zeros(&header.architecture)?;
        let expected: Vec<(String, Vec<usize>)> = nets
            .tensors()
            .into_iter()
            .map(|t| (t.name, t.shape))
            .collect();
        for ((name, shape), slot) in expected.iter().zip(nets.tensors_mut()) {
            slot.copy_from_slice(&next_tensor(name, shape)?);
        }
        let normalizer = if header.config.normalize {
            let raw_views =
                header.architecture.input_dims.len() - usize::from(header.config.use_pseudo_view);
            let mut n = Normalizer {
                mean: Vec::new(),
                std: Vec::new(),
            };
            for (v, &dim) in header.architecture.input_dims[..raw_views]
                .iter()
                .enumerate()
            {
                n.mean
                    .push(next_tensor(&format!("normalizer.{v}.mean"), &[dim])?);
                n.std
                    .push(next_tensor(&format!("normalizer.{v}.std"), &[dim])?);
            }
            Some(n)
        } else {
            None
        };
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(bad("trailing data after the last tensor".into()));
        }
        Ok(Self {
            nets,
            config: header.config,
            normalizer,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text).map_err(|e| Error::load(path, e.to_string()))
    }
}

const CHECKPOINT_FORMAT: &str = "trustfuse-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;
const CHECKPOINT_SEPARATOR: &str = "---";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointHeader {
    format: String,
    version: u32,
    architecture: Architecture,
    config: TrainConfig,
}
