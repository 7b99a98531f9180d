use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Activation, BilinearLayer, BilinearTrace, DenseLayer, DenseTrace};
use crate::error::{check_dim, Error, Result};
use crate::opinion::{DirichletEvidence, MultinomialOpinion};

/// A named parameter tensor, row-major.
pub struct Tensor<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

/// Uniform access to the parameter tensors of a network, in a fixed order.
pub trait Parameters {
    fn tensors(&self) -> Vec<Tensor<'_>>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }
}

fn dense_tensors<'a>(prefix: &str, layer: &'a DenseLayer, out: &mut Vec<Tensor<'a>>) {
    out.push(Tensor {
        name: format!("{prefix}.weight"),
        shape: vec![layer.in_dim, layer.out_dim],
        data: &layer.weights,
    });
    out.push(Tensor {
        name: format!("{prefix}.bias"),
        shape: vec![layer.out_dim],
        data: &layer.bias,
    });
}

/// Per-view functional evidence network: features → K evidences.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalNet {
    pub layers: Vec<DenseLayer>,
}

pub struct FunctionalTrace {
    layers: Vec<DenseTrace>,
}

impl FunctionalTrace {
    pub fn evidence(&self) -> &[f64] {
        &self
            .layers
            .last()
            .expect("functional net has layers")
            .output
    }
}

impl FunctionalNet {
    /// One relu hidden layer followed by a softplus evidence head.
    pub fn init<R: Rng>(input_dim: usize, hidden: usize, num_classes: usize, rng: &mut R) -> Self {
        Self {
            layers: vec![
                DenseLayer::init(input_dim, hidden, Activation::Relu, rng),
                DenseLayer::init(hidden, num_classes, Activation::Softplus, rng),
            ],
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize, num_classes: usize) -> Self {
        Self {
            layers: vec![
                DenseLayer::zeros(input_dim, hidden, Activation::Relu),
                DenseLayer::zeros(hidden, num_classes, Activation::Softplus),
            ],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(DenseLayer::zeros_like).collect(),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.layers[0].out_dim
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn forward(&self, x: &[f64]) -> Result<FunctionalTrace> {
        let mut traces: Vec<DenseTrace> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = traces.last().map_or(x, |t| t.output.as_slice());
            let trace = layer.forward(input)?;
            traces.push(trace);
        }
        Ok(FunctionalTrace { layers: traces })
    }

    /// Backpropagates `∂L/∂evidence`; returns `∂L/∂x`.
    pub fn backward(
        &self,
        trace: &FunctionalTrace,
        grad_evidence: &[f64],
        mut grads: Option<&mut FunctionalNet>,
    ) -> Vec<f64> {
        let mut g = grad_evidence.to_vec();
        for (i, (layer, t)) in self.layers.iter().zip(&trace.layers).enumerate().rev() {
            let layer_grads = grads.as_deref_mut().map(|n| &mut n.layers[i]);
            g = layer.backward(t, &g, layer_grads);
        }
        g
    }
}

impl Parameters for FunctionalNet {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            dense_tensors(&format!("layer{i}"), layer, &mut out);
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

/// Per-view referral network: dense encoder of the view features, a
/// bilinear interaction with the `K + 1` functional opinion vector, and a
/// dense softplus head emitting (trust, distrust) evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferralNet {
    pub encoder: DenseLayer,
    pub bilinear: BilinearLayer,
    pub head: DenseLayer,
}

pub struct ReferralTrace {
    encoder: DenseTrace,
    bilinear: BilinearTrace,
    head: DenseTrace,
}

impl ReferralTrace {
    /// (trust, distrust) evidence.
    pub fn evidence(&self) -> [f64; 2] {
        [self.head.output[0], self.head.output[1]]
    }

    /// Degree of trust of the Beta-form referral opinion, `α_t / (α_t + α_d)`.
    pub fn degree_of_trust(&self) -> f64 {
        let [t, d] = self.evidence();
        (t + 1.0) / (t + d + 2.0)
    }
}

impl ReferralNet {
    pub fn init<R: Rng>(
        input_dim: usize,
        num_classes: usize,
        hidden: usize,
        bilinear: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            encoder: DenseLayer::init(input_dim, hidden, Activation::Relu, rng),
            bilinear: BilinearLayer::init(hidden, num_classes + 1, bilinear, Activation::Relu, rng),
            head: DenseLayer::init(bilinear, 2, Activation::Softplus, rng),
        }
    }

    pub fn zeros(input_dim: usize, num_classes: usize, hidden: usize, bilinear: usize) -> Self {
        Self {
            encoder: DenseLayer::zeros(input_dim, hidden, Activation::Relu),
            bilinear: BilinearLayer::zeros(hidden, num_classes + 1, bilinear, Activation::Relu),
            head: DenseLayer::zeros(bilinear, 2, Activation::Softplus),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: self.encoder.zeros_like(),
            bilinear: self.bilinear.zeros_like(),
            head: self.head.zeros_like(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.in_dim
    }

    pub fn forward(&self, x: &[f64], opinion: &[f64]) -> Result<ReferralTrace> {
        let encoder = self.encoder.forward(x)?;
        let bilinear = self.bilinear.forward(&encoder.output, opinion)?;
        let head = self.head.forward(&bilinear.output)?;
        Ok(ReferralTrace {
            encoder,
            bilinear,
            head,
        })
    }

    /// Backpropagates `∂L/∂(trust, distrust evidence)`; returns
    /// `∂L/∂opinion`.
    pub fn backward(
        &self,
        trace: &ReferralTrace,
        grad_evidence: [f64; 2],
        mut grads: Option<&mut ReferralNet>,
    ) -> Vec<f64> {
        let g = self.head.backward(
            &trace.head,
            &grad_evidence,
            grads.as_deref_mut().map(|n| &mut n.head),
        );
        let (g_h, g_op) = self.bilinear.backward(
            &trace.bilinear,
            &g,
            grads.as_deref_mut().map(|n| &mut n.bilinear),
        );
        if let Some(n) = grads {
            self.encoder
                .backward(&trace.encoder, &g_h, Some(&mut n.encoder));
        }
        g_op
    }
}

impl Parameters for ReferralNet {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        dense_tensors("encoder", &self.encoder, &mut out);
        out.push(Tensor {
            name: "bilinear.weight".into(),
            shape: vec![
                self.bilinear.left_dim,
                self.bilinear.right_dim,
                self.bilinear.out_dim,
            ],
            data: &self.bilinear.weights,
        });
        out.push(Tensor {
            name: "bilinear.bias".into(),
            shape: vec![self.bilinear.out_dim],
            data: &self.bilinear.bias,
        });
        dense_tensors("head", &self.head, &mut out);
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.encoder.weights.as_mut_slice(),
            self.encoder.bias.as_mut_slice(),
            self.bilinear.weights.as_mut_slice(),
            self.bilinear.bias.as_mut_slice(),
            self.head.weights.as_mut_slice(),
            self.head.bias.as_mut_slice(),
        ]
    }
}

/// Architecture hyperparameters shared by all views.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetShape {
    /// Functional hidden width; 0 selects `min(64, input_dim)`.
    pub functional_hidden: usize,
    pub referral_hidden: usize,
    pub referral_bilinear: usize,
}

impl Default for NetShape {
    fn default() -> Self {
        Self {
            functional_hidden: 0,
            referral_hidden: 32,
            referral_bilinear: 16,
        }
    }
}

impl NetShape {
    pub fn functional_width(&self, input_dim: usize) -> usize {
        if self.functional_hidden == 0 {
            input_dim.clamp(1, 64)
        } else {
            self.functional_hidden
        }
    }
}

/// Everything needed to rebuild [`EvidentialNets`] before loading weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub num_classes: usize,
    pub input_dims: Vec<usize>,
    pub functional_hidden: Vec<usize>,
    pub referral_hidden: usize,
    pub referral_bilinear: usize,
}

/// Functional and referral networks for every view.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidentialNets {
    pub num_classes: usize,
    pub functional: Vec<FunctionalNet>,
    pub referral: Vec<ReferralNet>,
}

impl EvidentialNets {
    pub fn init<R: Rng>(
        input_dims: &[usize],
        num_classes: usize,
        shape: NetShape,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dims.is_empty() || num_classes < 2 {
            return Err(Error::domain(
                "networks need at least one view and two classes",
            ));
        }
        let functional = input_dims
            .iter()
            .map(|&d| FunctionalNet::init(d, shape.functional_width(d), num_classes, rng))
            .collect();
        let referral = input_dims
            .iter()
            .map(|&d| {
                ReferralNet::init(
                    d,
                    num_classes,
                    shape.referral_hidden,
                    shape.referral_bilinear,
                    rng,
                )
            })
            .collect();
        Ok(Self {
            num_classes,
            functional,
            referral,
        })
    }

    /// All-zero networks of the given shape.
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        if arch.input_dims.is_empty() || arch.num_classes < 2 {
            return Err(Error::domain(
                "networks need at least one view and two classes",
            ));
        }
        check_dim(arch.input_dims.len(), arch.functional_hidden.len())?;
        Ok(Self {
            num_classes: arch.num_classes,
            functional: arch
                .input_dims
                .iter()
                .zip(&arch.functional_hidden)
                .map(|(&d, &h)| FunctionalNet::zeros(d, h, arch.num_classes))
                .collect(),
            referral: arch
                .input_dims
                .iter()
                .map(|&d| {
                    ReferralNet::zeros(
                        d,
                        arch.num_classes,
                        arch.referral_hidden,
                        arch.referral_bilinear,
                    )
                })
                .collect(),
        })
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            num_classes: self.num_classes,
            input_dims: self.input_dims(),
            functional_hidden: self
                .functional
                .iter()
                .map(FunctionalNet::hidden_dim)
                .collect(),
            referral_hidden: self.referral[0].encoder.out_dim,
            referral_bilinear: self.referral[0].bilinear.out_dim,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            num_classes: self.num_classes,
            functional: self
                .functional
                .iter()
                .map(FunctionalNet::zeros_like)
                .collect(),
            referral: self.referral.iter().map(ReferralNet::zeros_like).collect(),
        }
    }

    pub fn num_views(&self) -> usize {
        self.functional.len()
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.functional
            .iter()
            .map(FunctionalNet::input_dim)
            .collect()
    }

    pub fn functional_tensors(&self) -> Vec<&[f64]> {
        self.functional
            .iter()
            .flat_map(|n| n.tensors().into_iter().map(|t| t.data))
            .collect()
    }

    pub fn functional_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.functional
            .iter_mut()
            .flat_map(|n| n.tensors_mut())
            .collect()
    }

    pub fn referral_tensors(&self) -> Vec<&[f64]> {
        self.referral
            .iter()
            .flat_map(|n| n.tensors().into_iter().map(|t| t.data))
            .collect()
    }

    pub fn referral_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.referral
            .iter_mut()
            .flat_map(|n| n.tensors_mut())
            .collect()
    }

    /// Multiplies every parameter (used as a gradient buffer) by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= factor);
        }
    }
}

impl Parameters for EvidentialNets {
    fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        for (v, net) in self.functional.iter().enumerate() {
            out.extend(net.tensors().into_iter().map(|t| Tensor {
                name: format!("functional.{v}.{}", t.name),
                ..t
            }));
        }
        for (v, net) in self.referral.iter().enumerate() {
            out.extend(net.tensors().into_iter().map(|t| Tensor {
                name: format!("referral.{v}.{}", t.name),
                ..t
            }));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .functional
            .iter_mut()
            .flat_map(|n| n.tensors_mut())
            .collect();
        out.extend(self.referral.iter_mut().flat_map(|n| n.tensors_mut()));
        out
    }
}

/// Functional evidence for one view.
pub fn functional_forward(net: &FunctionalNet, x: &[f64]) -> Result<DirichletEvidence> {
    let trace = net.forward(x)?;
    DirichletEvidence::new(trace.evidence().to_vec())
}

/// (trust, distrust) evidence of the referral network for one view.
pub fn referral_forward(
    net: &ReferralNet,
    x: &[f64],
    func_opinion: &MultinomialOpinion,
) -> Result<[f64; 2]> {
    check_dim(net.bilinear.right_dim, func_opinion.num_classes() + 1)?;
    Ok(net.forward(x, &func_opinion.to_vector())?.evidence())
}
