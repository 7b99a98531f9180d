//! Per-view functional and referral networks with hand-written
//! backpropagation, and the Adam optimizer.

pub mod adam;
pub mod layers;
pub mod nets;

pub use adam::AdamState;
pub use layers::{sigmoid, softplus, Activation, BilinearLayer, DenseLayer};
pub use nets::{
    functional_forward, referral_forward, Architecture, EvidentialNets, FunctionalNet,
    FunctionalTrace, NetShape, Parameters, ReferralNet, ReferralTrace, Tensor,
};
