#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod data;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod neural;
pub mod opinion;
pub mod special;
pub mod training;

pub use data::MultiViewDataset;
pub use error::{Error, Result};
pub use opinion::{DirichletEvidence, MultinomialOpinion, ReferralOpinion};
pub use training::{Model, TrainConfig};
