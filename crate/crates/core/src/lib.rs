//! Neural sampling with noisy leaky integrate-and-fire neurons and
//! event-driven contrastive divergence.

pub mod calibration;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod learning;
pub mod mnist;
pub mod pipeline;
pub mod rbm;
pub mod rng;
pub mod sampling;
pub mod sim;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use rbm::{BoltzmannParams, RbmParams};
