use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("missing configuration key `{0}`")]
    MissingKey(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite membrane potential in neuron {neuron} at t = {time_s} s")]
    NonFinite { neuron: usize, time_s: f64 },

    #[error("non-finite weight after {presentations} presentations ({detail})")]
    Diverged { presentations: usize, detail: String },

    #[error("{units} units is too many to enumerate (limit {limit})")]
    TooManyUnits { units: usize, limit: usize },

    #[error("distribution supports differ: {0}")]
    Support(String),

    #[error("degenerate transfer curve: {0}")]
    DegenerateCurve(String),

    #[error("value {value} outside the open interval ({lo}, {hi})")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("{path}: {msg} (byte offset {offset})")]
    Parse {
        path: PathBuf,
        offset: u64,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
