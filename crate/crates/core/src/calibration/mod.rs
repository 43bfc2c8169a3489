//! Transfer-curve measurement, sigmoid fitting and the RBM-to-network mapping.

pub mod fit;
pub mod mapping;
pub mod transfer;

pub use fit::{
    fit_rmse, fit_sigmoid, inverse_transfer, log_rate_r2, refractory_from_rate, SigmoidFit,
};
pub use mapping::{map_rbm_to_network, network_to_rbm, NetworkMapping};
pub use transfer::{
    current_grid, default_grid, measure_rate, measure_transfer_curve, predict_transfer_curve,
    Delivery, Probe, TransferCurve, TransferPoint,
};

use crate::error::Result;
use crate::rng::child_seed;
use crate::sim::NeuronConfig;

/// Outcome of the full calibration protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub curve: TransferCurve,
    /// Rate under the saturating probe (Hz).
    pub probe_rate: f64,
    pub fit: SigmoidFit,
}

/// Measure the grid, estimate `tau_r` from a probe at 100x the largest grid
/// current, and fit the sigmoid.
pub fn calibrate(cfg: &NeuronConfig, grid: &[f64], probe: &Probe, seed: u64) -> Result<Calibration> {
    let curve = measure_transfer_curve(cfg, grid, probe, seed)?;
    let top = grid.iter().fold(0.0f64, |m, &i| m.max(i.abs()));
    let probe_current = 100.0 * top.max(1e-9);
    let probe_rate = measure_rate(cfg, probe_current, probe, child_seed(seed, u64::MAX))?;
    let tau_r = refractory_from_rate(probe_rate)?;
    let fit = fit_sigmoid(&curve, tau_r)?;
    Ok(Calibration {
        curve,
        probe_rate,
        fit,
    })
}
