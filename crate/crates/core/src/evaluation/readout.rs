use std::ops::Range;

use crate::sim::SpikeRecord;

/// Population spike counts of each class group and the winning label.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReadout {
    /// Mean rate per neuron of each group over the window (Hz).
    pub rates: Vec<f64>,
    pub winner: usize,
    /// True when every group was silent; `winner` is then 0.
    pub no_evidence: bool,
}

/// Argmax of group-summed spike counts in `[t0, t1)`, ties to the lowest label.
/// `groups` hold global neuron ids.
pub fn classify_by_rate(record: &SpikeRecord, groups: &[Range<usize>], t0: f64, t1: f64) -> ClassReadout {
    let counts = record.counts_in(t0, t1);
    let span = (t1.min(record.duration) - t0).max(f64::MIN_POSITIVE);
    let rates: Vec<f64> = groups
        .iter()
        .map(|g| g.clone().map(|i| counts[i]).sum::<usize>() as f64 / (g.len().max(1) as f64 * span))
        .collect();
    readout_from_rates(rates)
}

pub fn readout_from_rates(rates: Vec<f64>) -> ClassReadout {
    let mut winner = 0;
    for (k, &r) in rates.iter().enumerate() {
        if r > rates[winner] {
            winner = k;
        }
    }
    let no_evidence = rates.iter().all(|&r| r == 0.0);
    ClassReadout {
        rates,
        winner,
        no_evidence,
    }
}
