use crate::sim::SpikeRecord;

/// Binary unit states sampled at a fixed rate. Row `k` is the state at
/// `t_k = (k + 1) / sample_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTrace {
    pub n_units: usize,
    pub sample_rate: f64,
    /// Row-major `n_samples x n_units`, entries 0 or 1.
    pub states: Vec<u8>,
}

impl BinaryTrace {
    pub fn n_samples(&self) -> usize {
        if self.n_units == 0 {
            0
        } else {
            self.states.len() / self.n_units
        }
    }

    pub fn row(&self, k: usize) -> &[u8] {
        &self.states[k * self.n_units..(k + 1) * self.n_units]
    }

    /// Joint state of row `k` with unit `i` in bit `i`.
    pub fn code(&self, k: usize) -> u64 {
        self.row(k)
            .iter()
            .enumerate()
            .fold(0, |c, (i, &z)| c | (z as u64) << i)
    }

    pub fn codes(&self) -> Vec<u64> {
        (0..self.n_samples()).map(|k| self.code(k)).collect()
    }

    /// Fraction of samples in which each unit is on.
    pub fn marginals(&self) -> Vec<f64> {
        let n = self.n_samples().max(1) as f64;
        let mut m = vec![0.0; self.n_units];
        for row in self.states.chunks_exact(self.n_units.max(1)) {
            for (mi, &z) in m.iter_mut().zip(row) {
                *mi += z as f64;
            }
        }
        m.iter_mut().for_each(|x| *x /= n);
        m
    }
}

/// Each spike at `t` turns its unit on for the samples in `[t, t + tau_r)`,
/// i.e. `z(t_k) = 1` iff a spike lies in `(t_k - tau_r, t_k]`.
pub fn spikes_to_binary_trace(record: &SpikeRecord, tau_r: f64, sample_rate: f64) -> BinaryTrace {
    assert!(sample_rate > 0.0, "sample rate must be positive");
    // spike times are sums of float steps; absorb their rounding
    const EPS: f64 = 1e-6;
    let n = record.n_neurons;
    let n_samples = (record.duration * sample_rate + EPS).floor() as usize;
    let mut states = vec![0u8; n_samples * n];
    for &(id, t) in &record.spikes {
        let first = ((t * sample_rate - EPS).ceil().max(1.0)) as usize;
        let end = ((t + tau_r) * sample_rate - EPS).ceil() as usize;
        for k in first..end.min(n_samples + 1) {
            states[(k - 1) * n + id as usize] = 1;
        }
    }
    BinaryTrace {
        n_units: n,
        sample_rate,
        states,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(spikes: Vec<(u32, f64)>) -> SpikeRecord {
        let mut r = SpikeRecord::new(2, 0.03, 1e-4);
        r.spikes = spikes;
        r
    }

    fn on_samples(tr: &BinaryTrace, unit: usize) -> Vec<usize> {
        (0..tr.n_samples())
            .filter(|&k| tr.row(k)[unit] == 1)
            .map(|k| k + 1)
            .collect()
    }

    #[test]
    fn spike_becomes_box_of_tau_r() {
        let tr = spikes_to_binary_trace(&record(vec![(0, 0.010)]), 4e-3, 1000.0);
        assert_eq!(tr.n_samples(), 30);
        assert_eq!(on_samples(&tr, 0), vec![10, 11, 12, 13]);
        assert!(on_samples(&tr, 1).is_empty());
    }

    #[test]
    fn no_spikes_all_zero() {
        let tr = spikes_to_binary_trace(&record(vec![]), 4e-3, 1000.0);
        assert!(tr.states.iter().all(|&z| z == 0));
    }

    #[test]
    fn adjacent_boxes_join() {
        let tr = spikes_to_binary_trace(&record(vec![(1, 0.010), (1, 0.014)]), 4e-3, 1000.0);
        assert_eq!(on_samples(&tr, 1), (10..18).collect::<Vec<_>>());
    }

    #[test]
    fn codes_pack_unit_bits() {
        let tr = spikes_to_binary_trace(&record(vec![(0, 0.001), (1, 0.003)]), 4e-3, 1000.0);
        assert_eq!(tr.code(0), 0b01);
        assert_eq!(tr.code(3), 0b11);
        assert_eq!(tr.code(5), 0b10);
        assert_eq!(tr.code(6), 0);
    }
}
