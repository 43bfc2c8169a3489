use crate::error::{Error, Result};
use crate::rbm::RbmParams;

/// Uniform grid of `2^bits` levels on `[lo, hi]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub levels: u64,
}

impl Grid {
    /// `mean ± 4.5 std` of `values`.
    pub fn from_values(values: &[f64], bits: u32) -> Result<Self> {
        if bits < 2 || bits > 52 {
            return Err(Error::Config(format!("bit depth {bits} outside 2..=52")));
        }
        let n = values.len().max(1) as f64;
        let mu = values.iter().sum::<f64>() / n;
        let sd = (values.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n).sqrt();
        Ok(Self {
            lo: mu - 4.5 * sd,
            hi: mu + 4.5 * sd,
            levels: 1 << bits,
        })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.levels - 1) as f64
    }

    /// Nearest level, halves rounded up, clipped to the end levels. A
    /// zero-width grid maps everything to its centre.
    pub fn snap(&self, x: f64) -> f64 {
        let step = self.step();
        if !(step > 0.0) {
            return 0.5 * (self.lo + self.hi);
        }
        let k = ((x - self.lo) / step + 0.5).floor().clamp(0.0, (self.levels - 1) as f64);
        self.lo + k * step
    }
}

/// Separate grids for the weights and for all biases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationSpec {
    pub bits: u32,
    pub weights: Grid,
    pub biases: Grid,
}

impl QuantizationSpec {
    pub fn from_params(rbm: &RbmParams, bits: u32) -> Result<Self> {
        let w: Vec<f64> = rbm.w.iter().copied().collect();
        let b: Vec<f64> = rbm.b_v.iter().chain(&rbm.b_h).copied().collect();
        Ok(Self {
            bits,
            weights: Grid::from_values(&w, bits)?,
            biases: Grid::from_values(&b, bits)?,
        })
    }
}

pub fn quantize_params(rbm: &RbmParams, spec: &QuantizationSpec) -> RbmParams {
    RbmParams {
        w: rbm.w.mapv(|x| spec.weights.snap(x)),
        b_v: rbm.b_v.mapv(|x| spec.biases.snap(x)),
        b_h: rbm.b_h.mapv(|x| spec.biases.snap(x)),
        n_class: rbm.n_class,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_test_rbm;
    use proptest::prelude::*;

    #[test]
    fn mean_maps_to_nearest_level() {
        let g = Grid::from_values(&[-1.0, 1.0], 2).unwrap();
        // levels at -4.5, -1.5, 1.5, 4.5; the mean 0 is a tie, rounded up
        assert_eq!(g.snap(0.0), 1.5);
        assert_eq!(g.snap(100.0), 4.5);
        assert_eq!(g.snap(-100.0), -4.5);
    }

    #[test]
    fn fine_grids_are_nearly_exact() {
        let rbm = random_test_rbm(20, 10, 3);
        let spec = QuantizationSpec::from_params(&rbm, 16).unwrap();
        let q = quantize_params(&rbm, &spec);
        let bound = (spec.weights.hi - spec.weights.lo) / 2f64.powi(15);
        assert!((&q.w - &rbm.w).iter().all(|d| d.abs() < bound));
    }

    #[test]
    fn constant_values_collapse_to_mean() {
        let g = Grid::from_values(&[0.3, 0.3, 0.3], 8).unwrap();
        assert_eq!(g.snap(0.3), 0.3);
        assert_eq!(g.snap(7.0), 0.3);
        assert!(Grid::from_values(&[0.0], 1).is_err());
    }

    proptest! {
        #[test]
        fn quantization_is_idempotent(seed in 0u64..200, bits in 2u32..10) {
            let rbm = random_test_rbm(6, 4, seed);
            let spec = QuantizationSpec::from_params(&rbm, bits).unwrap();
            let once = quantize_params(&rbm, &spec);
            let twice = quantize_params(&once, &spec);
            prop_assert_eq!(once, twice);
        }
    }
}
