use std::io::Write;

use crate::error::{Error, Result};
use crate::rbm::BoltzmannParams;

/// Largest number of units whose joint state space is enumerated.
pub const MAX_ENUM_UNITS: usize = 20;

fn check_units(n: usize) -> Result<()> {
    if n > MAX_ENUM_UNITS {
        return Err(Error::TooManyUnits {
            units: n,
            limit: MAX_ENUM_UNITS,
        });
    }
    Ok(())
}

/// Exact `p(z)` over all `2^N` states, indexed by state code (unit `i` in bit `i`).
pub fn exact_boltzmann(params: &BoltzmannParams) -> Result<Vec<f64>> {
    params.validate()?;
    let n = params.n_units();
    check_units(n)?;
    let neg_e: Vec<f64> = (0..1u64 << n).map(|c| -params.energy(c)).collect();
    let max = neg_e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = neg_e.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    Ok(p)
}

/// `D(p||q) = sum p log(p/q)`, with `0 log 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Support(format!(
            "{} states vs {} states",
            p.len(),
            q.len()
        )));
    }
    let mut d = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if !(qi > 0.0) {
                return Err(Error::Support(format!("q is zero at state {i} where p is not")));
            }
            d += pi * (pi / qi).ln();
        }
    }
    Ok(d.max(0.0))
}

/// Visit counts over all joint states; probabilities are smoothed on read.
#[derive(Debug, Clone, PartialEq)]
pub struct StateHistogram {
    pub n_units: usize,
    pub counts: Vec<u64>,
    pub smoothing: f64,
}

impl StateHistogram {
    pub fn new(n_units: usize, smoothing: f64) -> Result<Self> {
        check_units(n_units)?;
        Ok(Self {
            n_units,
            counts: vec![0; 1 << n_units],
            smoothing,
        })
    }

    pub fn add(&mut self, code: u64) {
        self.counts[code as usize] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(count + smoothing) / (total + smoothing 2^N)`.
    pub fn probabilities(&self) -> Vec<f64> {
        let denom = self.total() as f64 + self.smoothing * self.counts.len() as f64;
        self.counts
            .iter()
            .map(|&c| (c as f64 + self.smoothing) / denom)
            .collect()
    }
}

pub fn histogram_states(codes: &[u64], n_units: usize, smoothing: f64) -> Result<StateHistogram> {
    let mut h = StateHistogram::new(n_units, smoothing)?;
    codes.iter().for_each(|&c| h.add(c));
    Ok(h)
}

/// KL of the smoothed histogram of `codes[..k]` against `exact`, for each
/// checkpoint time (s). Sample `k` is taken at `(k + 1) * interval`.
pub fn kl_vs_time(
    codes: &[u64],
    interval: f64,
    exact: &[f64],
    checkpoints: &[f64],
    smoothing: f64,
) -> Result<Vec<(f64, f64)>> {
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("checkpoints must be increasing".into()));
    }
    let n_units = exact.len().trailing_zeros() as usize;
    if 1usize << n_units != exact.len() {
        return Err(Error::Support("exact table length is not a power of two".into()));
    }
    let mut h = StateHistogram::new(n_units, smoothing)?;
    let mut used = 0;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        let upto = ((t / interval + 1e-9).floor() as usize).min(codes.len());
        for &c in &codes[used..upto] {
            h.add(c);
        }
        used = upto.max(used);
        out.push((t, kl_divergence(&h.probabilities(), exact)?));
    }
    Ok(out)
}

/// `time_s,kl` rows.
pub fn write_kl_csv<W: Write>(mut w: W, header: &str, series: &[(f64, f64)]) -> Result<()> {
    if !header.is_empty() {
        writeln!(w, "# {header}")?;
    }
    writeln!(w, "time_s,kl")?;
    for (t, d) in series {
        writeln!(w, "{t},{d:.8e}")?;
    }
    Ok(())
}

/// `state_bits,p` rows; the bit string lists unit 0 first.
pub fn write_probability_csv<W: Write>(mut w: W, header: &str, p: &[f64]) -> Result<()> {
    let n = p.len().trailing_zeros() as usize;
    if !header.is_empty() {
        writeln!(w, "# {header}")?;
    }
    writeln!(w, "state_bits,p")?;
    for (code, pi) in p.iter().enumerate() {
        let bits: String = (0..n).map(|i| if code >> i & 1 == 1 { '1' } else { '0' }).collect();
        writeln!(w, "{bits},{pi:.10e}")?;
    }
    Ok(())
}
