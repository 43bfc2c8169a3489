//! Standard minibatch CD-k with exact conditionals (no spiking).

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rbm::RbmParams;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdConfig {
    pub k: usize,
    /// Step size applied to the minibatch sum of per-sample gradients.
    pub learning_rate: f64,
    pub batch: usize,
    pub epochs: usize,
}

impl Default for CdConfig {
    fn default() -> Self {
        Self {
            k: 1,
            learning_rate: 0.1e-2,
            batch: 100,
            epochs: 25,
        }
    }
}

fn sigmoid_inplace(a: &mut Array2<f64>) {
    a.mapv_inplace(|x| 1.0 / (1.0 + (-x).exp()));
}

fn bernoulli<R: Rng>(p: &Array2<f64>, rng: &mut R) -> Array2<f64> {
    p.mapv(|p| if rng.gen::<f64>() < p { 1.0 } else { 0.0 })
}

/// Train on rows of `data` (visible probabilities in `[0, 1]`; each
/// presentation draws a binary sample from them). `on_epoch(e, params)` runs
/// after every epoch.
pub fn train_cd_reference(
    init: &RbmParams,
    data: ArrayView2<f64>,
    cfg: &CdConfig,
    seed: u64,
    mut on_epoch: impl FnMut(usize, &RbmParams),
) -> Result<RbmParams> {
    init.validate()?;
    if data.ncols() != init.n_visible() {
        return Err(Error::Dimension(format!(
            "data has {} columns for {} visible units",
            data.ncols(),
            init.n_visible()
        )));
    }
    if cfg.batch == 0 || cfg.k == 0 {
        return Err(Error::Config("batch and k must be positive".into()));
    }
    let mut p = init.clone();
    let mut rng = stream(seed, Stream::Aux(4));
    let mut idx: Vec<usize> = (0..data.nrows()).collect();
    for e in 0..cfg.epochs {
        idx.shuffle(&mut rng);
        for chunk in idx.chunks(cfg.batch) {
            let v0p = data.select(Axis(0), chunk);
            let v0 = bernoulli(&v0p, &mut rng);
            let mut ph0 = v0.dot(&p.w) + &p.b_h;
            sigmoid_inplace(&mut ph0);
            let mut h = bernoulli(&ph0, &mut rng);
            let mut vk = v0.clone();
            let mut phk = ph0.clone();
            for step in 0..cfg.k {
                let mut pv = h.dot(&p.w.t()) + &p.b_v;
                sigmoid_inplace(&mut pv);
                vk = bernoulli(&pv, &mut rng);
                phk = vk.dot(&p.w) + &p.b_h;
                sigmoid_inplace(&mut phk);
                if step + 1 < cfg.k {
                    h = bernoulli(&phk, &mut rng);
                }
            }
            let eps = cfg.learning_rate;
            let pos = v0.t().dot(&ph0);
            let neg = vk.t().dot(&phk);
            Zip::from(&mut p.w).and(&pos).and(&neg).for_each(|w, &a, &b| *w += eps * (a - b));
            p.b_v += &((v0.sum_axis(Axis(0)) - vk.sum_axis(Axis(0))) * eps);
            p.b_h += &((ph0.sum_axis(Axis(0)) - phk.sum_axis(Axis(0))) * eps);
        }
        if !p.is_finite() {
            return Err(Error::Diverged {
                presentations: (e + 1) * data.nrows(),
                detail: "CD parameters became non-finite".into(),
            });
        }
        on_epoch(e + 1, &p);
    }
    Ok(p)
}

/// Exact mean log-likelihood of binary `rows` under a small RBM.
pub fn exact_log_likelihood(rbm: &RbmParams, rows: ArrayView2<f64>) -> Result<f64> {
    let nv = rbm.n_visible();
    if nv > crate::sampling::MAX_ENUM_UNITS {
        return Err(Error::TooManyUnits {
            units: nv,
            limit: crate::sampling::MAX_ENUM_UNITS,
        });
    }
    let neg_f = |v: &Array1<f64>| -> f64 {
        -crate::evaluation::free_energy(rbm, v.view())
    };
    let all: Vec<f64> = (0..1u64 << nv)
        .map(|c| neg_f(&Array1::from_shape_fn(nv, |i| (c >> i & 1) as f64)))
        .collect();
    let max = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + all.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    let n = rows.nrows() as f64;
    Ok(rows
        .outer_iter()
        .map(|r| neg_f(&r.to_owned()) - log_z)
        .sum::<f64>()
        / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn patterns() -> Array2<f64> {
        let a = array![[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]];
        let mut rows = Array2::zeros((200, 4));
        for (k, mut r) in rows.outer_iter_mut().enumerate() {
            r.assign(&a.row(k % 2));
        }
        rows
    }

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = stream(1, Stream::Aux(0));
        let rbm = RbmParams::random(4, 2, (0.0, 0.01), (0.0, 0.0), &mut rng).unwrap();
        let cfg = CdConfig {
            learning_rate: 0.0,
            batch: 10,
            epochs: 2,
            ..CdConfig::default()
        };
        let out = train_cd_reference(&rbm, patterns().view(), &cfg, 1, |_, _| {}).unwrap();
        assert_eq!(out, rbm);
    }

    #[test]
    fn likelihood_improves_on_two_patterns() {
        let mut rng = stream(2, Stream::Aux(0));
        let rbm = RbmParams::random(4, 2, (0.0, 0.01), (0.0, 0.0), &mut rng).unwrap();
        let data = patterns();
        let before = exact_log_likelihood(&rbm, data.view()).unwrap();
        let cfg = CdConfig {
            learning_rate: 0.05,
            batch: 10,
            epochs: 100, // 2000 updates
            ..CdConfig::default()
        };
        let out = train_cd_reference(&rbm, data.view(), &cfg, 3, |_, _| {}).unwrap();
        let after = exact_log_likelihood(&out, data.view()).unwrap();
        assert!(after > before + 0.5, "{before} -> {after}");
    }

    #[test]
    fn trained_model_samples_closer_to_data() {
        use crate::sampling::{gibbs_sample_rbm, histogram_states, kl_divergence};
        let mut rng = stream(4, Stream::Aux(0));
        let rbm = RbmParams::random(4, 2, (0.0, 0.01), (0.0, 0.0), &mut rng).unwrap();
        let data = patterns();
        let cfg = CdConfig {
            learning_rate: 0.05,
            batch: 10,
            epochs: 100,
            ..CdConfig::default()
        };
        let out = train_cd_reference(&rbm, data.view(), &cfg, 5, |_, _| {}).unwrap();
        let mut target = vec![1e-9; 16];
        target[0b0011] = 0.5;
        target[0b1100] = 0.5;
        let kl = |m: &RbmParams| {
            let codes: Vec<u64> = gibbs_sample_rbm(m, 50_000, 6).iter().map(|c| c & 0xF).collect();
            let h = histogram_states(&codes, 4, 1.0).unwrap();
            kl_divergence(&target, &h.probabilities()).unwrap()
        };
        assert!(kl(&out) < kl(&rbm));
    }
}
