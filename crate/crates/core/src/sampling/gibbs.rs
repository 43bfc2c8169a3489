use rand::Rng;

use crate::rbm::RbmParams;
use crate::rng::{stream, Stream};

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Block Gibbs chain on an RBM. Each iteration resamples the hidden layer
/// given the visible one, then the visible layer given the hidden one, and
/// records the joint state (visible units in the low bits, then hidden).
///
/// Only models with at most 64 units can be packed into codes.
pub fn gibbs_sample_rbm(rbm: &RbmParams, iterations: usize, seed: u64) -> Vec<u64> {
    let (nv, nh) = rbm.w.dim();
    assert!(nv + nh <= 64, "joint state does not fit in 64 bits");
    let mut rng = stream(seed, Stream::Aux(1));
    let mut v: Vec<bool> = (0..nv).map(|_| rng.gen()).collect();
    let mut h = vec![false; nh];
    let mut out = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        for j in 0..nh {
            let x = rbm.b_h[j] + (0..nv).filter(|&i| v[i]).map(|i| rbm.w[[i, j]]).sum::<f64>();
            h[j] = rng.gen::<f64>() < logistic(x);
        }
        for i in 0..nv {
            let x = rbm.b_v[i] + (0..nh).filter(|&j| h[j]).map(|j| rbm.w[[i, j]]).sum::<f64>();
            v[i] = rng.gen::<f64>() < logistic(x);
        }
        let code = v
            .iter()
            .chain(&h)
            .enumerate()
            .fold(0u64, |c, (k, &z)| c | (z as u64) << k);
        out.push(code);
    }
    out
}
