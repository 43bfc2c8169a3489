use ndarray::{Array1, ArrayView1};

use crate::mnist::LabelCode;
use crate::rbm::RbmParams;

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `F(v) = -b_v.v - sum_j softplus(b_h[j] + sum_i W[i,j] v[i])`.
pub fn free_energy(rbm: &RbmParams, v: ArrayView1<f64>) -> f64 {
    let act = v.dot(&rbm.w) + &rbm.b_h;
    -rbm.b_v.dot(&v) - act.iter().map(|&x| softplus(x)).sum::<f64>()
}

/// Label whose group, switched on alone next to the 0/1 `pixels`, gives the
/// lowest free energy. Ties go to the lowest label.
pub fn classify_by_free_energy(rbm: &RbmParams, pixels: &[f64], code: &LabelCode) -> usize {
    let n_data = rbm.n_data();
    assert_eq!(pixels.len(), n_data, "pixel count does not match the model");
    assert_eq!(code.n_units(), rbm.n_class, "label code does not match the model");
    let v = ArrayView1::from(pixels);
    let w_data = rbm.w.slice(ndarray::s![..n_data, ..]);
    let base: Array1<f64> = v.dot(&w_data) + &rbm.b_h;
    let pixel_term = rbm.b_v.slice(ndarray::s![..n_data]).dot(&v);
    let mut best = (f64::INFINITY, 0);
    for label in 0..code.n_labels {
        let mut act = base.clone();
        let mut bias = pixel_term;
        for u in code.group(label) {
            act += &rbm.w.row(n_data + u);
            bias += rbm.b_v[n_data + u];
        }
        let f = -bias - act.iter().map(|&x| softplus(x)).sum::<f64>();
        if f < best.0 {
            best = (f, label);
        }
    }
    best.1
}

/// Fraction of `(pixels, label)` items classified correctly by free energy;
/// pixels are thresholded at 0.5 to 0/1 first.
pub fn free_energy_accuracy<'a>(
    rbm: &RbmParams,
    items: impl IntoIterator<Item = (&'a [f64], usize)>,
    code: &LabelCode,
) -> f64 {
    let (mut hit, mut n) = (0usize, 0usize);
    for (px, label) in items {
        let bin: Vec<f64> = px.iter().map(|&p| if p > 0.5 { 1.0 } else { 0.0 }).collect();
        hit += (classify_by_free_energy(rbm, &bin, code) == label) as usize;
        n += 1;
    }
    hit as f64 / n.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{exact_boltzmann, random_test_rbm};

    #[test]
    fn zero_model_free_energy() {
        let rbm = RbmParams::zeros(4, 3);
        let v = Array1::from(vec![1.0, 0.0, 1.0, 1.0]);
        assert!((free_energy(&rbm, v.view()) - -3.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn marginal_matches_enumeration() {
        let rbm = random_test_rbm(5, 5, 9);
        let joint = exact_boltzmann(&rbm.to_boltzmann()).unwrap();
        let mut marg = vec![0.0; 32];
        for (code, p) in joint.iter().enumerate() {
            marg[code & 31] += p;
        }
        let ef: Vec<f64> = (0..32)
            .map(|c| {
                let v = Array1::from_shape_fn(5, |i| (c >> i & 1) as f64);
                (-free_energy(&rbm, v.view())).exp()
            })
            .collect();
        let z: f64 = ef.iter().sum();
        for (a, b) in ef.iter().zip(&marg) {
            assert!((a / z - b).abs() < 1e-10);
        }
    }

    #[test]
    fn picks_label_with_strongest_support() {
        let mut rbm = RbmParams::zeros(2 + 4, 1).with_classes(4);
        let code = LabelCode {
            n_labels: 2,
            per_label: 2,
        };
        // hidden unit fires for pixel 0 together with label 1
        rbm.w[[0, 0]] = 3.0;
        rbm.w[[4, 0]] = 2.0;
        rbm.w[[5, 0]] = 2.0;
        rbm.b_h[0] = -4.0;
        assert_eq!(classify_by_free_energy(&rbm, &[1.0, 0.0], &code), 1);
        rbm.b_v[2] = 5.0;
        assert_eq!(classify_by_free_energy(&rbm, &[1.0, 0.0], &code), 0);
    }
}
