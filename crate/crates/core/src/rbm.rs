//! Dimensionless Boltzmann machine parameters.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Restricted Boltzmann machine. Visible units come first; when `n_class > 0`
/// the last `n_class` visible units are class-label units.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    /// Couplings, `n_v x n_h`.
    pub w: Array2<f64>,
    pub b_v: Array1<f64>,
    pub b_h: Array1<f64>,
    pub n_class: usize,
}

impl RbmParams {
    pub fn zeros(n_v: usize, n_h: usize) -> Self {
        Self {
            w: Array2::zeros((n_v, n_h)),
            b_v: Array1::zeros(n_v),
            b_h: Array1::zeros(n_h),
            n_class: 0,
        }
    }

    pub fn with_classes(mut self, n_class: usize) -> Self {
        self.n_class = n_class;
        self
    }

    /// Weights `N(w_mean, w_std^2)`, all biases `N(b_mean, b_std^2)`.
    pub fn random<R: Rng + ?Sized>(
        n_v: usize,
        n_h: usize,
        (w_mean, w_std): (f64, f64),
        (b_mean, b_std): (f64, f64),
        rng: &mut R,
    ) -> Result<Self> {
        let wd = Normal::new(w_mean, w_std).map_err(|e| Error::Config(e.to_string()))?;
        let bd = Normal::new(b_mean, b_std).map_err(|e| Error::Config(e.to_string()))?;
        let w = Array2::from_shape_simple_fn((n_v, n_h), || wd.sample(rng));
        let b_v = Array1::from_shape_simple_fn(n_v, || bd.sample(rng));
        let b_h = Array1::from_shape_simple_fn(n_h, || bd.sample(rng));
        Ok(Self {
            w,
            b_v,
            b_h,
            n_class: 0,
        })
    }

    pub fn n_visible(&self) -> usize {
        self.b_v.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.b_h.len()
    }

    pub fn n_data(&self) -> usize {
        self.n_visible() - self.n_class
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.dim() != (self.n_visible(), self.n_hidden()) {
            return Err(Error::Dimension(format!(
                "W is {:?} but biases give {} x {}",
                self.w.dim(),
                self.n_visible(),
                self.n_hidden()
            )));
        }
        if self.n_class > self.n_visible() {
            return Err(Error::Dimension("more class units than visible units".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.b_v).chain(&self.b_h).all(|x| x.is_finite())
    }

    /// Full symmetric form over `n_v + n_h` units, visible first.
    pub fn to_boltzmann(&self) -> BoltzmannParams {
        let (nv, nh) = self.w.dim();
        let n = nv + nh;
        let mut w = Array2::zeros((n, n));
        for i in 0..nv {
            for j in 0..nh {
                w[[i, nv + j]] = self.w[[i, j]];
                w[[nv + j, i]] = self.w[[i, j]];
            }
        }
        let mut b = Array1::zeros(n);
        b.slice_mut(ndarray::s![..nv]).assign(&self.b_v);
        b.slice_mut(ndarray::s![nv..]).assign(&self.b_h);
        BoltzmannParams { w, b }
    }

    pub fn mean_weight(&self) -> f64 {
        self.w.mean().unwrap_or(0.0)
    }
}

/// General Boltzmann machine over binary units, `p(z) ∝ exp(z'Wz/2 + b'z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannParams {
    /// Symmetric, zero diagonal.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl BoltzmannParams {
    pub fn n_units(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_units();
        if self.w.dim() != (n, n) {
            return Err(Error::Dimension(format!(
                "W is {:?} for {n} units",
                self.w.dim()
            )));
        }
        for i in 0..n {
            if self.w[[i, i]] != 0.0 {
                return Err(Error::Config(format!("W[{i},{i}] must be zero")));
            }
            for j in 0..i {
                if self.w[[i, j]] != self.w[[j, i]] {
                    return Err(Error::Config(format!("W is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    /// `E(z) = -z'Wz/2 - b'z` for the state whose bit `i` is unit `i`.
    pub fn energy(&self, code: u64) -> f64 {
        let n = self.n_units();
        let on = |i: usize| code >> i & 1 == 1;
        let mut e = 0.0;
        for i in (0..n).filter(|&i| on(i)) {
            e -= self.b[i];
            for j in (0..i).filter(|&j| on(j)) {
                e -= self.w[[i, j]];
            }
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn boltzmann_form_is_symmetric() {
        let mut rng = stream(1, Stream::Aux(0));
        let rbm = RbmParams::random(3, 2, (-0.75, 1.5), (-1.5, 0.5), &mut rng).unwrap();
        let bm = rbm.to_boltzmann();
        bm.validate().unwrap();
        assert_eq!(bm.w[[0, 3]], rbm.w[[0, 0]]);
        assert_eq!(bm.w[[4, 2]], rbm.w[[2, 1]]);
        assert_eq!(bm.w[[0, 1]], 0.0);
        assert_eq!(bm.b[4], rbm.b_h[1]);
    }

    #[test]
    fn energy_of_pair() {
        let mut rbm = RbmParams::zeros(1, 1);
        rbm.w[[0, 0]] = 2.0;
        rbm.b_v[0] = 0.5;
        let bm = rbm.to_boltzmann();
        assert_eq!(bm.energy(0b00), 0.0);
        assert_eq!(bm.energy(0b01), -0.5);
        assert_eq!(bm.energy(0b11), -2.5);
    }

    #[test]
    fn bad_shapes_rejected() {
        let mut rbm = RbmParams::zeros(3, 2);
        rbm.b_h = Array1::zeros(4);
        assert!(rbm.validate().is_err());
    }
}
