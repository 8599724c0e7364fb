use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::module::Mode;
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)`.
#[derive(Clone, Debug)]
pub struct Dropout<T: Real> {
    rate: f64,
    salt: u64,
    mask: Option<Vec<T>>,
}

impl<T: Real> Dropout<T> {
    /// `salt` distinguishes the masks of several dropout layers driven by one mode seed.
    pub fn new(rate: f64, salt: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        Ok(Self { rate, salt, mask: None })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Tensor<T> {
        match mode.sub_seed(self.salt) {
            Some(seed) if self.rate > 0.0 => {
                let mask = dropout_mask(x.len(), self.rate, seed);
                let mut y = x.clone();
                for (v, &m) in y.data_mut().iter_mut().zip(&mask) {
                    *v *= m;
                }
                self.mask = Some(mask);
                y
            }
            _ => {
                self.mask = None;
                x.clone()
            }
        }
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Tensor<T> {
        match self.mask.take() {
            Some(mask) => {
                let mut g = grad_out.clone();
                for (v, &m) in g.data_mut().iter_mut().zip(&mask) {
                    *v *= m;
                }
                g
            }
            None => grad_out.clone(),
        }
    }
}

/// Keep-mask with entries `0` or `1 / (1 - rate)`, deterministic in `seed`.
pub fn dropout_mask<T: Real>(n: usize, rate: f64, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = T::lit(1.0 / (1.0 - rate));
    (0..n)
        .map(|_| if rng.random::<f64>() < rate { T::zero() } else { scale })
        .collect()
}

/// Functional dropout.
pub fn dropout<T: Real>(x: &Tensor<T>, rate: f64, mode: Mode) -> Result<Tensor<T>> {
    Ok(Dropout::new(rate, 0)?.forward(x, mode))
}
