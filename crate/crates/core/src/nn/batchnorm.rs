use super::module::{join, Mode, Module, Param, Slot};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

/// Per-channel batch normalisation over `(batch, time)` for `[B, C, T]` inputs,
/// or over the batch for `[B, C]` inputs.
#[derive(Clone, Debug)]
pub struct BatchNorm1d<T: Real> {
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub momentum: f64,
    pub eps: f64,
    cache: Option<BnCache<T>>,
}

#[derive(Clone, Debug)]
struct BnCache<T> {
    shape: Vec<usize>,
    xhat: Vec<T>,
    inv_std: Vec<T>,
    train: bool,
}

fn layout(shape: &[usize]) -> Result<(usize, usize, usize)> {
    match *shape {
        [b, c] => Ok((b, c, 1)),
        [b, c, t] => Ok((b, c, t)),
        _ => Err(Error::Shape {
            op: "batchnorm1d",
            expected: vec![0, 0, 0],
            actual: shape.to_vec(),
        }),
    }
}

impl<T: Real> BatchNorm1d<T> {
    pub fn new(channels: usize) -> Self {
        Self::with_options(channels, BN_MOMENTUM, BN_EPS).expect("default options are valid")
    }

    pub fn with_options(channels: usize, momentum: f64, eps: f64) -> Result<Self> {
        if eps <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "batchnorm epsilon must be > 0, got {eps}"
            )));
        }
        Ok(Self {
            gamma: Param::new(Tensor::full(&[channels], T::one())),
            beta: Param::new(Tensor::zeros(&[channels])),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], T::one()),
            momentum,
            eps,
            cache: None,
        })
    }

    pub fn channels(&self) -> usize {
        self.gamma.value.len()
    }

    pub fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let (b, c, t) = layout(x.shape())?;
        if c != self.channels() {
            return Err(Error::shape("batchnorm1d channels", &[self.channels()], &[c]));
        }
        let n = b * t;
        let eps = T::lit(self.eps);
        let mut mean = vec![T::zero(); c];
        let mut var = vec![T::zero(); c];
        let train = mode.is_train();
        if train {
            if n < 2 {
                return Err(Error::InvalidArgument(
                    "batchnorm1d in train mode needs at least 2 values per channel".into(),
                ));
            }
            let nf = T::lit(n as f64);
            for ci in 0..c {
                let mut s = T::zero();
                for bi in 0..b {
                    s += x.data()[(bi * c + ci) * t..(bi * c + ci + 1) * t]
                        .iter()
                        .copied()
                        .sum::<T>();
                }
                let m = s / nf;
                let mut v = T::zero();
                for bi in 0..b {
                    for &xv in &x.data()[(bi * c + ci) * t..(bi * c + ci + 1) * t] {
                        v += (xv - m) * (xv - m);
                    }
                }
                mean[ci] = m;
                var[ci] = v / nf;
            }
            let mom = T::lit(self.momentum);
            let unbias = T::lit(n as f64 / (n as f64 - 1.0));
            for ci in 0..c {
                let rm = &mut self.running_mean.data_mut()[ci];
                *rm = (T::one() - mom) * *rm + mom * mean[ci];
                let rv = &mut self.running_var.data_mut()[ci];
                *rv = (T::one() - mom) * *rv + mom * var[ci] * unbias;
            }
        } else {
            mean.copy_from_slice(self.running_mean.data());
            var.copy_from_slice(self.running_var.data());
        }
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let mut xhat = vec![T::zero(); x.len()];
        let mut y = vec![T::zero(); x.len()];
        let (g, be) = (self.gamma.value.data(), self.beta.value.data());
        for bi in 0..b {
            for ci in 0..c {
                let off = (bi * c + ci) * t;
                for k in off..off + t {
                    let h = (x.data()[k] - mean[ci]) * inv_std[ci];
                    xhat[k] = h;
                    y[k] = g[ci] * h + be[ci];
                }
            }
        }
        self.cache = Some(BnCache {
            shape: x.shape().to_vec(),
            xhat,
            inv_std,
            train,
        });
        Tensor::new(x.shape().to_vec(), y)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self.cache.take().ok_or(Error::MissingCache("batchnorm1d"))?;
        if grad_out.shape() != cache.shape.as_slice() {
            return Err(Error::shape("batchnorm1d backward", &cache.shape, grad_out.shape()));
        }
        let (b, c, t) = layout(&cache.shape)?;
        let n = T::lit((b * t) as f64);
        let gd = grad_out.data();
        let mut gx = vec![T::zero(); gd.len()];
        for ci in 0..c {
            let gamma = self.gamma.value.data()[ci];
            let mut sum_g = T::zero();
            let mut sum_gx = T::zero();
            for bi in 0..b {
                let off = (bi * c + ci) * t;
                for k in off..off + t {
                    sum_g += gd[k];
                    sum_gx += gd[k] * cache.xhat[k];
                }
            }
            self.gamma.grad.data_mut()[ci] += sum_gx;
            self.beta.grad.data_mut()[ci] += sum_g;
            let is = cache.inv_std[ci];
            for bi in 0..b {
                let off = (bi * c + ci) * t;
                for k in off..off + t {
                    gx[k] = if cache.train {
                        gamma * is * (gd[k] - sum_g / n - cache.xhat[k] * sum_gx / n)
                    } else {
                        gamma * is * gd[k]
                    };
                }
            }
        }
        Tensor::new(cache.shape, gx)
    }
}

impl<T: Real> Module<T> for BatchNorm1d<T> {
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_, T>)) {
        f(&join(prefix, "gamma"), Slot::Param(&mut self.gamma));
        f(&join(prefix, "beta"), Slot::Param(&mut self.beta));
        f(&join(prefix, "running_mean"), Slot::Buffer(&mut self.running_mean));
        f(&join(prefix, "running_var"), Slot::Buffer(&mut self.running_var));
    }
}
