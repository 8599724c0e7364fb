use rand::Rng;

use super::module::{join, Module, Param, Slot};
use super::tensor::{axpy, dot, Real, Tensor};
use crate::error::{Error, Result};

/// Fully connected layer `y = x W^T + b` on `[B, F]` inputs; weight is `[H, F]`.
#[derive(Clone, Debug)]
pub struct Dense<T: Real> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    cache: Option<Tensor<T>>,
}

impl<T: Real> Dense<T> {
    pub fn new<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        Self::from_tensors(
            Tensor::uniform(&[fan_out, fan_in], bound, rng),
            Tensor::uniform(&[fan_out], bound, rng),
        )
        .expect("consistent shapes")
    }

    pub fn from_tensors(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let (h, _) = weight.dims2("Dense weight")?;
        if bias.shape() != [h] {
            return Err(Error::shape("Dense bias", &[h], bias.shape()));
        }
        Ok(Self {
            weight: Param::new(weight),
            bias: Param::new(bias),
            cache: None,
        })
    }

    pub fn fan_in(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn fan_out(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (b, f) = x.dims2("dense")?;
        let (h, fw) = (self.fan_out(), self.fan_in());
        if f != fw {
            return Err(Error::shape("dense input features", &[fw], &[f]));
        }
        let w = self.weight.value.data();
        let mut y = vec![T::zero(); b * h];
        for bi in 0..b {
            let row = &x.data()[bi * f..(bi + 1) * f];
            for o in 0..h {
                y[bi * h + o] = self.bias.value.data()[o] + dot(&w[o * f..(o + 1) * f], row);
            }
        }
        self.cache = Some(x.clone());
        Tensor::new(vec![b, h], y)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.cache.take().ok_or(Error::MissingCache("dense"))?;
        let (b, f) = x.dims2("dense backward")?;
        let h = self.fan_out();
        if grad_out.shape() != [b, h] {
            return Err(Error::shape("dense backward", &[b, h], grad_out.shape()));
        }
        let w = self.weight.value.data();
        let mut gx = vec![T::zero(); b * f];
        for bi in 0..b {
            let row = &x.data()[bi * f..(bi + 1) * f];
            for o in 0..h {
                let g = grad_out.data()[bi * h + o];
                self.bias.grad.data_mut()[o] += g;
                axpy(g, row, &mut self.weight.grad.data_mut()[o * f..(o + 1) * f]);
                axpy(g, &w[o * f..(o + 1) * f], &mut gx[bi * f..(bi + 1) * f]);
            }
        }
        Tensor::new(vec![b, f], gx)
    }
}

impl<T: Real> Module<T> for Dense<T> {
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_, T>)) {
        f(&join(prefix, "weight"), Slot::Param(&mut self.weight));
        f(&join(prefix, "bias"), Slot::Param(&mut self.bias));
    }
}
