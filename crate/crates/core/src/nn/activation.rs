use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// ELU with alpha = 1.
    Elu,
    /// Softmax over the last axis.
    Softmax,
}

pub fn activate<T: Real>(kind: Activation, x: &Tensor<T>) -> Tensor<T> {
    match kind {
        Activation::Relu => x.map(|v| v.max(T::zero())),
        Activation::Elu => x.map(elu),
        Activation::Softmax => softmax(x),
    }
}

#[inline]
pub fn elu<T: Real>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        v.exp() - T::one()
    }
}

#[inline]
pub fn elu_grad<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else {
        v.exp()
    }
}

/// Row-wise softmax over the last axis, max-subtracted.
pub fn softmax<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let k = *x.shape().last().expect("non-empty shape");
    let mut out = x.clone();
    for row in out.data_mut().chunks_mut(k) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut s = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    out
}

/// Elementwise activation layer that caches what its backward pass needs.
#[derive(Clone, Debug)]
pub struct ActivationLayer<T: Real> {
    kind: Activation,
    cache: Option<Tensor<T>>,
}

impl<T: Real> ActivationLayer<T> {
    pub fn new(kind: Activation) -> Result<Self> {
        if kind == Activation::Softmax {
            return Err(Error::InvalidArgument(
                "softmax is fused into the cross-entropy loss, not used as a layer".into(),
            ));
        }
        Ok(Self { kind, cache: None })
    }

    pub fn relu() -> Self {
        Self {
            kind: Activation::Relu,
            cache: None,
        }
    }

    pub fn elu() -> Self {
        Self {
            kind: Activation::Elu,
            cache: None,
        }
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Tensor<T> {
        self.cache = Some(x.clone());
        activate(self.kind, x)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.cache.take().ok_or(Error::MissingCache("activation"))?;
        if x.shape() != grad_out.shape() {
            return Err(Error::shape("activation backward", x.shape(), grad_out.shape()));
        }
        let mut g = grad_out.clone();
        for (gv, &xv) in g.data_mut().iter_mut().zip(x.data()) {
            *gv *= match self.kind {
                Activation::Relu => {
                    if xv > T::zero() {
                        T::one()
                    } else {
                        T::zero()
                    }
                }
                _ => elu_grad(xv),
            };
        }
        Ok(g)
    }
}
