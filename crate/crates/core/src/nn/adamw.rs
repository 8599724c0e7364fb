use super::module::{Module, Param, Slot};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// AdamW with bias correction and decoupled weight decay.
#[derive(Clone, Debug)]
pub struct AdamW<T: Real> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Real> AdamW<T> {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update of every parameter of `model` from its accumulated gradients.
    pub fn step<M: Module<T> + ?Sized>(&mut self, model: &mut M) -> Result<()> {
        let mut shapes = Vec::new();
        let mut bad = None;
        model.visit("", &mut |name, slot| {
            if let Slot::Param(p) = slot {
                if bad.is_none() && !p.grad.all_finite() {
                    bad = Some(name.to_string());
                }
                shapes.push(p.value.shape().to_vec());
            }
        });
        if let Some(name) = bad {
            return Err(Error::NonFinite(format!("gradient of parameter {name}")));
        }
        self.prepare(&shapes)?;
        let coeffs = self.advance();
        let (m, v) = (&mut self.m, &mut self.v);
        let mut i = 0;
        model.visit("", &mut |_, slot| {
            if let Slot::Param(p) = slot {
                update(&coeffs, p, &mut m[i], &mut v[i]);
                i += 1;
            }
        });
        Ok(())
    }

    /// Update for an explicit parameter list; the list order must be stable across steps.
    pub fn step_params(&mut self, params: &mut [&mut Param<T>]) -> Result<()> {
        for (i, p) in params.iter().enumerate() {
            if !p.grad.all_finite() {
                return Err(Error::NonFinite(format!("gradient of parameter #{i}")));
            }
        }
        let shapes: Vec<Vec<usize>> = params.iter().map(|p| p.value.shape().to_vec()).collect();
        self.prepare(&shapes)?;
        let coeffs = self.advance();
        for (i, p) in params.iter_mut().enumerate() {
            update(&coeffs, p, &mut self.m[i], &mut self.v[i]);
        }
        Ok(())
    }

    fn prepare(&mut self, shapes: &[Vec<usize>]) -> Result<()> {
        if self.m.is_empty() {
            self.m = shapes.iter().map(|s| Tensor::zeros(s)).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != shapes.len() {
            return Err(Error::shape("AdamW parameter count", &[self.m.len()], &[shapes.len()]));
        }
        for (m, s) in self.m.iter().zip(shapes) {
            if m.shape() != s.as_slice() {
                return Err(Error::shape("AdamW parameter", m.shape(), s));
            }
        }
        Ok(())
    }

    fn advance(&mut self) -> Coeffs<T> {
        self.step += 1;
        let t = self.step as i32;
        Coeffs {
            b1: T::lit(self.beta1),
            b2: T::lit(self.beta2),
            decay: T::lit(1.0 - self.lr * self.weight_decay),
            step_size: T::lit(self.lr / (1.0 - self.beta1.powi(t))),
            inv_bc2: T::lit(1.0 / (1.0 - self.beta2.powi(t))),
            eps: T::lit(self.eps),
        }
    }
}

struct Coeffs<T> {
    b1: T,
    b2: T,
    decay: T,
    step_size: T,
    inv_bc2: T,
    eps: T,
}

fn update<T: Real>(c: &Coeffs<T>, p: &mut Param<T>, m: &mut Tensor<T>, v: &mut Tensor<T>) {
    let Param { value, grad } = p;
    for (((w, &g), mi), vi) in value
        .data_mut()
        .iter_mut()
        .zip(grad.data())
        .zip(m.data_mut())
        .zip(v.data_mut())
    {
        *mi = c.b1 * *mi + (T::one() - c.b1) * g;
        *vi = c.b2 * *vi + (T::one() - c.b2) * g * g;
        *w *= c.decay;
        *w -= c.step_size * *mi / ((*vi * c.inv_bc2).sqrt() + c.eps);
    }
}
