use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// 1-D max pooling over the last axis of `[B, C, T]` (or `[C, T]`) tensors.
///
/// Padding positions are `-inf` and never win. Backward sends each output
/// gradient to the first maximal input index of its window.
#[derive(Clone, Debug)]
pub struct MaxPool1d {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool1d {
    pub fn new(kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            kernel,
            stride,
            padding,
            cache: None,
        }
    }

    /// Non-overlapping window: kernel 3, stride 3; trailing remainder dropped.
    pub fn k3s3() -> Self {
        Self::new(3, 3, 0)
    }

    /// Length-preserving window: kernel 3, stride 1, one sample of padding per side.
    pub fn k3s1_same() -> Self {
        Self::new(3, 1, 1)
    }

    pub fn output_len(&self, t: usize) -> Result<usize> {
        let padded = t + 2 * self.padding;
        if padded < self.kernel {
            return Err(Error::WindowTooLong {
                op: "maxpool1d",
                window: self.kernel,
                len: t,
            });
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }

    pub fn forward<T: Real>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (rows, t, lead) = match *x.shape() {
            [c, t] => (c, t, vec![c]),
            [b, c, t] => (b * c, t, vec![b, c]),
            _ => {
                return Err(Error::Shape {
                    op: "maxpool1d",
                    expected: vec![0, 0, 0],
                    actual: x.shape().to_vec(),
                })
            }
        };
        let tout = self.output_len(t)?;
        let mut out = Vec::with_capacity(rows * tout);
        let mut argmax = Vec::with_capacity(rows * tout);
        let pad = self.padding as isize;
        for r in 0..rows {
            let row = &x.data()[r * t..(r + 1) * t];
            for o in 0..tout {
                let start = (o * self.stride) as isize - pad;
                let mut best = T::neg_infinity();
                let mut best_i = usize::MAX;
                for j in 0..self.kernel as isize {
                    let idx = start + j;
                    if idx < 0 || idx as usize >= t {
                        continue;
                    }
                    let v = row[idx as usize];
                    if best_i == usize::MAX || v > best {
                        best = v;
                        best_i = idx as usize;
                    }
                }
                out.push(best);
                argmax.push(r * t + best_i);
            }
        }
        let mut shape = lead;
        shape.push(tout);
        self.cache = Some((x.shape().to_vec(), argmax));
        Tensor::new(shape, out)
    }

    pub fn backward<T: Real>(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let (in_shape, argmax) = self.cache.take().ok_or(Error::MissingCache("maxpool1d"))?;
        if grad_out.len() != argmax.len() {
            return Err(Error::shape("maxpool1d backward", &[argmax.len()], &[grad_out.len()]));
        }
        let mut gx = Tensor::zeros(&in_shape);
        let gd = gx.data_mut();
        for (&i, &g) in argmax.iter().zip(grad_out.data()) {
            gd[i] += g;
        }
        Ok(gx)
    }
}
