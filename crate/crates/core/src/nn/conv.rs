use rand::Rng;

use super::module::{join, Module, Param, Slot};
use super::tensor::{axpy, dot, Real, Tensor};
use crate::error::{Error, Result};

/// Stride-1 1-D convolution with symmetric zero "same" padding.
///
/// Weight layout is `[out, in, kernel]`; inputs are `[batch, in, time]`.
#[derive(Clone, Debug)]
pub struct Conv1d<T: Real> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    cache: Option<Tensor<T>>,
}

impl<T: Real> Conv1d<T> {
    /// Uniform fan-in initialisation, bound `1/sqrt(in * kernel)`.
    pub fn new<R: Rng + ?Sized>(cin: usize, cout: usize, kernel: usize, rng: &mut R) -> Result<Self> {
        let bound = 1.0 / ((cin * kernel) as f64).sqrt();
        Self::from_tensors(
            Tensor::uniform(&[cout, cin, kernel], bound, rng),
            Tensor::uniform(&[cout], bound, rng),
        )
    }

    pub fn from_tensors(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let (cout, _, k) = weight.dims3("Conv1d")?;
        if k % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "conv1d kernel size must be odd for same padding, got {k}"
            )));
        }
        if bias.shape() != [cout] {
            return Err(Error::shape("Conv1d bias", &[cout], bias.shape()));
        }
        Ok(Self {
            weight: Param::new(weight),
            bias: Param::new(bias),
            cache: None,
        })
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weight.value.shape()[2]
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = conv1d(x, &self.weight.value, &self.bias.value)?;
        self.cache = Some(x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.cache.take().ok_or(Error::MissingCache("conv1d"))?;
        let (gx, gw, gb) = conv1d_backward(grad_out, &x, &self.weight.value)?;
        self.weight.grad.add_assign(&gw)?;
        self.bias.grad.add_assign(&gb)?;
        Ok(gx)
    }
}

impl<T: Real> Module<T> for Conv1d<T> {
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_, T>)) {
        f(&join(prefix, "weight"), Slot::Param(&mut self.weight));
        f(&join(prefix, "bias"), Slot::Param(&mut self.bias));
    }
}

fn as_batched<T: Real>(x: &Tensor<T>, op: &'static str) -> Result<(usize, usize, usize, bool)> {
    match *x.shape() {
        [c, t] => Ok((1, c, t, true)),
        [b, c, t] => Ok((b, c, t, false)),
        _ => Err(Error::Shape {
            op,
            expected: vec![0, 0, 0],
            actual: x.shape().to_vec(),
        }),
    }
}

/// Valid output range `[lo, hi)` for tap offset `shift` on a signal of length `t`.
#[inline]
fn tap_range(shift: isize, t: usize) -> (usize, usize) {
    let lo = (-shift).max(0) as usize;
    let hi = (t as isize - shift).clamp(0, t as isize) as usize;
    (lo, hi.max(lo))
}

/// Forward convolution on `[C_in, T]` or `[B, C_in, T]` input.
pub fn conv1d<T: Real>(x: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, cin, t, unbatched) = as_batched(x, "conv1d")?;
    let (cout, wcin, k) = weight.dims3("conv1d weight")?;
    if wcin != cin {
        return Err(Error::shape("conv1d input channels", &[wcin], &[cin]));
    }
    let pad = (k / 2) as isize;
    let w = weight.data();
    let mut out = vec![T::zero(); b * cout * t];
    for bi in 0..b {
        let xs = &x.data()[bi * cin * t..(bi + 1) * cin * t];
        let ys = &mut out[bi * cout * t..(bi + 1) * cout * t];
        for o in 0..cout {
            let yrow = &mut ys[o * t..(o + 1) * t];
            yrow.fill(bias.data()[o]);
            for i in 0..cin {
                let xrow = &xs[i * t..(i + 1) * t];
                for j in 0..k {
                    let wv = w[(o * cin + i) * k + j];
                    let shift = j as isize - pad;
                    let (lo, hi) = tap_range(shift, t);
                    if lo < hi {
                        let s = (lo as isize + shift) as usize;
                        axpy(wv, &xrow[s..s + hi - lo], &mut yrow[lo..hi]);
                    }
                }
            }
        }
    }
    let shape = if unbatched { vec![cout, t] } else { vec![b, cout, t] };
    Tensor::new(shape, out)
}

/// Gradients of a convolution with respect to input, weight, and bias.
pub fn conv1d_backward<T: Real>(
    grad_out: &Tensor<T>,
    input: &Tensor<T>,
    weight: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (b, cin, t, unbatched) = as_batched(input, "conv1d_backward")?;
    let (cout, wcin, k) = weight.dims3("conv1d_backward weight")?;
    let expected = if unbatched { vec![cout, t] } else { vec![b, cout, t] };
    if wcin != cin || grad_out.shape() != expected.as_slice() {
        return Err(Error::shape("conv1d_backward", &expected, grad_out.shape()));
    }
    let pad = (k / 2) as isize;
    let w = weight.data();
    let mut gx = vec![T::zero(); b * cin * t];
    let mut gw = vec![T::zero(); cout * cin * k];
    let mut gb = vec![T::zero(); cout];
    for bi in 0..b {
        let xs = &input.data()[bi * cin * t..(bi + 1) * cin * t];
        let gs = &grad_out.data()[bi * cout * t..(bi + 1) * cout * t];
        let gxs = &mut gx[bi * cin * t..(bi + 1) * cin * t];
        for o in 0..cout {
            let grow = &gs[o * t..(o + 1) * t];
            gb[o] += grow.iter().copied().sum::<T>();
            for i in 0..cin {
                let xrow = &xs[i * t..(i + 1) * t];
                let gxrow = &mut gxs[i * t..(i + 1) * t];
                for j in 0..k {
                    let shift = j as isize - pad;
                    let (lo, hi) = tap_range(shift, t);
                    if lo >= hi {
                        continue;
                    }
                    let s = (lo as isize + shift) as usize;
                    let widx = (o * cin + i) * k + j;
                    gw[widx] += dot(&grow[lo..hi], &xrow[s..s + hi - lo]);
                    axpy(w[widx], &grow[lo..hi], &mut gxrow[s..s + hi - lo]);
                }
            }
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), gx)?,
        Tensor::new(weight.shape().to_vec(), gw)?,
        Tensor::new(vec![cout], gb)?,
    ))
}
