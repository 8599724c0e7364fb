use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Floating-point element type of tensors: `f64` for gradient checks, `f32` for training.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Dense row-major tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "tensor dimensions must be positive, got {shape:?}"
            )));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape {
                op: "Tensor::new",
                expected: vec![n],
                actual: vec![data.len()],
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> T) -> Self {
        let n: usize = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: (0..n).map(&mut f).collect(),
        }
    }

    /// Gaussian entries with the given standard deviation.
    pub fn randn<R: Rng + ?Sized>(shape: &[usize], std: f64, rng: &mut R) -> Self {
        Self::from_fn(shape, |_| {
            let z: f64 = StandardNormal.sample(rng);
            T::lit(z * std)
        })
    }

    /// Uniform entries in `[-bound, bound)`.
    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], bound: f64, rng: &mut R) -> Self {
        Self::from_fn(shape, |_| T::lit(rng.random_range(-bound..bound)))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::shape("reshape", &self.shape, shape));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// `(batch, channels, time)` of a rank-3 tensor.
    pub fn dims3(&self, op: &'static str) -> Result<(usize, usize, usize)> {
        match *self.shape.as_slice() {
            [b, c, t] => Ok((b, c, t)),
            _ => Err(Error::Shape {
                op,
                expected: vec![0, 0, 0],
                actual: self.shape.clone(),
            }),
        }
    }

    /// `(rows, cols)` of a rank-2 tensor.
    pub fn dims2(&self, op: &'static str) -> Result<(usize, usize)> {
        match *self.shape.as_slice() {
            [r, c] => Ok((r, c)),
            _ => Err(Error::Shape {
                op,
                expected: vec![0, 0],
                actual: self.shape.clone(),
            }),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape("add_assign", &self.shape, &other.shape));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| U::lit(x.as_f64())).collect(),
        }
    }

    /// Concatenates rank-3 tensors along the channel axis.
    pub fn concat_channels(parts: &[Tensor<T>]) -> Result<Self> {
        let (b, _, t) = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat of zero tensors".into()))?
            .dims3("concat_channels")?;
        let mut total = 0;
        for p in parts {
            let (pb, pc, pt) = p.dims3("concat_channels")?;
            if pb != b || pt != t {
                return Err(Error::shape("concat_channels", &[b, pc, t], p.shape()));
            }
            total += pc;
        }
        let mut out = Vec::with_capacity(b * total * t);
        for bi in 0..b {
            for p in parts {
                let c = p.shape[1];
                out.extend_from_slice(&p.data[bi * c * t..(bi + 1) * c * t]);
            }
        }
        Ok(Self {
            shape: vec![b, total, t],
            data: out,
        })
    }

    /// Inverse of [`Tensor::concat_channels`].
    pub fn split_channels(&self, sizes: &[usize]) -> Result<Vec<Self>> {
        let (b, c, t) = self.dims3("split_channels")?;
        if sizes.iter().sum::<usize>() != c {
            return Err(Error::shape("split_channels", &[c], &[sizes.iter().sum()]));
        }
        let mut parts: Vec<Vec<T>> = sizes.iter().map(|&s| Vec::with_capacity(b * s * t)).collect();
        for bi in 0..b {
            let mut off = bi * c * t;
            for (part, &s) in parts.iter_mut().zip(sizes) {
                part.extend_from_slice(&self.data[off..off + s * t]);
                off += s * t;
            }
        }
        Ok(parts
            .into_iter()
            .zip(sizes)
            .map(|(data, &s)| Self {
                shape: vec![b, s, t],
                data,
            })
            .collect())
    }

    /// Stacks equally shaped tensors along a new leading batch axis.
    pub fn stack(items: &[Tensor<T>]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::InvalidArgument("stack of zero tensors".into()))?;
        let mut data = Vec::with_capacity(first.len() * items.len());
        for it in items {
            if it.shape != first.shape {
                return Err(Error::shape("stack", &first.shape, &it.shape));
            }
            data.extend_from_slice(&it.data);
        }
        let mut shape = vec![items.len()];
        shape.extend_from_slice(&first.shape);
        Ok(Self { shape, data })
    }

    /// Concatenates along the leading axis.
    pub fn concat_batch(a: &Self, b: &Self) -> Result<Self> {
        if a.shape[1..] != b.shape[1..] {
            return Err(Error::shape("concat_batch", &a.shape, &b.shape));
        }
        let mut shape = a.shape.clone();
        shape[0] += b.shape[0];
        let mut data = a.data.clone();
        data.extend_from_slice(&b.data);
        Ok(Self { shape, data })
    }

    /// Splits along the leading axis at `at`.
    pub fn split_batch(&self, at: usize) -> Result<(Self, Self)> {
        let n = self.shape[0];
        if at == 0 || at >= n {
            return Err(Error::InvalidArgument(format!("split_batch at {at} of {n}")));
        }
        let stride = self.len() / n;
        let mut s1 = self.shape.clone();
        s1[0] = at;
        let mut s2 = self.shape.clone();
        s2[0] = n - at;
        Ok((
            Self {
                shape: s1,
                data: self.data[..at * stride].to_vec(),
            },
            Self {
                shape: s2,
                data: self.data[at * stride..].to_vec(),
            },
        ))
    }
}

/// Dot product with independent partial sums so the loop vectorizes.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let chunks = n / 8;
    for c in 0..chunks {
        let xa = &a[c * 8..c * 8 + 8];
        let xb = &b[c * 8..c * 8 + 8];
        for l in 0..8 {
            acc[l] += xa[l] * xb[l];
        }
    }
    let mut s = T::zero();
    for i in chunks * 8..n {
        s += a[i] * b[i];
    }
    let pair = [acc[0] + acc[4], acc[1] + acc[5], acc[2] + acc[6], acc[3] + acc[7]];
    s + (pair[0] + pair[2]) + (pair[1] + pair[3])
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
