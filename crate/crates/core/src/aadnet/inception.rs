use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::module::join;
use crate::nn::{ActivationLayer, Conv1d, MaxPool1d, Module, Real, Slot, Tensor};

/// First stage of the pooling branch: a learnable `Conv(N, 3, N)` or a
/// width-3 max pool.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolStage {
    #[default]
    Conv,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSpec {
    /// 1x1 convolution, `in -> out`.
    Transform { out: usize },
    /// 1x1 reduction `in -> reduce`, then a `kernel`-tap convolution `reduce -> out`.
    Feature { reduce: usize, kernel: usize, out: usize },
    /// Width-3 stage (convolution or max pool, length preserving), then 1x1 `in -> out`.
    Pooling { stage: PoolStage, out: usize },
}

impl BranchSpec {
    pub fn out_channels(&self) -> usize {
        match *self {
            BranchSpec::Transform { out } | BranchSpec::Feature { out, .. } | BranchSpec::Pooling { out, .. } => out,
        }
    }
}

/// A 1-D Inception block: parallel branches, ReLU on each, concatenated along channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InceptionSpec {
    pub in_channels: usize,
    pub branches: Vec<BranchSpec>,
}

impl InceptionSpec {
    /// Six-branch EEG block for `n` input channels (72 output channels).
    pub fn eeg(n: usize) -> Self {
        Self::eeg_with_pool(n, PoolStage::default())
    }

    pub fn eeg_with_pool(n: usize, stage: PoolStage) -> Self {
        let feature = |reduce, kernel| BranchSpec::Feature { reduce, kernel, out: 8 };
        Self {
            in_channels: n,
            branches: vec![
                BranchSpec::Transform { out: 32 },
                feature(16, 19),
                feature(8, 25),
                feature(4, 33),
                feature(2, 39),
                BranchSpec::Pooling { stage, out: 8 },
            ],
        }
    }

    /// Three-branch audio block for one envelope (9 output channels).
    pub fn audio() -> Self {
        Self {
            in_channels: 1,
            branches: vec![
                BranchSpec::Transform { out: 1 },
                BranchSpec::Feature {
                    reduce: 1,
                    kernel: 65,
                    out: 4,
                },
                BranchSpec::Feature {
                    reduce: 1,
                    kernel: 81,
                    out: 4,
                },
            ],
        }
    }

    pub fn out_channels(&self) -> usize {
        self.branches.iter().map(BranchSpec::out_channels).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.branches.is_empty() {
            return Err(Error::InvalidArgument(
                "inception block needs input channels and at least one branch".into(),
            ));
        }
        for b in &self.branches {
            let ok = match *b {
                BranchSpec::Transform { out } | BranchSpec::Pooling { out, .. } => out > 0,
                BranchSpec::Feature { reduce, kernel, out } => reduce > 0 && out > 0 && kernel % 2 == 1,
            };
            if !ok {
                return Err(Error::InvalidArgument(format!("invalid inception branch {b:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Stage<T: Real> {
    Conv(Conv1d<T>),
    Pool(MaxPool1d),
}

#[derive(Clone, Debug)]
struct Branch<T: Real> {
    stages: Vec<Stage<T>>,
    relu: ActivationLayer<T>,
}

impl<T: Real> Branch<T> {
    fn new<R: Rng + ?Sized>(cin: usize, spec: &BranchSpec, rng: &mut R) -> Result<Self> {
        let stages = match *spec {
            BranchSpec::Transform { out } => vec![Stage::Conv(Conv1d::new(cin, out, 1, rng)?)],
            BranchSpec::Feature { reduce, kernel, out } => vec![
                Stage::Conv(Conv1d::new(cin, reduce, 1, rng)?),
                Stage::Conv(Conv1d::new(reduce, out, kernel, rng)?),
            ],
            BranchSpec::Pooling { stage, out } => {
                let first = match stage {
                    PoolStage::Conv => Stage::Conv(Conv1d::new(cin, cin, 3, rng)?),
                    PoolStage::Max => Stage::Pool(MaxPool1d::k3s1_same()),
                };
                vec![first, Stage::Conv(Conv1d::new(cin, out, 1, rng)?)]
            }
        };
        Ok(Self {
            stages,
            relu: ActivationLayer::relu(),
        })
    }

    fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut h = x.clone();
        for s in &mut self.stages {
            h = match s {
                Stage::Conv(c) => c.forward(&h)?,
                Stage::Pool(p) => p.forward(&h)?,
            };
        }
        Ok(self.relu.forward(&h))
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = self.relu.backward(grad)?;
        for s in self.stages.iter_mut().rev() {
            g = match s {
                Stage::Conv(c) => c.backward(&g)?,
                Stage::Pool(p) => p.backward(&g)?,
            };
        }
        Ok(g)
    }
}

/// Trainable Inception block operating on `[B, C_in, T]` tensors.
#[derive(Clone, Debug)]
pub struct Inception<T: Real> {
    spec: InceptionSpec,
    branches: Vec<Branch<T>>,
}

impl<T: Real> Inception<T> {
    pub fn new<R: Rng + ?Sized>(spec: InceptionSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let branches = spec
            .branches
            .iter()
            .map(|b| Branch::new(spec.in_channels, b, rng))
            .collect::<Result<_>>()?;
        Ok(Self { spec, branches })
    }

    pub fn spec(&self) -> &InceptionSpec {
        &self.spec
    }

    /// `[B, C_in, T] -> [B, C_out, T]`.
    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (_, c, _) = x.dims3("inception")?;
        if c != self.spec.in_channels {
            return Err(Error::shape("inception input channels", &[self.spec.in_channels], &[c]));
        }
        let outs = self
            .branches
            .iter_mut()
            .map(|b| b.forward(x))
            .collect::<Result<Vec<_>>>()?;
        Tensor::concat_channels(&outs)
    }

    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<Tensor<T>> {
        let sizes: Vec<usize> = self.spec.branches.iter().map(BranchSpec::out_channels).collect();
        let parts = grad.split_channels(&sizes)?;
        let mut gx: Option<Tensor<T>> = None;
        for (b, g) in self.branches.iter_mut().zip(&parts) {
            let gi = b.backward(g)?;
            match gx.as_mut() {
                Some(acc) => acc.add_assign(&gi)?,
                None => gx = Some(gi),
            }
        }
        gx.ok_or(Error::MissingCache("inception"))
    }
}

impl<T: Real> Module<T> for Inception<T> {
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_, T>)) {
        for (i, b) in self.branches.iter_mut().enumerate() {
            for (j, s) in b.stages.iter_mut().enumerate() {
                if let Stage::Conv(c) = s {
                    c.visit(&join(prefix, &format!("branch{i}.conv{j}")), f);
                }
            }
        }
    }
}
