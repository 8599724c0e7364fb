use super::tensor::{Real, Tensor};

/// A learnable tensor together with its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<T: Real> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Real> Param<T> {
    pub fn new(value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }
}

/// A named piece of module state.
pub enum Slot<'a, T: Real> {
    Param(&'a mut Param<T>),
    /// Non-learnable state that still belongs in a checkpoint (batchnorm running statistics).
    Buffer(&'a mut Tensor<T>),
}

/// Forward-pass mode. The train seed drives every dropout mask, so a train-mode
/// forward is a pure function of its inputs and the seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train { seed: u64 },
    Eval,
}

impl Mode {
    pub fn is_train(self) -> bool {
        matches!(self, Mode::Train { .. })
    }

    /// Derives a distinct dropout seed for the `salt`-th stochastic layer.
    pub fn sub_seed(self, salt: u64) -> Option<u64> {
        match self {
            Mode::Train { seed } => Some(
                seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add(salt.wrapping_mul(0xBF58_476D_1CE4_E5B9))
                    ^ 0x94D0_49BB_1331_11EB,
            ),
            Mode::Eval => None,
        }
    }
}

pub trait Module<T: Real> {
    /// Visits every parameter and buffer in a fixed order with a dotted name.
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_, T>));

    fn zero_grad(&mut self) {
        self.visit("", &mut |_, slot| {
            if let Slot::Param(p) = slot {
                p.zero_grad();
            }
        });
    }

    fn num_params(&mut self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, slot| {
            if let Slot::Param(p) = slot {
                n += p.value.len();
            }
        });
        n
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
