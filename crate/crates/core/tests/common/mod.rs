//! Oracles shared by the integration suites.
#![allow(dead_code)]

use aadkit::aadnet::{Aadnet, AadnetSpec, BranchSpec, Inception, InceptionSpec, PoolStage};
use aadkit::nn::{finite_diff_check, softmax_cross_entropy, GradCheckReport, Mode, Tensor};
use aadkit::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Weights and biases of a stride-1 convolution written as (in, kernel, out).
fn conv(x: usize, k: usize, y: usize) -> usize {
    x * k * y + y
}

/// Trainable parameter count worked out directly from the branch table.
pub fn closed_form_param_count(n: usize, h: usize) -> usize {
    let eeg_inception = conv(n, 1, 32)
        + conv(n, 1, 16)
        + conv(16, 19, 8)
        + conv(n, 1, 8)
        + conv(8, 25, 8)
        + conv(n, 1, 4)
        + conv(4, 33, 8)
        + conv(n, 1, 2)
        + conv(2, 39, 8)
        + conv(n, 3, n)
        + conv(n, 1, 8);
    let audio_inception = conv(1, 1, 1) + conv(1, 1, 1) + conv(1, 65, 4) + conv(1, 1, 1) + conv(1, 81, 4);
    // gamma and beta of the four encoder batchnorms
    let encoder_bn = 2 * (n + 72) + 2 * (1 + 9);
    let features = 2 * 72 * 9;
    let head = if h == 0 {
        features * 2 + 2
    } else {
        features * h + h + 2 * h + h * 2 + 2
    };
    eeg_inception + audio_inception + encoder_bn + head
}

/// Same topology as the full network with every width shrunk.
pub mod cli;
pub mod linalg;

pub fn mini_spec() -> AadnetSpec {
    let feature = |reduce, kernel| BranchSpec::Feature { reduce, kernel, out: 2 };
    AadnetSpec {
        eeg: InceptionSpec {
            in_channels: 4,
            branches: vec![
                BranchSpec::Transform { out: 3 },
                feature(3, 5),
                feature(2, 7),
                feature(2, 9),
                feature(1, 11),
                BranchSpec::Pooling {
                    stage: PoolStage::Conv,
                    out: 2,
                },
            ],
        },
        audio: InceptionSpec {
            in_channels: 1,
            branches: vec![
                BranchSpec::Transform { out: 1 },
                BranchSpec::Feature {
                    reduce: 1,
                    kernel: 9,
                    out: 2,
                },
                BranchSpec::Feature {
                    reduce: 1,
                    kernel: 13,
                    out: 2,
                },
            ],
        },
        hidden: 4,
        dropout: 0.2,
    }
}

/// Finite-difference check of the miniature network (N=4, T=96) in 64-bit.
pub fn mini_aadnet_gradcheck(seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, n, t) = (3, 4, 96);
    let x = Tensor::<f64>::randn(&[b, n, t], 1.0, &mut rng);
    let a = Tensor::<f64>::randn(&[b, 1, t], 1.0, &mut rng);
    let s = Tensor::<f64>::randn(&[b, 1, t], 1.0, &mut rng);
    let labels = [0, 1, 1];
    let mut net = Aadnet::<f64>::new(mini_spec(), seed)?;
    let mode = Mode::Train { seed: seed ^ 77 };
    finite_diff_check(
        &mut net,
        |m, backward| {
            let logits = m.forward(&x, &a, &s, mode)?;
            let (loss, g) = softmax_cross_entropy(&logits, &labels)?;
            if backward {
                m.backward(&g)?;
            }
            Ok(loss)
        },
        1e-6,
    )
}

/// Finite-difference check of an Inception block against a random linear readout.
pub fn inception_gradcheck(spec: InceptionSpec, t: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Tensor::<f64>::randn(&[2, spec.in_channels, t], 1.0, &mut rng);
    let w = Tensor::<f64>::randn(&[2, spec.out_channels(), t], 1.0, &mut rng);
    let mut inc = Inception::<f64>::new(spec, &mut rng)?;
    finite_diff_check(
        &mut inc,
        |m, backward| {
            let y = m.forward(&x)?;
            if backward {
                m.backward(&w)?;
            }
            Ok(y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum())
        },
        1e-6,
    )
}
