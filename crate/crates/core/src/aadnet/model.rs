use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::correlation::CorrelationLayer;
use super::inception::{Inception, InceptionSpec};
use crate::data::Stream;
use crate::error::{Error, Result};
use crate::nn::module::join;
use crate::nn::{softmax, ActivationLayer, BatchNorm1d, Dense, Dropout, MaxPool1d, Mode, Module, Real, Slot, Tensor};

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AadnetSpec {
    pub eeg: InceptionSpec,
    pub audio: InceptionSpec,
    /// Width of FC1; 0 maps the correlation features straight to the two logits.
    pub hidden: usize,
    pub dropout: f64,
}

impl AadnetSpec {
    pub fn new(n_channels: usize, hidden: usize, dropout: f64) -> Self {
        Self {
            eeg: InceptionSpec::eeg(n_channels),
            audio: InceptionSpec::audio(),
            hidden,
            dropout,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.eeg.in_channels
    }

    /// Two streams times every (EEG, audio) feature pair.
    pub fn feature_dim(&self) -> usize {
        2 * self.eeg.out_channels() * self.audio.out_channels()
    }

    /// Shortest input that survives pooling with at least two samples left.
    pub fn min_samples(&self) -> usize {
        6
    }
}

/// BN -> Inception -> max pool (3, 3) -> BN.
#[derive(Clone, Debug)]
struct Encoder<T: Real> {
    bn_in: BatchNorm1d<T>,
    inception: Inception<T>,
    pool: MaxPool1d,
    bn_out: BatchNorm1d<T>,
}

impl<T: Real> Encoder<T> {
    fn new(spec: &InceptionSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            bn_in: BatchNorm1d::new(spec.in_channels),
            inception: Inception::new(spec.clone(), rng)?,
            pool: MaxPool1d::k3s3(),
            bn_out: BatchNorm1d::new(spec.out_channels()),
        })
    }

    fn forward(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let h = self.bn_in.forward(x, mode)?;
        let h = self.inception.forward(&h)?;
        let h = self.pool.forward(&h)?;
        self.bn_out.forward(&h, mode)
    }

    fn backward(&mut self, g: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.bn_out.backward(g)?;
        let g = self.pool.backward(&g)?;
        let g = self.inception.backward(&g)?;
        self.bn_in.backward(&g)
    }
}

impl<T: Real> Module<T> for Encoder<T> {
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_, T>)) {
        self.bn_in.visit(&join(prefix, "bn_in"), f);
        self.inception.visit(&join(prefix, "inception"), f);
        self.bn_out.visit(&join(prefix, "bn_out"), f);
    }
}

#[derive(Clone, Debug)]
struct Hidden<T: Real> {
    elu: ActivationLayer<T>,
    dropout: Dropout<T>,
    bn: BatchNorm1d<T>,
    fc2: Dense<T>,
}

/// The end-to-end classifier.
///
/// One audio encoder serves both streams: A and B are stacked into a single
/// batch of `2B`, so they share weights and batch statistics.
#[derive(Clone, Debug)]
pub struct Aadnet<T: Real> {
    spec: AadnetSpec,
    eeg: Encoder<T>,
    audio: Encoder<T>,
    corr: CorrelationLayer<T>,
    dropout: Dropout<T>,
    fc1: Dense<T>,
    hidden: Option<Hidden<T>>,
}

impl<T: Real> Aadnet<T> {
    pub fn new(spec: AadnetSpec, seed: u64) -> Result<Self> {
        if spec.audio.in_channels != 1 {
            return Err(Error::InvalidArgument(
                "audio encoder takes one envelope per stream".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eeg = Encoder::new(&spec.eeg, &mut rng)?;
        let audio = Encoder::new(&spec.audio, &mut rng)?;
        let features = spec.feature_dim();
        let fc1_out = if spec.hidden == 0 { 2 } else { spec.hidden };
        let fc1 = Dense::new(features, fc1_out, &mut rng);
        let hidden = if spec.hidden == 0 {
            None
        } else {
            Some(Hidden {
                elu: ActivationLayer::elu(),
                dropout: Dropout::new(spec.dropout, 2)?,
                bn: BatchNorm1d::new(spec.hidden),
                fc2: Dense::new(spec.hidden, 2, &mut rng),
            })
        };
        Ok(Self {
            dropout: Dropout::new(spec.dropout, 1)?,
            spec,
            eeg,
            audio,
            corr: CorrelationLayer::new(),
            fc1,
            hidden,
        })
    }

    pub fn spec(&self) -> &AadnetSpec {
        &self.spec
    }

    /// Logits `[B, 2]` for EEG `[B, N, T]` and envelopes `[B, 1, T]`. Class 0 is stream A.
    ///
    /// Only a train-mode pass keeps activations for [`Aadnet::backward`]; an
    /// eval pass runs on a scratch copy and leaves the model untouched.
    pub fn forward(&mut self, eeg: &Tensor<T>, env_a: &Tensor<T>, env_b: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        if mode.is_train() {
            self.forward_cached(eeg, env_a, env_b, mode)
        } else {
            self.clone().forward_cached(eeg, env_a, env_b, mode)
        }
    }

    fn forward_cached(
        &mut self,
        eeg: &Tensor<T>,
        env_a: &Tensor<T>,
        env_b: &Tensor<T>,
        mode: Mode,
    ) -> Result<Tensor<T>> {
        let (b, n, t) = eeg.dims3("aadnet eeg")?;
        if n != self.spec.n_channels() {
            return Err(Error::shape("aadnet eeg channels", &[self.spec.n_channels()], &[n]));
        }
        for env in [env_a, env_b] {
            if env.shape() != [b, 1, t] {
                return Err(Error::shape("aadnet envelope", &[b, 1, t], env.shape()));
            }
        }
        if t < self.spec.min_samples() {
            return Err(Error::SignalTooShort {
                op: "aadnet",
                min: self.spec.min_samples(),
                len: t,
            });
        }
        let e = self.eeg.forward(eeg, mode)?;
        let audio = self.audio.forward(&Tensor::concat_batch(env_a, env_b)?, mode)?;
        let (fa, fb) = audio.split_batch(b)?;
        let feats = self.corr.forward(&e, &[&fa, &fb])?;
        let h = self.dropout.forward(&feats, mode);
        let h = self.fc1.forward(&h)?;
        match self.hidden.as_mut() {
            None => Ok(h),
            Some(hd) => {
                let h = hd.elu.forward(&h);
                let h = hd.dropout.forward(&h, mode);
                let h = hd.bn.forward(&h, mode)?;
                hd.fc2.forward(&h)
            }
        }
    }

    /// Backpropagates `d loss / d logits` into every parameter gradient.
    pub fn backward(&mut self, grad_logits: &Tensor<T>) -> Result<()> {
        let mut g = grad_logits.clone();
        if let Some(hd) = self.hidden.as_mut() {
            g = hd.fc2.backward(&g)?;
            g = hd.bn.backward(&g)?;
            g = hd.dropout.backward(&g);
            g = hd.elu.backward(&g)?;
        }
        let g = self.fc1.backward(&g)?;
        let g = self.dropout.backward(&g);
        let (ge, gs) = self.corr.backward(&g)?;
        self.eeg.backward(&ge)?;
        let ga = Tensor::concat_batch(&gs[0], &gs[1])?;
        self.audio.backward(&ga)?;
        Ok(())
    }

    /// Class probabilities `[B, 2]`; rows sum to one.
    pub fn probabilities(
        &mut self,
        eeg: &Tensor<T>,
        env_a: &Tensor<T>,
        env_b: &Tensor<T>,
        mode: Mode,
    ) -> Result<Tensor<T>> {
        Ok(softmax(&self.forward(eeg, env_a, env_b, mode)?))
    }

    /// Eval-mode probabilities for a single window: EEG `[N, T]`, envelopes `[1, T]`.
    pub fn predict_proba(&mut self, eeg: &Tensor<T>, env_a: &Tensor<T>, env_b: &Tensor<T>) -> Result<[T; 2]> {
        let (n, t) = eeg.dims2("aadnet eeg")?;
        let lift = |x: &Tensor<T>, c| x.clone().reshape(&[1, c, t]);
        let p = self.probabilities(&lift(eeg, n)?, &lift(env_a, 1)?, &lift(env_b, 1)?, Mode::Eval)?;
        Ok([p.data()[0], p.data()[1]])
    }

    /// Eval-mode decisions for a batch; ties go to stream A.
    pub fn decide(&mut self, eeg: &Tensor<T>, env_a: &Tensor<T>, env_b: &Tensor<T>) -> Result<Vec<Stream>> {
        let logits = self.forward(eeg, env_a, env_b, Mode::Eval)?;
        Ok(logits
            .data()
            .chunks(2)
            .map(|l| if l[0] >= l[1] { Stream::A } else { Stream::B })
            .collect())
    }
}

impl<T: Real> Module<T> for Aadnet<T> {
    fn visit(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Slot<'_, T>)) {
        self.eeg.visit(&join(prefix, "eeg"), f);
        self.audio.visit(&join(prefix, "audio"), f);
        self.fc1.visit(&join(prefix, "fc1"), f);
        if let Some(hd) = self.hidden.as_mut() {
            hd.bn.visit(&join(prefix, "bn_hidden"), f);
            hd.fc2.visit(&join(prefix, "fc2"), f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::softmax_cross_entropy;
    use crate::nn::AdamW;
    use rand::SeedableRng;

    fn inputs<T: Real>(b: usize, n: usize, t: usize, seed: u64) -> (Tensor<T>, Tensor<T>, Tensor<T>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (
            Tensor::randn(&[b, n, t], 1.0, &mut rng),
            Tensor::randn(&[b, 1, t], 1.0, &mut rng),
            Tensor::randn(&[b, 1, t], 1.0, &mut rng),
        )
    }

    #[test]
    fn probabilities_sum_to_one_and_eval_is_deterministic() {
        let mut net = Aadnet::<f32>::new(AadnetSpec::new(8, 16, 0.3), 1).unwrap();
        let (x, a, b) = inputs(3, 8, 128, 2);
        let p1 = net.probabilities(&x, &a, &b, Mode::Eval).unwrap();
        for row in p1.data().chunks(2) {
            assert!((row[0] + row[1] - 1.0).abs() < 1e-6);
        }
        let p2 = net.probabilities(&x, &a, &b, Mode::Eval).unwrap();
        let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&p1), bits(&p2));
    }

    #[test]
    fn head_without_hidden_layer() {
        let mut net = Aadnet::<f64>::new(AadnetSpec::new(4, 0, 0.5), 3).unwrap();
        let (x, a, b) = inputs(2, 4, 90, 4);
        assert_eq!(
            net.forward(&x, &a, &b, Mode::Train { seed: 1 }).unwrap().shape(),
            [2, 2]
        );
        let mut names = Vec::new();
        net.visit("", &mut |n, _| names.push(n.to_string()));
        assert!(!names.iter().any(|n| n.starts_with("fc2")));
    }

    #[test]
    fn rejects_short_or_mismatched_input() {
        let mut net = Aadnet::<f64>::new(AadnetSpec::new(4, 8, 0.1), 5).unwrap();
        let (x, a, b) = inputs(1, 4, 5, 6);
        assert!(net.forward(&x, &a, &b, Mode::Eval).is_err());
        let (x, a, _) = inputs(1, 4, 30, 6);
        let (_, _, b) = inputs(1, 4, 31, 6);
        assert!(net.forward(&x, &a, &b, Mode::Eval).is_err());
        let (x, a, b) = inputs(1, 3, 30, 6);
        assert!(net.forward(&x, &a, &b, Mode::Eval).is_err());
    }

    #[test]
    fn overfits_one_batch_with_small_steps() {
        let mut net = Aadnet::<f64>::new(AadnetSpec::new(4, 8, 0.0), 7).unwrap();
        let (x, a, b) = inputs(4, 4, 96, 8);
        let labels = [0, 1, 1, 0];
        let mut opt = AdamW::new(1e-5, 0.0);
        let mut last = f64::INFINITY;
        for step in 0..10 {
            net.zero_grad();
            let logits = net.forward(&x, &a, &b, Mode::Train { seed: 0 }).unwrap();
            let (loss, g) = softmax_cross_entropy(&logits, &labels).unwrap();
            assert!(loss <= last + 1e-12, "step {step}: {loss} > {last}");
            last = loss;
            net.backward(&g).unwrap();
            opt.step(&mut net).unwrap();
        }
    }
}
