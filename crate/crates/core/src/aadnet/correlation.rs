use crate::error::{Error, Result};
use crate::nn::tensor::{axpy, dot};
use crate::nn::{Real, Tensor};

/// Centered, unit-norm copy of a row plus the norm it was divided by.
/// Degenerate (constant) rows come back as zeros with norm 0.
fn normalize_row<T: Real>(row: &[T]) -> (Vec<T>, T) {
    let n = T::lit(row.len() as f64);
    let mean = row.iter().fold(T::zero(), |a, &v| a + v) / n;
    let mut c: Vec<T> = row.iter().map(|&v| v - mean).collect();
    let ss = dot(&c, &c);
    let raw = dot(row, row);
    // Relative test keeps the decision invariant to rescaling the row.
    let tol = T::lit(1e4) * T::epsilon() * T::epsilon() * raw;
    if ss <= tol || ss <= T::min_positive_value() {
        c.fill(T::zero());
        return (c, T::zero());
    }
    let norm = ss.sqrt();
    let inv = T::one() / norm;
    for v in &mut c {
        *v *= inv;
    }
    (c, norm)
}

#[derive(Clone, Debug)]
struct Normalized<T> {
    rows: Vec<Vec<T>>,
    norms: Vec<T>,
}

fn normalize_sample<T: Real>(x: &[T], channels: usize, t: usize) -> Normalized<T> {
    let (rows, norms) = (0..channels).map(|c| normalize_row(&x[c * t..(c + 1) * t])).unzip();
    Normalized { rows, norms }
}

#[derive(Clone, Debug)]
struct CorrCache<T> {
    eeg: Vec<Normalized<T>>,
    /// `[stream][batch]`.
    audio: Vec<Vec<Normalized<T>>>,
    r: Vec<T>,
    t: usize,
}

/// Pearson correlation between every EEG feature channel and every audio
/// feature channel, for each audio stream.
///
/// Output index for stream `s`, EEG channel `i`, audio channel `j` is
/// `s * E * A + i * A + j`. Constant channels correlate as 0 and pass no gradient.
#[derive(Clone, Debug, Default)]
pub struct CorrelationLayer<T: Real> {
    cache: Option<CorrCache<T>>,
}

impl<T: Real> CorrelationLayer<T> {
    pub fn new() -> Self {
        Self { cache: None }
    }

    /// `eeg: [B, E, T']`, each stream `[B, A, T']` -> `[B, S * E * A]`.
    pub fn forward(&mut self, eeg: &Tensor<T>, streams: &[&Tensor<T>]) -> Result<Tensor<T>> {
        let (b, e, t) = eeg.dims3("correlation eeg")?;
        let first = streams
            .first()
            .ok_or_else(|| Error::InvalidArgument("correlation layer needs at least one stream".into()))?;
        let (_, a, _) = first.dims3("correlation audio")?;
        for s in streams {
            if s.shape() != [b, a, t] {
                return Err(Error::shape("correlation audio", &[b, a, t], s.shape()));
            }
        }
        if t < 2 {
            return Err(Error::SignalTooShort {
                op: "correlation layer",
                min: 2,
                len: t,
            });
        }
        let ns = streams.len();
        let width = ns * e * a;
        let mut r = vec![T::zero(); b * width];
        let eeg_n: Vec<_> = (0..b)
            .map(|bi| normalize_sample(&eeg.data()[bi * e * t..(bi + 1) * e * t], e, t))
            .collect();
        let mut audio_n = Vec::with_capacity(ns);
        for (si, s) in streams.iter().enumerate() {
            let per: Vec<_> = (0..b)
                .map(|bi| normalize_sample(&s.data()[bi * a * t..(bi + 1) * a * t], a, t))
                .collect();
            for bi in 0..b {
                for i in 0..e {
                    for j in 0..a {
                        let v = dot(&eeg_n[bi].rows[i], &per[bi].rows[j]);
                        r[bi * width + si * e * a + i * a + j] = v.max(-T::one()).min(T::one());
                    }
                }
            }
            audio_n.push(per);
        }
        let out = Tensor::new(vec![b, width], r.clone())?;
        self.cache = Some(CorrCache {
            eeg: eeg_n,
            audio: audio_n,
            r,
            t,
        });
        Ok(out)
    }

    /// Returns the gradient for the EEG input and one gradient per stream.
    pub fn backward(&mut self, grad: &Tensor<T>) -> Result<(Tensor<T>, Vec<Tensor<T>>)> {
        let c = self.cache.take().ok_or(Error::MissingCache("correlation layer"))?;
        let b = c.eeg.len();
        let e = c.eeg[0].rows.len();
        let a = c.audio[0][0].rows.len();
        let ns = c.audio.len();
        let width = ns * e * a;
        let t = c.t;
        if grad.shape() != [b, width] {
            return Err(Error::shape("correlation backward", &[b, width], grad.shape()));
        }
        let g = grad.data();
        let mut ge = vec![T::zero(); b * e * t];
        let mut ga: Vec<Vec<T>> = (0..ns).map(|_| vec![T::zero(); b * a * t]).collect();
        // dr/dx = (y_hat - r x_hat) / |x_c| for r = <x_hat, y_hat>.
        for bi in 0..b {
            let en = &c.eeg[bi];
            for si in 0..ns {
                let an = &c.audio[si][bi];
                let off = bi * width + si * e * a;
                for i in 0..e {
                    if en.norms[i] == T::zero() {
                        continue;
                    }
                    let inv = T::one() / en.norms[i];
                    let row = &mut ge[(bi * e + i) * t..(bi * e + i + 1) * t];
                    for j in 0..a {
                        if an.norms[j] == T::zero() {
                            continue;
                        }
                        let gij = g[off + i * a + j];
                        let rij = c.r[off + i * a + j];
                        axpy(gij * inv, &an.rows[j], row);
                        axpy(-gij * rij * inv, &en.rows[i], row);
                    }
                }
                for j in 0..a {
                    if an.norms[j] == T::zero() {
                        continue;
                    }
                    let inv = T::one() / an.norms[j];
                    let row = &mut ga[si][(bi * a + j) * t..(bi * a + j + 1) * t];
                    for i in 0..e {
                        if en.norms[i] == T::zero() {
                            continue;
                        }
                        let gij = g[off + i * a + j];
                        let rij = c.r[off + i * a + j];
                        axpy(gij * inv, &en.rows[i], row);
                        axpy(-gij * rij * inv, &an.rows[j], row);
                    }
                }
            }
        }
        let ge = Tensor::new(vec![b, e, t], ge)?;
        let ga = ga
            .into_iter()
            .map(|d| Tensor::new(vec![b, a, t], d))
            .collect::<Result<_>>()?;
        Ok((ge, ga))
    }
}

/// Single-sample convenience form: `[E, T']` against each `[A, T']` stream.
pub fn correlation_features<T: Real>(eeg: &Tensor<T>, streams: &[&Tensor<T>]) -> Result<Vec<T>> {
    let (e, t) = eeg.dims2("correlation_features")?;
    let lifted: Vec<Tensor<T>> = streams
        .iter()
        .map(|s| {
            let (a, ts) = s.dims2("correlation_features")?;
            (*s).clone().reshape(&[1, a, ts])
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&Tensor<T>> = lifted.iter().collect();
    let x = eeg.clone().reshape(&[1, e, t])?;
    Ok(CorrelationLayer::new().forward(&x, &refs)?.into_data())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pearson_loop(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (a, b) in x.iter().zip(y) {
            sxy += (a - mx) * (b - my);
            sxx += (a - mx) * (a - mx);
            syy += (b - my) * (b - my);
        }
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn matches_pairwise_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (e, a, t) = (5, 3, 40);
        let eeg = Tensor::<f64>::randn(&[e, t], 1.0, &mut rng);
        let sa = Tensor::<f64>::randn(&[a, t], 2.0, &mut rng);
        let sb = Tensor::<f64>::randn(&[a, t], 0.5, &mut rng);
        let f = correlation_features(&eeg, &[&sa, &sb]).unwrap();
        assert_eq!(f.len(), 2 * e * a);
        for (si, s) in [&sa, &sb].iter().enumerate() {
            for i in 0..e {
                for j in 0..a {
                    let want = pearson_loop(&eeg.data()[i * t..(i + 1) * t], &s.data()[j * t..(j + 1) * t]);
                    assert!((f[si * e * a + i * a + j] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn duplicated_channel_gives_one_and_constant_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eeg = Tensor::<f64>::randn(&[3, 30], 1.0, &mut rng);
        let mut audio = vec![7.0; 2 * 30];
        audio[30..].copy_from_slice(&eeg.data()[30..60]);
        let s = Tensor::new(vec![2, 30], audio).unwrap();
        let f = correlation_features(&eeg, &[&s]).unwrap();
        assert!((f[2 + 1] - 1.0).abs() < 1e-12);
        for i in 0..3 {
            assert_eq!(f[i * 2], 0.0);
        }
    }

    #[test]
    fn scale_invariant_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let eeg = Tensor::<f64>::randn(&[4, 25], 1.0, &mut rng);
        let s = Tensor::<f64>::randn(&[2, 25], 1.0, &mut rng);
        let mut scaled = s.clone();
        for v in &mut scaled.data_mut()[25..] {
            *v *= 37.5;
        }
        let f1 = correlation_features(&eeg, &[&s]).unwrap();
        let f2 = correlation_features(&eeg, &[&scaled]).unwrap();
        for (x, y) in f1.iter().zip(&f2) {
            assert!((x - y).abs() < 1e-12);
            assert!(x.abs() <= 1.0);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (b, e, a, t) = (2, 3, 2, 12);
        let eeg = Tensor::<f64>::randn(&[b, e, t], 1.0, &mut rng);
        let sa = Tensor::<f64>::randn(&[b, a, t], 1.0, &mut rng);
        let sb = Tensor::<f64>::randn(&[b, a, t], 1.0, &mut rng);
        let w = Tensor::<f64>::randn(&[b, 2 * e * a], 1.0, &mut rng);
        let objective = |x: &Tensor<f64>, ya: &Tensor<f64>, yb: &Tensor<f64>| {
            let r = CorrelationLayer::new().forward(x, &[ya, yb]).unwrap();
            dot(r.data(), w.data())
        };
        let mut layer = CorrelationLayer::new();
        layer.forward(&eeg, &[&sa, &sb]).unwrap();
        let (ge, gs) = layer.backward(&w).unwrap();
        let h = 1e-6;
        let inputs = [&eeg, &sa, &sb];
        let grads = [&ge, &gs[0], &gs[1]];
        for which in 0..3 {
            for k in 0..inputs[which].len() {
                let mut plus: Vec<Tensor<f64>> = inputs.iter().map(|x| (*x).clone()).collect();
                let mut minus = plus.clone();
                plus[which].data_mut()[k] += h;
                minus[which].data_mut()[k] -= h;
                let num =
                    (objective(&plus[0], &plus[1], &plus[2]) - objective(&minus[0], &minus[1], &minus[2])) / (2.0 * h);
                let ana = grads[which].data()[k];
                assert!(
                    (num - ana).abs() < 1e-6 * num.abs().max(1.0),
                    "{which} {k}: {num} vs {ana}"
                );
            }
        }
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let eeg = Tensor::<f64>::zeros(&[1, 2, 10]);
        let s = Tensor::<f64>::zeros(&[1, 2, 9]);
        assert!(CorrelationLayer::new().forward(&eeg, &[&s]).is_err());
        let short = Tensor::<f64>::zeros(&[1, 2, 1]);
        assert!(CorrelationLayer::new().forward(&short, &[&short]).is_err());
    }
}
