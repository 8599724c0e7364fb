mod common;

use aadkit::data::{synth_generate, Stream, SynthConfig, Trial};
use aadkit::dsp::Signal;
use aadkit::eval::{make_windows, WindowSpec};
use aadkit::linear::cca::cca_solve;
use aadkit::linear::{
    build_lag_matrix, cca_classify, cca_features, cca_fit, cca_trial_stats, lda_fit, ridge_cv_fit, ridge_fit, select_j,
    CcaConfig, CrossStats, RidgeCvConfig,
};
use common::linalg::{ridge_normal_equations, whiten_svd};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_signal(rng: &mut ChaCha8Rng, channels: usize, samples: usize) -> Signal {
    let rows = (0..channels)
        .map(|_| (0..samples).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    Signal::new(rows, 64.0, Signal::default_labels(channels)).unwrap()
}

#[test]
fn ridge_matches_normal_equation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    // 200 rows x 12 columns: 4 channels, 3 lags.
    let eeg = random_signal(&mut rng, 4, 202);
    let x = build_lag_matrix(&eeg, 3).unwrap();
    let s: Vec<f64> = (0..x.rows()).map(|_| rng.random::<f64>()).collect();
    let d = ridge_fit(&x, &s, 1.0).unwrap();
    let oracle = ridge_normal_equations(&x.to_matrix(), &s, 1.0);
    for (g, o) in d.g.iter().zip(&oracle) {
        assert!((g - o).abs() <= 1e-8 * o.abs().max(1.0));
    }
}

#[test]
fn ridge_normal_equation_residual_over_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let eeg = random_signal(&mut rng, 3, 300);
    let x = build_lag_matrix(&eeg, 5).unwrap();
    let s: Vec<f64> = (0..x.rows()).map(|_| rng.random::<f64>()).collect();
    let xm = x.to_matrix();
    let xs = xm.tr_mul(&DVector::from_column_slice(&s));
    for lambda in aadkit::linear::default_lambda_grid() {
        let g = DVector::from_vec(ridge_fit(&x, &s, lambda).unwrap().g);
        let mut m = xm.tr_mul(&xm);
        for i in 0..m.nrows() {
            m[(i, i)] += lambda;
        }
        let res = (&m * &g - &xs).norm() / xs.norm();
        assert!(res < 1e-8, "lambda {lambda}: {res}");
    }
}

#[test]
fn ridge_predictions_invariant_to_channel_order() {
    let d = synth_generate(&SynthConfig {
        n_subjects: 1,
        trials_per_subject: 4,
        trial_secs: 20.0,
        n_channels: 4,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let trials: Vec<&Trial> = d.subjects[0].trials.iter().collect();
    let perm = [2, 0, 3, 1];
    let permuted: Vec<Trial> = trials
        .iter()
        .map(|t| {
            let rows = perm.iter().map(|&c| t.eeg.channel(c).to_vec()).collect();
            Trial {
                eeg: Signal::new(rows, 64.0, perm.iter().map(|c| c.to_string()).collect()).unwrap(),
                ..(*t).clone()
            }
        })
        .collect();
    let cfg = RidgeCvConfig::default();
    let a = ridge_cv_fit(&trials[..3], &cfg).unwrap().decoder;
    let b = ridge_cv_fit(&permuted.iter().take(3).collect::<Vec<_>>(), &cfg)
        .unwrap()
        .decoder;
    let ra = a.reconstruct(&trials[3].eeg).unwrap();
    let rb = b.reconstruct(&permuted[3].eeg).unwrap();
    for (x, y) in ra.iter().zip(&rb) {
        assert!((x - y).abs() < 1e-8);
    }
}

fn corpus(noise: f64, leakage: f64, informative: Option<Vec<usize>>, seed: u64) -> Vec<Trial> {
    synth_generate(&SynthConfig {
        n_subjects: 1,
        trials_per_subject: 12,
        trial_secs: 60.0,
        n_channels: 6,
        noise_std: noise,
        leakage,
        informative_channels: informative,
        seed,
        ..Default::default()
    })
    .unwrap()
    .subjects
    .remove(0)
    .trials
}

#[test]
fn ridge_cv_noiseless_recovers_envelope() {
    let trials = corpus(0.0, 0.0, None, 5);
    let refs: Vec<&Trial> = trials.iter().collect();
    let fit = ridge_cv_fit(&refs[..10], &RidgeCvConfig::default()).unwrap();
    assert!(fit.decoder.lambda <= 1.0, "lambda {}", fit.decoder.lambda);
    for t in &trials[10..] {
        let recon = fit.decoder.reconstruct(&t.eeg).unwrap();
        let r = aadkit::linear::pearson(&recon, &t.envelope(t.attended)[..recon.len()])
            .unwrap()
            .r;
        assert!(r > 0.99, "r = {r}");
    }
}

#[test]
fn ridge_cv_on_noise_is_uninformative() {
    // White EEG and white "envelopes": every held-out correlation is a null draw.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let trials: Vec<Trial> = (0..12)
        .map(|i| {
            let eeg = random_signal(&mut rng, 6, 3840);
            let env: Vec<f64> = (0..3840).map(|_| rng.random::<f64>()).collect();
            Trial::new(format!("t{i}"), eeg, env.clone(), env, Stream::A, "a", "b").unwrap()
        })
        .collect();
    let refs: Vec<&Trial> = trials.iter().collect();
    let fit = ridge_cv_fit(&refs[..10], &RidgeCvConfig::default()).unwrap();
    for t in &trials[10..] {
        let recon = fit.decoder.reconstruct(&t.eeg).unwrap();
        let r = aadkit::linear::pearson(&recon, &t.envelope(t.attended)[..recon.len()])
            .unwrap()
            .r;
        assert!(r.abs() < 2.0 / (recon.len() as f64).sqrt(), "r = {r}");
    }
}

#[test]
fn lsr_high_snr_windows() {
    let trials = corpus(0.5, 0.2, None, 7);
    let refs: Vec<&Trial> = trials.iter().collect();
    let dec = ridge_cv_fit(&refs[..6], &RidgeCvConfig::default()).unwrap().decoder;
    let (mut correct, mut n) = (0, 0);
    for t in &trials[6..] {
        for (a, b) in make_windows(t.samples(), 64.0, &WindowSpec::new(20.0, 0.9).unwrap()).spans {
            let w = t.eeg.slice(a, b).unwrap();
            let d = aadkit::linear::lsr_classify(&dec, &w, &t.env_a[a..b], &t.env_b[a..b]).unwrap();
            correct += usize::from(d.choice == t.attended);
            n += 1;
        }
    }
    assert!(n >= 100, "{n} windows");
    assert!(correct as f64 / n as f64 > 0.9, "{correct}/{n}");
}

#[test]
fn cca_matches_whiten_svd_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let x = DMatrix::from_fn(500, 6, |_, _| rng.random::<f64>() - 0.5);
        let mut s = DMatrix::from_fn(500, 4, |_, _| rng.random::<f64>() - 0.5);
        let mix = DMatrix::from_fn(6, 4, |_, _| rng.random::<f64>() - 0.5);
        s += &x * mix * 0.5;
        let (_, _, rho) = cca_solve(&CrossStats::from_designs(&x, &s), 1e-6).unwrap();
        let oracle = whiten_svd(&x, &s, 1e-6).rho;
        for (a, b) in rho.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn cca_invariant_under_channel_mixing() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let x = DMatrix::from_fn(800, 5, |_, _| rng.random::<f64>() - 0.5);
    let mut s = DMatrix::from_fn(800, 3, |_, _| rng.random::<f64>() - 0.5);
    s.column_mut(0).axpy(0.7, &x.column(2), 1.0);
    let mix = DMatrix::from_fn(5, 5, |i, j| {
        if i == j {
            2.0
        } else {
            0.3 * ((i + 2 * j) % 3) as f64 - 0.2
        }
    });
    let (_, _, a) = cca_solve(&CrossStats::from_designs(&x, &s), 0.0).unwrap();
    let (_, _, b) = cca_solve(&CrossStats::from_designs(&(&x * mix), &s), 0.0).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert!((p - q).abs() < 1e-6);
    }
}

#[test]
fn cca_classification_and_features() {
    let trials = corpus(0.5, 0.2, None, 8);
    let refs: Vec<&Trial> = trials.iter().collect();
    let cfg = CcaConfig::default();
    let model = cca_fit(&refs[..8], &cfg).unwrap();
    assert_eq!(model.components(), 17);

    // Long window of training data reproduces the fit-time correlation.
    let t = &trials[0];
    let (f, _) = cca_features(&model, &t.eeg, t.envelope(t.attended), 17).unwrap();
    assert_eq!(f.len(), 17);
    assert!(f.iter().all(|v| (-1.0..=1.0).contains(v)));
    assert!((f[0] - model.rho[0]).abs() < 0.1, "{} vs {}", f[0], model.rho[0]);

    // LDA on difference features of training windows with J = 2.
    let j = 2;
    let spec = WindowSpec::new(20.0, 0.85).unwrap();
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for t in &trials[..8] {
        let p = model.project(&t.eeg, &[&t.env_a, &t.env_b]).unwrap();
        for (a, b) in make_windows(t.samples(), 64.0, &spec).spans {
            feats.push(p.difference(a, b, j).0);
            labels.push(usize::from(t.attended == Stream::A));
        }
    }
    let lda = lda_fit(&feats, &labels).unwrap();
    let (mut correct, mut n) = (0, 0);
    for t in &trials[8..] {
        for (a, b) in make_windows(t.samples(), 64.0, &spec).spans {
            let w = t.eeg.slice(a, b).unwrap();
            let d = cca_classify(&model, &lda, &w, &t.env_a[a..b], &t.env_b[a..b]).unwrap();
            correct += usize::from(d.choice == t.attended);
            n += 1;
            // Equal envelopes give the zero feature vector.
            if n == 1 {
                let z = cca_classify(&model, &lda, &w, &t.env_a[a..b], &t.env_a[a..b]).unwrap();
                assert!(z.features.iter().all(|&v| v == 0.0));
                let zero_bias = aadkit::linear::LdaClassifier {
                    bias: 0.0,
                    ..lda.clone()
                };
                let s = cca_classify(&model, &zero_bias, &w, &t.env_b[a..b], &t.env_a[a..b]).unwrap();
                let f = cca_classify(&model, &zero_bias, &w, &t.env_a[a..b], &t.env_b[a..b]).unwrap();
                for (p, q) in s.features.iter().zip(&f.features) {
                    assert!((p + q).abs() < 1e-12);
                }
                if f.features.iter().any(|&v| v != 0.0) && zero_bias.score(&f.features) != 0.0 {
                    assert_ne!(s.choice, f.choice);
                }
            }
        }
    }
    assert!(correct as f64 / n as f64 > 0.85, "{correct}/{n}");
}

#[test]
fn select_j_prefers_few_components() {
    let trials = corpus(0.5, 0.0, Some(vec![0]), 9);
    let refs: Vec<&Trial> = trials.iter().collect();
    let cfg = CcaConfig::default();
    let stats: Vec<CrossStats> = trials
        .iter()
        .map(|t| cca_trial_stats(&t.eeg, t.envelope(t.attended), &cfg).unwrap())
        .collect();
    let sref: Vec<&CrossStats> = stats.iter().collect();
    let js = select_j(&refs, &sref, &[10.0, 20.0], &cfg, 4).unwrap();
    let again = select_j(&refs, &sref, &[10.0, 20.0], &cfg, 4).unwrap();
    assert_eq!(js, again);
    let j = aadkit::linear::combine_j(&[js]).unwrap();
    assert!((1..=3).contains(&j), "J = {j}");
}
