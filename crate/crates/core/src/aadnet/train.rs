use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{Aadnet, AadnetSpec};
use crate::data::{Stream, Trial};
use crate::error::{Error, Result};
use crate::eval::{make_windows, WindowSpec};
use crate::nn::{
    load_state_dict, save_checkpoint, softmax_cross_entropy, state_dict, AdamW, Mode, Module, NamedTensors, Tensor,
};
use crate::seed::derive;

/// One training or evaluation window.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    /// `[N, T]`.
    pub eeg: Tensor<f32>,
    pub env_a: Vec<f32>,
    pub env_b: Vec<f32>,
    /// 0 when stream A is attended.
    pub label: usize,
}

impl Example {
    pub fn samples(&self) -> usize {
        self.env_a.len()
    }

    /// The same window with the two streams exchanged and the label flipped.
    pub fn swapped(&self) -> Self {
        Self {
            eeg: self.eeg.clone(),
            env_a: self.env_b.clone(),
            env_b: self.env_a.clone(),
            label: 1 - self.label,
        }
    }
}

/// Cuts one example per window span out of a trial.
pub fn trial_examples(trial: &Trial, spans: &[(usize, usize)]) -> Result<Vec<Example>> {
    let n = trial.eeg.channels();
    spans
        .iter()
        .map(|&(s, e)| {
            if e > trial.samples() || s >= e {
                return Err(Error::InvalidArgument(format!(
                    "window {s}..{e} outside trial {}",
                    trial.id
                )));
            }
            let mut eeg = Vec::with_capacity(n * (e - s));
            for c in 0..n {
                eeg.extend(trial.eeg.channel(c)[s..e].iter().map(|&v| v as f32));
            }
            let cut = |x: &[f64]| x[s..e].iter().map(|&v| v as f32).collect::<Vec<f32>>();
            Ok(Example {
                eeg: Tensor::new(vec![n, e - s], eeg)?,
                env_a: cut(&trial.env_a),
                env_b: cut(&trial.env_b),
                label: trial.attended.label(),
            })
        })
        .collect()
}

/// Windows every trial with `spec`; trials shorter than the window contribute nothing.
pub fn examples_from_trials(trials: &[&Trial], spec: &WindowSpec) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for t in trials {
        let w = make_windows(t.samples(), t.rate(), spec);
        out.extend(trial_examples(t, &w.spans)?);
    }
    Ok(out)
}

/// Each example followed by its stream-swapped twin; labels come out exactly balanced.
pub fn augment_swap(batch: &[Example]) -> Vec<Example> {
    batch.iter().flat_map(|e| [e.clone(), e.swapped()]).collect()
}

/// Stacks examples into model inputs `[B, N, T]`, `[B, 1, T]`, `[B, 1, T]` and labels.
pub fn collate(batch: &[&Example]) -> Result<(Tensor<f32>, Tensor<f32>, Tensor<f32>, Vec<usize>)> {
    let first = batch
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty batch".into()))?;
    let (n, t) = first.eeg.dims2("collate")?;
    let b = batch.len();
    let mut eeg = Vec::with_capacity(b * n * t);
    let mut a = Vec::with_capacity(b * t);
    let mut bb = Vec::with_capacity(b * t);
    for ex in batch {
        if ex.eeg.shape() != [n, t] || ex.env_a.len() != t || ex.env_b.len() != t {
            return Err(Error::shape("collate", &[n, t], ex.eeg.shape()));
        }
        eeg.extend_from_slice(ex.eeg.data());
        a.extend_from_slice(&ex.env_a);
        bb.extend_from_slice(&ex.env_b);
    }
    Ok((
        Tensor::new(vec![b, n, t], eeg)?,
        Tensor::new(vec![b, 1, t], a)?,
        Tensor::new(vec![b, 1, t], bb)?,
        batch.iter().map(|e| e.label).collect(),
    ))
}

/// Training hyperparameters. Grid-valued fields are searched by [`random_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub dropout: f64,
    pub hidden: usize,
    /// Stop after this many consecutive epochs without a lower validation loss.
    pub patience: usize,
    pub max_epochs: usize,
    /// Fine-tuning runs at `lr * finetune_lr_factor`.
    pub finetune_lr_factor: f64,
    pub finetune_max_epochs: usize,
    /// Length of the windows cut from training trials.
    pub window_s: f64,
    pub window_overlap: f64,
    pub seed: u64,
    /// Written every time the validation loss improves.
    #[serde(skip)]
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-5,
            batch_size: 32,
            weight_decay: 1e-2,
            dropout: 0.4,
            hidden: 16,
            patience: 5,
            max_epochs: 100,
            finetune_lr_factor: 0.1,
            finetune_max_epochs: 100,
            window_s: 10.0,
            window_overlap: 0.0,
            seed: 0,
            checkpoint_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if self.weight_decay < 0.0 {
            return bad("weight_decay must be non-negative");
        }
        if !(self.finetune_lr_factor > 0.0) {
            return bad("finetune_lr_factor must be positive");
        }
        WindowSpec::new(self.window_s, self.window_overlap)
            .map(|_| ())
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model_spec(&self, n_channels: usize) -> AadnetSpec {
        AadnetSpec::new(n_channels, self.hidden, self.dropout)
    }

    pub fn train_windows(&self) -> Result<WindowSpec> {
        WindowSpec::new(self.window_s, self.window_overlap)
    }
}

/// Value grids for [`random_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchGrid {
    pub batch_size: Vec<usize>,
    pub weight_decay: Vec<f64>,
    pub dropout: Vec<f64>,
    pub hidden: Vec<usize>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            batch_size: vec![32, 64, 128],
            weight_decay: vec![1e-4, 1e-3, 1e-2, 1e-1],
            dropout: vec![0.5, 0.4, 0.3, 0.2, 0.1],
            hidden: vec![32, 16, 0],
        }
    }
}

impl SearchGrid {
    /// `base` with every grid field replaced by a uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, base: &TrainConfig, rng: &mut R) -> Result<TrainConfig> {
        fn pick<T: Copy, R: Rng + ?Sized>(v: &[T], name: &str, rng: &mut R) -> Result<T> {
            v.choose(rng)
                .copied()
                .ok_or_else(|| Error::Config(format!("search grid for {name} is empty")))
        }
        Ok(TrainConfig {
            batch_size: pick(&self.batch_size, "batch_size", rng)?,
            weight_decay: pick(&self.weight_decay, "weight_decay", rng)?,
            dropout: pick(&self.dropout, "dropout", rng)?,
            hidden: pick(&self.hidden, "hidden", rng)?,
            ..base.clone()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    /// True when this epoch produced a new best checkpoint.
    pub checkpoint: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// The best checkpoint, which may be the starting point.
    pub model: Aadnet<f32>,
    pub log: Vec<EpochLog>,
    pub initial_val_loss: f64,
    pub best_val_loss: f64,
    /// 0 when no epoch improved on the starting point.
    pub best_epoch: usize,
}

pub fn write_log_csv(log: &[EpochLog], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in log {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const EVAL_BATCH: usize = 64;

/// Mean cross-entropy and accuracy in eval mode.
pub fn evaluate(model: &mut Aadnet<f32>, examples: &[Example]) -> Result<(f64, f64)> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("evaluation set is empty".into()));
    }
    let (mut loss, mut correct) = (0.0, 0usize);
    for chunk in examples.chunks(EVAL_BATCH) {
        let refs: Vec<&Example> = chunk.iter().collect();
        let (x, a, b, labels) = collate(&refs)?;
        let logits = model.forward(&x, &a, &b, Mode::Eval)?;
        let (l, _) = softmax_cross_entropy(&logits, &labels)?;
        loss += l as f64 * chunk.len() as f64;
        for (row, &y) in logits.data().chunks(2).zip(&labels) {
            let pred = if row[0] >= row[1] { 0 } else { 1 };
            correct += (pred == y) as usize;
        }
    }
    let n = examples.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Eval-mode decisions for a list of windows.
pub fn decide_examples(model: &mut Aadnet<f32>, examples: &[Example]) -> Result<Vec<Stream>> {
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(EVAL_BATCH) {
        let refs: Vec<&Example> = chunk.iter().collect();
        let (x, a, b, _) = collate(&refs)?;
        out.extend(model.decide(&x, &a, &b)?);
    }
    Ok(out)
}

fn fit(
    mut model: Aadnet<f32>,
    train: &[Example],
    val: &[Example],
    cfg: &TrainConfig,
    lr: f64,
    max_epochs: usize,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidArgument(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let train = augment_swap(train);
    let val = augment_swap(val);
    let (initial_val_loss, _) = evaluate(&mut model, &val)?;
    let mut best: NamedTensors = state_dict(&mut model);
    let mut best_val_loss = initial_val_loss;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut log = Vec::new();
    let mut opt = AdamW::new(lr, cfg.weight_decay);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0u64;

    for epoch in 1..=max_epochs {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive(cfg.seed, epoch as u64)));
        let mut total = 0.0;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let refs: Vec<&Example> = chunk.iter().map(|&i| &train[i]).collect();
            let (x, a, b, labels) = collate(&refs)?;
            model.zero_grad();
            let mode = Mode::Train {
                seed: derive(cfg.seed ^ 0x5eed, step),
            };
            let logits = model.forward(&x, &a, &b, mode)?;
            let (loss, g) = softmax_cross_entropy(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss at epoch {epoch}, batch {bi} (lr {lr}, batch size {})",
                    cfg.batch_size
                )));
            }
            total += loss as f64 * chunk.len() as f64;
            model.backward(&g)?;
            opt.step(&mut model)?;
            step += 1;
        }
        let (val_loss, val_accuracy) = evaluate(&mut model, &val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!("validation loss at epoch {epoch}")));
        }
        let improved = val_loss < best_val_loss;
        if improved {
            best = state_dict(&mut model);
            best_val_loss = val_loss;
            best_epoch = epoch;
            stale = 0;
            if let Some(p) = &cfg.checkpoint_path {
                save_checkpoint(p, &best)?;
            }
        } else {
            stale += 1;
        }
        log.push(EpochLog {
            epoch,
            train_loss: total / train.len() as f64,
            val_loss,
            val_accuracy,
            checkpoint: improved,
        });
        if stale >= cfg.patience {
            break;
        }
    }
    load_state_dict(&mut model, &best)?;
    Ok(TrainOutcome {
        model,
        log,
        initial_val_loss,
        best_val_loss,
        best_epoch,
    })
}

/// Trains a freshly initialized network; initialization is seeded by `cfg.seed`.
pub fn train(n_channels: usize, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome> {
    let model = Aadnet::new(cfg.model_spec(n_channels), derive(cfg.seed, 0xa11ce))?;
    train_model(model, train, val, cfg)
}

/// Continues training an existing network at `cfg.lr`.
pub fn train_model(model: Aadnet<f32>, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome> {
    fit(model, train, val, cfg, cfg.lr, cfg.max_epochs)
}

/// Subject-specific fine-tuning of a subject-independent network at the reduced rate.
pub fn finetune_ss(si: &Aadnet<f32>, train: &[Example], val: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome> {
    fit(
        si.clone(),
        train,
        val,
        cfg,
        cfg.lr * cfg.finetune_lr_factor,
        cfg.finetune_max_epochs,
    )
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: TrainConfig,
    pub best_val_loss: f64,
    /// Every sampled configuration with its best validation loss.
    pub candidates: Vec<(TrainConfig, f64)>,
}

/// Samples `budget` configurations from `grid` and keeps the lowest validation loss.
pub fn random_search(
    grid: &SearchGrid,
    budget: usize,
    base: &TrainConfig,
    n_channels: usize,
    train_set: &[Example],
    val_set: &[Example],
) -> Result<SearchOutcome> {
    if budget == 0 {
        return Err(Error::InvalidArgument("random search budget must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive(base.seed, 0x5ea4c4));
    let mut candidates = Vec::with_capacity(budget);
    for i in 0..budget {
        let mut cfg = grid.sample(base, &mut rng)?;
        cfg.seed = derive(base.seed, i as u64);
        cfg.checkpoint_path = None;
        let out = train(n_channels, train_set, val_set, &cfg)?;
        candidates.push((cfg, out.best_val_loss));
    }
    let (best, best_val_loss) = candidates
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .expect("budget >= 1");
    let mut best = best;
    best.seed = base.seed;
    Ok(SearchOutcome {
        best,
        best_val_loss,
        candidates,
    })
}
