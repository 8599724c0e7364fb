//! The `aad` command line: one binary, one subcommand per pipeline stage.
//!
//! Configuration is layered: built-in defaults, then the `--config` TOML
//! file, then `AAD_*` environment variables, then flags. Any key can be set
//! from the environment; nested keys join with a double underscore, e.g.
//! `AAD_TRAIN__LR=1e-3` or `AAD_SYNTH__N_SUBJECTS=4`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::aadnet::{write_log_csv, Aadnet, TrainConfig};
use crate::data::{
    load_dataset, preprocess_raw, save_dataset, synth_generate, write_trial_metadata_csv, Dataset, SynthConfig,
};
use crate::dsp::EnvelopeMethod;
use crate::error::{Error, Result};
use crate::eval::{
    loco_all, mesd_rows, pooled_accuracy, read_csv, run_protocol, score_folds, subject_scores, subject_table,
    summary_table, train_folds, write_csv, EvalRow, FoldModel, FoldPlan, LocoRow, MesdConfig, MesdRow, Method,
    Pretrain, ProtocolConfig, Regime, TrainedFold, DEFAULT_FOLDS, DEFAULT_WINDOWS_S,
};
use crate::linear::io::{decode_cca, decode_ridge, encode_cca, encode_ridge};
use crate::linear::{CcaConfig, RidgeCvConfig};
use crate::nn::{load_checkpoint, load_state_dict, save_checkpoint, state_dict};

pub const ENV_PREFIX: &str = "AAD_";
/// Environment variables with the prefix that are not configuration keys.
const ENV_RESERVED: [&str; 2] = ["AAD_CONFIG", "AAD_WORKERS"];

/// Everything a run depends on. `seed` is the only seed: it replaces the
/// synthetic generator's and the protocol's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    /// Not written back out, so identical runs into different directories
    /// produce identical files.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub method: Method,
    pub mode: Regime,
    pub windows: Vec<f64>,
    pub seed: u64,
    pub folds: usize,
    pub inner_folds: usize,
    pub pretrain: Pretrain,
    pub envelope: EnvelopeMethod,
    pub ridge: RidgeCvConfig,
    pub cca: CcaConfig,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub mesd: MesdConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            out: PathBuf::from("out"),
            method: Method::Lsr,
            mode: Regime::Ss,
            windows: DEFAULT_WINDOWS_S.to_vec(),
            seed: 0,
            folds: DEFAULT_FOLDS,
            inner_folds: 5,
            pretrain: Pretrain::default(),
            envelope: EnvelopeMethod::default(),
            ridge: RidgeCvConfig::default(),
            cca: CcaConfig::default(),
            train: TrainConfig::default(),
            synth: SynthConfig::default(),
            mesd: MesdConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() || self.windows.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Config(format!(
                "window lengths must be positive: {:?}",
                self.windows
            )));
        }
        if self.windows.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!(
                "window lengths must be ascending: {:?}",
                self.windows
            )));
        }
        self.protocol().validate()?;
        self.synth.validate()?;
        self.mesd.validate()
    }

    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            windows_s: self.windows.clone(),
            folds: self.folds,
            inner_folds: self.inner_folds,
            seed: self.seed,
            ridge: self.ridge.clone(),
            cca: self.cca.clone(),
            train: self.train.clone(),
            pretrain: self.pretrain,
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Error::Config("no dataset given (--data or `data` in the config)".into()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "aad", version, about = "Envelope-based auditory attention decoding")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(long, global = true, value_parser = parse_regime)]
    pub mode: Option<Regime>,
    /// Comma-separated window lengths in seconds, e.g. "1,2,5,10,20,40".
    #[arg(long, global = true)]
    pub windows: Option<String>,
    /// Worker threads; never changes results. Defaults to AAD_WORKERS or 1.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_regime(s: &str) -> std::result::Result<Regime, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_windows(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad window length {v:?}: {e}"))
        })
        .collect()
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long)]
        subjects: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Zero-signal corpus: EEG carries no stimulus response at all.
        #[arg(long)]
        null: bool,
    },
    /// Filter, resample and extract envelopes from a raw recording directory.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
    },
    /// Train every fold and write one checkpoint per fold.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Score folds; trains first unless `--models` points at `train` output.
    Eval {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// MESD per subject from an eval CSV.
    Mesd {
        #[arg(long)]
        results: PathBuf,
    },
    /// Leave-one-channel-out importance.
    Loco {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Merge eval, MESD and LOCO outputs into summary tables.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        results: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        mesd: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        loco: Vec<PathBuf>,
    },
}

/// Sets `path` inside a TOML table, creating intermediate tables.
fn set_path(root: &mut toml::Table, path: &[String], raw: &str) -> Result<()> {
    let (last, parents) = path
        .split_last()
        .ok_or_else(|| Error::Config("empty config key".into()))?;
    let mut table = root;
    for p in parents {
        let entry = table
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(Default::default()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("config key {p:?} is not a table")))?;
    }
    let parsed = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"));
    let value = match (parsed, table.get(last)) {
        (Some(v), _) => v,
        (None, Some(toml::Value::Array(_))) => toml::Value::Array(
            raw.split(',')
                .map(|item| {
                    let item = item.trim();
                    format!("v = {item}")
                        .parse::<toml::Table>()
                        .ok()
                        .and_then(|mut t| t.remove("v"))
                        .unwrap_or_else(|| toml::Value::String(item.into()))
                })
                .collect(),
        ),
        (None, _) => toml::Value::String(raw.into()),
    };
    table.insert(last.clone(), value);
    Ok(())
}

/// Defaults, then the file, then the environment, then flags.
pub fn resolve_config(common: &CommonArgs, env: impl IntoIterator<Item = (String, String)>) -> Result<RunConfig> {
    let defaults = toml::Table::try_from(RunConfig::default()).map_err(|e| Error::Config(e.to_string()))?;
    let mut table = defaults;
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("{}: {e}", path.display())))?;
        merge(&mut table, file);
    }
    let mut vars: Vec<(String, String)> = env
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX) && !ENV_RESERVED.contains(&k.as_str()))
        .collect();
    vars.sort();
    for (k, v) in vars {
        let path: Vec<String> = k[ENV_PREFIX.len()..]
            .to_ascii_lowercase()
            .split("__")
            .map(String::from)
            .collect();
        set_path(&mut table, &path, &v)?;
    }
    let mut cfg: RunConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(m) = common.method {
        cfg.method = m;
    }
    if let Some(m) = common.mode {
        cfg.mode = m;
    }
    if let Some(w) = &common.windows {
        cfg.windows = parse_windows(w).map_err(Error::Config)?;
    }
    Ok(cfg)
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    write_text(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Index written by `train` next to the fold checkpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelIndex {
    pub config: RunConfig,
    pub n_channels: usize,
    pub folds: Vec<FoldEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldEntry {
    pub subject: usize,
    pub plan: FoldPlan,
    /// One checkpoint, or one per window length for CCA.
    pub files: Vec<String>,
    pub log: Option<String>,
}

pub const MODEL_INDEX: &str = "models.json";

fn save_models(dir: &Path, cfg: &RunConfig, n_channels: usize, folds: &[TrainedFold]) -> Result<()> {
    ensure_dir(dir)?;
    let mut entries = Vec::with_capacity(folds.len());
    for f in folds {
        let stem = format!("fold_s{:02}_k{}", f.subject, f.plan.fold);
        let mut files = Vec::new();
        let mut log = None;
        match &f.model {
            FoldModel::Lsr(d) => {
                let name = format!("{stem}.ckpt");
                save_checkpoint(&dir.join(&name), &encode_ridge(d))?;
                files.push(name);
            }
            FoldModel::Cca { model, lda, .. } => {
                for (wi, l) in lda.iter().enumerate() {
                    let name = format!("{stem}_w{wi}.ckpt");
                    save_checkpoint(&dir.join(&name), &encode_cca(model, l))?;
                    files.push(name);
                }
            }
            FoldModel::Aadnet { model, log: epochs } => {
                let name = format!("{stem}.ckpt");
                let mut m = (**model).clone();
                save_checkpoint(&dir.join(&name), &state_dict(&mut m))?;
                files.push(name);
                if !epochs.is_empty() {
                    let l = format!("{stem}_log.csv");
                    write_log_csv(epochs, &dir.join(&l))?;
                    log = Some(l);
                }
            }
        }
        entries.push(FoldEntry {
            subject: f.subject,
            plan: f.plan.clone(),
            files,
            log,
        });
    }
    write_json(
        &dir.join(MODEL_INDEX),
        &ModelIndex {
            config: cfg.clone(),
            n_channels,
            folds: entries,
        },
    )
}

fn load_models(dir: &Path) -> Result<(ModelIndex, Vec<TrainedFold>)> {
    let index: ModelIndex = read_json(&dir.join(MODEL_INDEX))?;
    let folds = index
        .folds
        .iter()
        .map(|e| {
            let model = match index.config.method {
                Method::Lsr => FoldModel::Lsr(decode_ridge(&load_checkpoint(&dir.join(&e.files[0]))?)?),
                Method::Cca => {
                    let mut model = None;
                    let mut lda = Vec::new();
                    for f in &e.files {
                        let (m, l) = decode_cca(&load_checkpoint(&dir.join(f))?)?;
                        model.get_or_insert(m);
                        lda.push(l);
                    }
                    let model = model.ok_or_else(|| Error::Config("CCA fold without checkpoints".into()))?;
                    let j = lda.first().map_or(1, |l| l.dim());
                    FoldModel::Cca { model, j, lda }
                }
                Method::Aadnet => {
                    let mut model = Aadnet::new(index.config.train.model_spec(index.n_channels), 0)?;
                    load_state_dict(&mut model, &load_checkpoint(&dir.join(&e.files[0]))?)?;
                    FoldModel::Aadnet {
                        model: Box::new(model),
                        log: Vec::new(),
                    }
                }
            };
            Ok(TrainedFold {
                subject: e.subject,
                plan: e.plan.clone(),
                model,
            })
        })
        .collect::<Result<_>>()?;
    Ok((index, folds))
}

/// Leave-one-channel-out row tagged with the model it belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocoRecord {
    pub method: Method,
    pub mode: Regime,
    pub channel_label: String,
    pub accuracy_drop: f64,
}

fn load_data(cfg: &RunConfig, flag: &Option<PathBuf>) -> Result<Dataset> {
    match flag {
        Some(p) => load_dataset(p),
        None => load_dataset(cfg.data_path()?),
    }
}

fn run_command(cmd: &Command, cfg: &RunConfig, workers: usize) -> Result<()> {
    let out = &cfg.out;
    ensure_dir(out)?;
    match cmd {
        Command::Synth { subjects, trials, null } => {
            let mut s = cfg.synth_config();
            if let Some(n) = subjects {
                s.n_subjects = *n;
            }
            if let Some(n) = trials {
                s.trials_per_subject = *n;
            }
            if *null {
                s.informative_channels = Some(Vec::new());
            }
            let ds = synth_generate(&s)?;
            save_dataset(&ds, out)?;
            write_trial_metadata_csv(&ds, &out.join("trials.csv"))
        }
        Command::Preprocess { input } => {
            let ds = preprocess_raw(input, cfg.envelope)?;
            save_dataset(&ds, out)?;
            write_trial_metadata_csv(&ds, &out.join("trials.csv"))
        }
        Command::Train { data } => {
            let ds = load_data(cfg, data)?;
            let folds = train_folds(&ds, cfg.method, cfg.mode, &cfg.protocol(), workers)?;
            save_models(&out.join("models"), cfg, ds.n_channels(), &folds)
        }
        Command::Eval { data, models } => {
            let ds = load_data(cfg, data)?;
            let rows = match models {
                Some(dir) => {
                    let (index, folds) = load_models(dir)?;
                    if index.config.method == Method::Cca && index.config.windows != cfg.windows {
                        return Err(Error::Config(format!(
                            "CCA checkpoints hold one classifier per window of {:?}; got windows {:?}",
                            index.config.windows, cfg.windows
                        )));
                    }
                    let mut p = cfg.protocol();
                    p.windows_s = cfg.windows.clone();
                    score_folds(&ds, &folds, index.config.method, index.config.mode, &p, workers)?
                }
                None => run_protocol(&ds, cfg.method, cfg.mode, &cfg.protocol(), workers)?,
            };
            write_csv(&rows, &out.join("eval.csv"))?;
            write_csv(&subject_scores(&rows), &out.join("subjects.csv"))
        }
        Command::Mesd { results } => {
            let rows: Vec<EvalRow> = read_csv(results)?;
            write_csv(&mesd_rows(&subject_scores(&rows), &cfg.mesd)?, &out.join("mesd.csv"))
        }
        Command::Loco { data } => {
            let ds = load_data(cfg, data)?;
            let protocol = cfg.protocol();
            let score = |d: &Dataset| -> Result<f64> {
                let rows = run_protocol(d, cfg.method, cfg.mode, &protocol, workers)?;
                pooled_accuracy(&rows).ok_or_else(|| Error::Degenerate("no test windows to score".into()))
            };
            let rows: Vec<LocoRecord> = loco_all(&ds, score)?
                .into_iter()
                .map(|r: LocoRow| LocoRecord {
                    method: cfg.method,
                    mode: cfg.mode,
                    channel_label: r.channel_label,
                    accuracy_drop: r.accuracy_drop,
                })
                .collect();
            write_csv(&rows, &out.join("loco.csv"))
        }
        Command::Report { results, mesd, loco } => {
            let mut rows: Vec<EvalRow> = Vec::new();
            for p in results {
                rows.extend(read_csv::<EvalRow>(p)?);
            }
            let scores = subject_scores(&rows);
            let mut m: Vec<MesdRow> = Vec::new();
            for p in mesd {
                m.extend(read_csv::<MesdRow>(p)?);
            }
            let mut l: Vec<(Method, Vec<LocoRow>)> = Vec::new();
            for p in loco {
                for r in read_csv::<LocoRecord>(p)? {
                    let row = LocoRow {
                        channel_label: r.channel_label,
                        accuracy_drop: r.accuracy_drop,
                    };
                    match l.iter_mut().find(|x| x.0 == r.method) {
                        Some(x) => x.1.push(row),
                        None => l.push((r.method, vec![row])),
                    }
                }
            }
            write_text(&out.join("summary.csv"), &summary_table(&scores, &m, &l))?;
            write_text(&out.join("subjects_by_window.csv"), &subject_table(&scores))
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Synth { .. } => "synth",
        Command::Preprocess { .. } => "preprocess",
        Command::Train { .. } => "train",
        Command::Eval { .. } => "eval",
        Command::Mesd { .. } => "mesd",
        Command::Loco { .. } => "loco",
        Command::Report { .. } => "report",
    }
}

/// Parses `args`, resolves the configuration against `env`, logs it to
/// stderr and to `<out>/config.toml`, and runs the subcommand.
pub fn run<I, T>(args: I, env: impl IntoIterator<Item = (String, String)>) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    run_cli(&cli, env)
}

pub fn run_cli(cli: &Cli, env: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let env: Vec<(String, String)> = env.into_iter().collect();
    let cfg = resolve_config(&cli.common, env.iter().cloned())?;
    cfg.validate()?;
    let workers = match cli.common.workers {
        Some(w) => w,
        None => match env.iter().find(|(k, _)| k == "AAD_WORKERS") {
            Some((_, v)) => v
                .parse()
                .map_err(|_| Error::Config(format!("AAD_WORKERS={v:?} is not a count")))?,
            None => 1,
        },
    };
    if workers == 0 {
        return Err(Error::Config("--workers must be at least 1".into()));
    }
    let text = toml::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    eprintln!(
        "aad {} seed={} workers={workers} out={}\n{text}",
        command_name(&cli.command),
        cfg.seed,
        cfg.out.display()
    );
    ensure_dir(&cfg.out)?;
    write_text(&cfg.out.join("config.toml"), &text)?;
    run_command(&cli.command, &cfg, workers)
}

/// Process entry point; returns the exit code.
pub fn main_with_env() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version go to stdout with status 0, real errors to stderr.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_cli(&cli, std::env::vars()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
