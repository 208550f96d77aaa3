//! Experiment configuration files.
//!
//! The format is line oriented: `[section]` headers followed by
//! `key = value` entries, with `#` starting a comment line.
//!
//! ```text
//! [experiment]
//! output = runs/main
//! seeds = 0 1 2
//!
//! [synth]
//! atypical.mean = -0.5 0
//! noise_rate = 0.1
//!
//! [train]
//! iterations = 5000
//!
//! [method.PU-RM]
//! strategy = PU-RM
//! tau = 0.3
//! ```
//!
//! `[synth]` and `[dataset]` are mutually exclusive; with neither, the
//! default synthetic dataset is used. Every key is optional except each
//! method's `strategy`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{Cluster, SynthConfig};
use crate::error::{Error, Result};
use crate::losses::{GceQ, Tau};
use crate::model::TrainConfig;
use crate::objective::{NoiseLoss, ObjectiveConfig, Strategy};

/// Configuration of the acceptance experiment, shipped with the crate.
pub const DEFAULT_EXPERIMENT: &str = include_str!("../../data/experiment.cfg");

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// Train on a draw from `config`; validate on a noise-free draw seeded
    /// with `val_seed`.
    Synth {
        config: SynthConfig,
        val_seed: u64,
    },
    Files {
        train: PathBuf,
        val: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    pub objective: ObjectiveConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub methods: Vec<Method>,
    /// Template for every run; the seed is replaced per run.
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::Synth {
                config: SynthConfig::default(),
                val_seed: 1,
            },
            methods: Vec::new(),
            train: TrainConfig::default(),
            seeds: vec![0, 1, 2],
            output: PathBuf::from("riskmod-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_named(text, "<config>", Path::new("."))
    }

    /// Loads a config file. Relative dataset paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse_named(&text, &path.display().to_string(), base)
    }

    fn parse_named(text: &str, name: &str, base: &Path) -> Result<Self> {
        let sections = split_sections(text, name)?;
        let mut cfg = ExperimentConfig::default();
        let mut synth: Option<(SynthConfig, u64)> = None;
        let mut files: (Option<PathBuf>, Option<PathBuf>) = (None, None);
        let mut saw_dataset = None;

        for sec in &sections {
            let ctx = Ctx {
                source: name,
                section: &sec.name,
            };
            match sec.name.as_str() {
                "experiment" => {
                    for e in &sec.entries {
                        match e.key.as_str() {
                            "output" => cfg.output = PathBuf::from(&e.value),
                            "seeds" => cfg.seeds = ctx.list(e)?,
                            _ => return Err(ctx.unknown(e)),
                        }
                    }
                }
                "synth" | "dataset" => {
                    if let Some(prev) = saw_dataset.replace(sec.name.as_str()) {
                        return Err(Error::parse(
                            name,
                            sec.line,
                            format!("[{}] conflicts with [{prev}]; give one dataset source", sec.name),
                        ));
                    }
                    if sec.name == "synth" {
                        synth = Some(parse_synth(&ctx, sec)?);
                    } else {
                        for e in &sec.entries {
                            let path = base.join(&e.value);
                            match e.key.as_str() {
                                "train" => files.0 = Some(path),
                                "val" => files.1 = Some(path),
                                _ => return Err(ctx.unknown(e)),
                            }
                        }
                        if files.0.is_none() || files.1.is_none() {
                            return Err(Error::parse(name, sec.line, "[dataset] needs both `train` and `val`"));
                        }
                    }
                }
                "train" => parse_train(&ctx, sec, &mut cfg.train)?,
                other => match other.strip_prefix("method.") {
                    Some(method) => cfg.methods.push(parse_method(&ctx, sec, method)?),
                    None => return Err(Error::parse(name, sec.line, format!("unknown section [{other}]"))),
                },
            }
        }

        if let Some((config, val_seed)) = synth {
            cfg.dataset = DatasetSource::Synth { config, val_seed };
        } else if let (Some(train), Some(val)) = files {
            cfg.dataset = DatasetSource::Files { train, val };
        }
        cfg.validate().map_err(|e| e.context(name.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one [method.NAME] section is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("`experiment.seeds` must list at least one seed".into()));
        }
        let mut names = BTreeSet::new();
        for m in &self.methods {
            check_method_name(&m.name)?;
            if !names.insert(&m.name) {
                return Err(Error::Config(format!("method name `{}` is used twice", m.name)));
            }
            m.objective.validate()?;
        }
        let unique: BTreeSet<_> = self.seeds.iter().collect();
        if unique.len() != self.seeds.len() {
            return Err(Error::Config(format!("seeds {:?} contain duplicates", self.seeds)));
        }
        if let DatasetSource::Synth { config, .. } = &self.dataset {
            config.validate()?;
        }
        TrainConfig {
            objective: self.methods[0].objective,
            ..self.train.clone()
        }
        .validate()
    }

    /// The training configuration of one (method, seed) run.
    pub fn run_config(&self, method: &Method, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            objective: method.objective,
            ..self.train.clone()
        }
    }
}

/// Method names double as directory names and CSV fields.
pub fn check_method_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name != "."
        && name != ".."
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_.@+=()".contains(c));
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "method name `{name}` must be non-empty and use only letters, digits and -_.@+=()"
        )))
    }
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn split_sections(text: &str, name: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let header = header.trim().to_string();
            if !seen.insert(header.clone()) {
                return Err(Error::parse(name, line_no, format!("section [{header}] appears twice")));
            }
            sections.push(Section {
                name: header,
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let sec = sections
            .last_mut()
            .ok_or_else(|| Error::parse(name, line_no, "entry before any section header"))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(name, line_no, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if sec.entries.iter().any(|e| e.key == key) {
            return Err(Error::parse(name, line_no, format!("{}.{key} is set twice", sec.name)));
        }
        sec.entries.push(Entry {
            key,
            value,
            line: line_no,
        });
    }
    Ok(sections)
}

struct Ctx<'a> {
    source: &'a str,
    section: &'a str,
}

impl Ctx<'_> {
    fn err(&self, e: &Entry, message: impl std::fmt::Display) -> Error {
        Error::parse(self.source, e.line, format!("{}.{}: {message}", self.section, e.key))
    }

    fn unknown(&self, e: &Entry) -> Error {
        self.err(e, "unknown key")
    }

    fn value<T: FromStr>(&self, e: &Entry) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        e.value
            .parse()
            .map_err(|err| self.err(e, format!("invalid value `{}`: {err}", e.value)))
    }

    fn list<T: FromStr>(&self, e: &Entry) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        e.value
            .split_whitespace()
            .map(|v| {
                v.parse()
                    .map_err(|err| self.err(e, format!("invalid list item `{v}`: {err}")))
            })
            .collect()
    }
}

fn parse_synth(ctx: &Ctx, sec: &Section) -> Result<(SynthConfig, u64)> {
    let mut cfg = SynthConfig::default();
    let mut val_seed = 1;
    for e in &sec.entries {
        match e.key.as_str() {
            "noise_rate" => cfg.noise_rate = ctx.value(e)?,
            "seed" => cfg.seed = ctx.value(e)?,
            "val_seed" => val_seed = ctx.value(e)?,
            key => {
                let (cluster, field) = key.split_once('.').ok_or_else(|| ctx.unknown(e))?;
                let c: &mut Cluster = match cluster {
                    "negative" => &mut cfg.negative,
                    "typical" => &mut cfg.typical,
                    "atypical" => &mut cfg.atypical,
                    "uncertain" => &mut cfg.uncertain,
                    _ => return Err(ctx.unknown(e)),
                };
                match field {
                    "count" => c.count = ctx.value(e)?,
                    "std" => c.std = ctx.value(e)?,
                    "mean" => {
                        let v: Vec<f64> = ctx.list(e)?;
                        c.mean = v.try_into().map_err(|_| ctx.err(e, "expected two coordinates"))?;
                    }
                    _ => return Err(ctx.unknown(e)),
                }
            }
        }
    }
    cfg.validate()
        .map_err(|err| Error::parse(ctx.source, sec.line, format!("[synth]: {err}")))?;
    Ok((cfg, val_seed))
}

fn parse_train(ctx: &Ctx, sec: &Section, t: &mut TrainConfig) -> Result<()> {
    for e in &sec.entries {
        match e.key.as_str() {
            "layers" => t.layers = ctx.list(e)?,
            "iterations" => t.iterations = ctx.value(e)?,
            "batch_size" => t.batch_size = ctx.value(e)?,
            "checkpoint_every" => t.checkpoint_every = ctx.value(e)?,
            "lr" => t.adam.lr = ctx.value(e)?,
            "beta1" => t.adam.beta1 = ctx.value(e)?,
            "beta2" => t.adam.beta2 = ctx.value(e)?,
            "eps" => t.adam.eps = ctx.value(e)?,
            "weight_decay" => t.adam.weight_decay = ctx.value(e)?,
            _ => return Err(ctx.unknown(e)),
        }
    }
    Ok(())
}

fn parse_method(ctx: &Ctx, sec: &Section, name: &str) -> Result<Method> {
    let strategy = sec
        .entries
        .iter()
        .find(|e| e.key == "strategy")
        .ok_or_else(|| Error::parse(ctx.source, sec.line, format!("[{}] needs a `strategy`", sec.name)))?;
    let mut objective = ObjectiveConfig::new(ctx.value::<Strategy>(strategy)?);
    for e in &sec.entries {
        match e.key.as_str() {
            "strategy" => {}
            "tau" => objective.tau = Tau::new(ctx.value(e)?).map_err(|err| ctx.err(e, err))?,
            "q" => objective.q = GceQ::new(ctx.value(e)?).map_err(|err| ctx.err(e, err))?,
            "noise_loss" => objective.noise_loss = ctx.value::<NoiseLoss>(e)?,
            "lambda" => objective.lambda = ctx.value(e)?,
            _ => return Err(ctx.unknown(e)),
        }
    }
    check_method_name(name).map_err(|err| Error::parse(ctx.source, sec.line, err.to_string()))?;
    Ok(Method {
        name: name.to_string(),
        objective,
    })
}
