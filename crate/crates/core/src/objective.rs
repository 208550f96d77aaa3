//! Uncertainty strategies and the composed training objective.
//!
//! A [`Strategy`] decides, for every coarse label, which binary target the
//! sample is trained towards and which per-sample loss is used:
//!
//! | strategy  | negative | positive | uncertain |
//! |-----------|----------|----------|-----------|
//! | U-Ignore  | 0, CE    | 1, CE    | dropped   |
//! | U-Zeros   | 0, CE    | 1, CE    | 0, CE     |
//! | U-Ones    | 0, CE    | 1, CE    | 1, CE     |
//! | U-RM      | 0, CE    | 1, CE    | 1, noise  |
//! | P-RM      | 0, CE    | 1, noise | dropped   |
//! | PU-RM     | 0, CE    | 1, noise | 1, noise  |
//! | U-Uniform | 0, noise | 1, noise | uniform, UC |
//!
//! "noise" is the configured noise-robust loss (PCE by default, or GCE).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{CoarseLabel, Sample};
use crate::error::{Error, Result};
use crate::losses::{self, GceQ, Label, Logits, LossGrad, LossKind, LossParams, Probabilities, Tau};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    UIgnore,
    UZeros,
    UOnes,
    URm,
    PRm,
    PuRm,
    UUniform,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::UIgnore,
        Strategy::UZeros,
        Strategy::UOnes,
        Strategy::URm,
        Strategy::PRm,
        Strategy::PuRm,
        Strategy::UUniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::UIgnore => "U-Ignore",
            Strategy::UZeros => "U-Zeros",
            Strategy::UOnes => "U-Ones",
            Strategy::URm => "U-RM",
            Strategy::PRm => "P-RM",
            Strategy::PuRm => "PU-RM",
            Strategy::UUniform => "U-Uniform",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Strategy::ALL
            .into_iter()
            .find(|st| {
                st.as_str()
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric())
                    .map(|c| c.to_ascii_lowercase())
                    .eq(key.chars())
            })
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

/// The noise-robust loss used wherever a strategy risk-modulates a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum NoiseLoss {
    #[default]
    Pce,
    Gce,
}

impl NoiseLoss {
    pub fn kind(self) -> LossKind {
        match self {
            NoiseLoss::Pce => LossKind::Pce,
            NoiseLoss::Gce => LossKind::Gce,
        }
    }
}

impl FromStr for NoiseLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<LossKind>()? {
            LossKind::Pce => Ok(NoiseLoss::Pce),
            LossKind::Gce => Ok(NoiseLoss::Gce),
            other => Err(Error::Config(format!(
                "`{other}` is not a noise-robust loss (expected PCE or GCE)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub strategy: Strategy,
    pub tau: Tau,
    pub q: GceQ,
    pub noise_loss: NoiseLoss,
    /// Weight on the noise-robust terms; only read in U-Uniform mode.
    pub lambda: f64,
}

impl ObjectiveConfig {
    pub fn new(strategy: Strategy) -> Self {
        ObjectiveConfig {
            strategy,
            tau: Tau::default(),
            q: GceQ::default(),
            noise_loss: NoiseLoss::Pce,
            lambda: 1.0,
        }
    }

    pub fn with_tau(mut self, tau: Tau) -> Self {
        self.tau = tau;
        self
    }

    pub fn loss_params(&self) -> LossParams {
        LossParams {
            tau: self.tau,
            q: self.q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!(
                "lambda must be a non-negative number, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Canonical one-line description, used in config digests.
    pub fn describe(&self) -> String {
        format!(
            "strategy={} tau={:?} q={:?} noise_loss={} lambda={:?}",
            self.strategy,
            self.tau.get(),
            self.q.get(),
            self.noise_loss.kind(),
            self.lambda
        )
    }
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig::new(Strategy::PuRm)
    }
}

/// Training target after an uncertainty strategy has been applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    Class(Label),
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedSample {
    pub features: Vec<f64>,
    pub target: Target,
    pub loss: LossKind,
}

impl TaggedSample {
    /// The class whose probability the loss reads. Uniform targets report
    /// `Positive`; the uniformity loss does not depend on it.
    pub fn label(&self) -> Label {
        match self.target {
            Target::Class(label) => label,
            Target::Uniform => Label::Positive,
        }
    }
}

fn tag(features: &[f64], target: Target, loss: LossKind) -> Option<TaggedSample> {
    Some(TaggedSample {
        features: features.to_vec(),
        target,
        loss,
    })
}

/// Maps coarse labels to training targets and loss kinds under `cfg.strategy`.
pub fn apply_strategy(samples: &[Sample], cfg: &ObjectiveConfig) -> Result<Vec<TaggedSample>> {
    use Strategy::*;
    let noise = cfg.noise_loss.kind();
    let neg = Target::Class(Label::Negative);
    let posi = Target::Class(Label::Positive);

    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        let x = &s.features;
        let tagged = match (s.coarse, cfg.strategy) {
            (CoarseLabel::Blank, _) => {
                return Err(Error::InvalidDataset(format!(
                    "sample `{}` has a blank label; blank samples must be filtered before training",
                    s.id
                )))
            }
            (CoarseLabel::Negative, UUniform) => tag(x, neg, noise),
            (CoarseLabel::Negative, _) => tag(x, neg, LossKind::Ce),
            (CoarseLabel::Positive, PRm | PuRm | UUniform) => tag(x, posi, noise),
            (CoarseLabel::Positive, _) => tag(x, posi, LossKind::Ce),
            (CoarseLabel::Uncertain, UIgnore | PRm) => None,
            (CoarseLabel::Uncertain, UZeros) => tag(x, neg, LossKind::Ce),
            (CoarseLabel::Uncertain, UOnes) => tag(x, posi, LossKind::Ce),
            (CoarseLabel::Uncertain, URm | PuRm) => tag(x, posi, noise),
            (CoarseLabel::Uncertain, UUniform) => tag(x, Target::Uniform, LossKind::Uc),
        };
        out.extend(tagged);
    }
    Ok(out)
}

fn term_weight(t: &TaggedSample, cfg: &ObjectiveConfig) -> f64 {
    if cfg.strategy == Strategy::UUniform && t.loss != LossKind::Uc {
        cfg.lambda
    } else {
        1.0
    }
}

pub fn sample_loss(t: &TaggedSample, p: Probabilities, cfg: &ObjectiveConfig) -> f64 {
    term_weight(t, cfg) * losses::loss_value(t.loss, p, t.label(), &cfg.loss_params())
}

/// Gradient of [`sample_loss`] with respect to the logits.
pub fn sample_grad(t: &TaggedSample, z: Logits, cfg: &ObjectiveConfig) -> Result<LossGrad> {
    let g = losses::loss_grad(t.loss, z, t.label(), &cfg.loss_params())?;
    Ok(g.scaled(term_weight(t, cfg)))
}

/// Mean of the per-sample losses.
pub fn batch_loss(batch: &[TaggedSample], probs: &[Probabilities], cfg: &ObjectiveConfig) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("batch is empty".into()));
    }
    if batch.len() != probs.len() {
        return Err(Error::InvalidInput(format!(
            "batch has {} samples but {} predictions",
            batch.len(),
            probs.len()
        )));
    }
    let total: f64 = batch.iter().zip(probs).map(|(t, p)| sample_loss(t, *p, cfg)).sum();
    Ok(total / batch.len() as f64)
}
