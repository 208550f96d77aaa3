use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::data::{CoarseLabel, Sample};
use crate::error::{Error, Result};
use crate::labeler::{self, Lexicon, Subcategory};
use crate::metrics::{self, Group, ScoredSample};
use crate::model::checkpoint::{Checkpoint, RngState, SamplerState};
use crate::model::{AdamConfig, AdamState, Mlp};
use crate::objective::{apply_strategy, ObjectiveConfig, TaggedSample};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Widths from the input dimension to the 2 output logits.
    pub layers: Vec<usize>,
    pub iterations: u64,
    pub batch_size: usize,
    pub checkpoint_every: u64,
    pub seed: u64,
    pub objective: ObjectiveConfig,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layers: vec![2, 16, 16, 2],
            iterations: 5_000,
            batch_size: 32,
            checkpoint_every: 1_000,
            seed: 0,
            objective: ObjectiveConfig::default(),
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        Mlp::zeros(&self.layers)?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.checkpoint_every == 0 || self.iterations == 0 || !self.iterations.is_multiple_of(self.checkpoint_every)
        {
            return Err(Error::Config(format!(
                "checkpoint interval {} must be positive and divide the iteration count {}",
                self.checkpoint_every, self.iterations
            )));
        }
        self.objective.validate()?;
        self.adam.validate()
    }

    /// Canonical text form hashed into [`TrainConfig::digest`].
    pub fn describe(&self) -> String {
        let a = &self.adam;
        format!(
            "layers={:?} iterations={} batch_size={} checkpoint_every={} seed={} {} lr={:?} beta1={:?} beta2={:?} eps={:?} weight_decay={:?}",
            self.layers,
            self.iterations,
            self.batch_size,
            self.checkpoint_every,
            self.seed,
            self.objective.describe(),
            a.lr,
            a.beta1,
            a.beta2,
            a.eps,
            a.weight_decay
        )
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.describe().as_bytes()).into()
    }
}

/// The stepping state of one training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    data: Vec<TaggedSample>,
    params: Mlp,
    adam: AdamState,
    rng: ChaCha8Rng,
    order: Vec<u32>,
    cursor: usize,
    epoch: u64,
    iteration: u64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, train: &[Sample]) -> Result<Self> {
        cfg.validate()?;
        let data = apply_strategy(train, &cfg.objective)?;
        if data.is_empty() {
            return Err(Error::InvalidDataset(
                "no training samples remain after applying the strategy".into(),
            ));
        }
        let params = Mlp::init(&cfg.layers, cfg.seed)?;
        let adam = AdamState::new(&params, cfg.adam);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let mut order: Vec<u32> = (0..data.len() as u32).collect();
        order.shuffle(&mut rng);
        Ok(Trainer {
            cfg,
            data,
            params,
            adam,
            rng,
            order,
            cursor: 0,
            epoch: 0,
            iteration: 0,
        })
    }

    /// Rebuilds a trainer from a checkpoint taken under the same configuration
    /// and training set.
    pub fn resume(cfg: TrainConfig, train: &[Sample], ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.config_digest != cfg.digest() {
            return Err(Error::Checkpoint(
                "checkpoint was written under a different training configuration".into(),
            ));
        }
        let mut t = Trainer::new(cfg, train)?;
        if ckpt.sampler.order.len() != t.data.len() || !t.params.same_shape(&ckpt.params) {
            return Err(Error::Checkpoint(
                "checkpoint does not match the training set or model shape".into(),
            ));
        }
        t.params = ckpt.params.clone();
        t.adam = ckpt.adam.clone();
        t.rng = ckpt.sampler.rng.restore();
        t.order = ckpt.sampler.order.clone();
        t.cursor = ckpt.sampler.cursor as usize;
        t.epoch = ckpt.sampler.epoch;
        t.iteration = ckpt.iteration;
        Ok(t)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Mlp {
        &self.params
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn tagged(&self) -> &[TaggedSample] {
        &self.data
    }

    fn next_batch(&mut self) -> Vec<TaggedSample> {
        let n = self.data.len();
        let bs = self.cfg.batch_size.min(n);
        if self.cursor + bs > n {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
            self.epoch += 1;
        }
        let batch = self.order[self.cursor..self.cursor + bs]
            .iter()
            .map(|&i| self.data[i as usize].clone())
            .collect();
        self.cursor += bs;
        batch
    }

    /// One Adam step on the next minibatch; returns the minibatch loss.
    pub fn step(&mut self) -> Result<f64> {
        let batch = self.next_batch();
        let (loss, grads) = self.params.backward(&batch, &self.cfg.objective)?;
        self.adam.step(&mut self.params, &grads)?;
        self.iteration += 1;
        Ok(loss)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            iteration: self.iteration,
            params: self.params.clone(),
            adam: self.adam.clone(),
            sampler: SamplerState {
                rng: RngState::capture(&self.rng),
                epoch: self.epoch,
                cursor: self.cursor as u64,
                order: self.order.clone(),
            },
            config_digest: self.cfg.digest(),
        }
    }
}

/// Positive validation samples with a known subcategory: the stored fine
/// label, or else the labeler's verdict on the attached report.
pub fn validation_positives(val: &[Sample]) -> Vec<(&[f64], Subcategory)> {
    let mut lexicon: Option<Lexicon> = None;
    val.iter()
        .filter(|s| s.coarse == CoarseLabel::Positive)
        .filter_map(|s| {
            let sub = s.fine.or_else(|| {
                let text = s.report_text.as_deref()?;
                let lex = lexicon.get_or_insert_with(Lexicon::default);
                Some(labeler::label_report(text, lex).subcategory)
            })?;
            Some((s.features.as_slice(), sub))
        })
        .collect()
}

pub fn evaluate_auc_fg(params: &Mlp, positives: &[(&[f64], Subcategory)]) -> Result<f64> {
    let scored = positives
        .iter()
        .map(|(x, sub)| Ok((params.forward(x)?.1.p_pos(), *sub)))
        .collect::<Result<Vec<_>>>()?;
    metrics::auc_fg(&scored)
}

/// Standard AUC of negatives against positives; uncertain samples are skipped.
pub fn evaluate_auc(params: &Mlp, val: &[Sample]) -> Result<f64> {
    let scored = val
        .iter()
        .filter_map(|s| {
            let group = match s.coarse {
                CoarseLabel::Negative => Group::Zero,
                CoarseLabel::Positive => Group::One,
                _ => return None,
            };
            Some(
                params
                    .forward(&s.features)
                    .map(|(_, p)| ScoredSample::new(p.p_pos(), group)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    metrics::auc(&scored)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationPoint {
    pub iteration: u64,
    pub auc_fg: f64,
    /// Mean minibatch loss since the previous checkpoint.
    pub train_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoints: Vec<Checkpoint>,
    /// Index into `checkpoints` of the highest validation AUC-FG (earliest on ties).
    pub best: usize,
    pub history: Vec<ValidationPoint>,
}

impl TrainOutcome {
    pub fn best_checkpoint(&self) -> &Checkpoint {
        &self.checkpoints[self.best]
    }

    pub fn best_point(&self) -> &ValidationPoint {
        &self.history[self.best]
    }
}

/// Trains for `cfg.iterations`, validating every `cfg.checkpoint_every`.
pub fn train(cfg: &TrainConfig, train: &[Sample], val: &[Sample]) -> Result<TrainOutcome> {
    let positives = validation_positives(val);
    let atypical = positives.iter().filter(|p| p.1 == Subcategory::Atypical).count();
    if atypical == 0 || atypical == positives.len() {
        return Err(Error::UndefinedMetric(format!(
            "validation set needs atypical and typical positives (atypical: {atypical}, typical: {})",
            positives.len() - atypical
        )));
    }
    let trainer = Trainer::new(cfg.clone(), train)?;
    continue_training(trainer, &positives)
}

/// Runs `trainer` to the end of its configured budget, checkpointing on the
/// configured cadence.
pub fn continue_training(mut trainer: Trainer, positives: &[(&[f64], Subcategory)]) -> Result<TrainOutcome> {
    let every = trainer.cfg.checkpoint_every;
    let total = trainer.cfg.iterations;
    let mut checkpoints = Vec::new();
    let mut history = Vec::new();
    let mut loss_sum = 0.0;
    let mut loss_count = 0u64;
    while trainer.iteration < total {
        loss_sum += trainer.step()?;
        loss_count += 1;
        if trainer.iteration.is_multiple_of(every) {
            let auc_fg = evaluate_auc_fg(&trainer.params, positives)?;
            history.push(ValidationPoint {
                iteration: trainer.iteration,
                auc_fg,
                train_loss: loss_sum / loss_count as f64,
            });
            checkpoints.push(trainer.checkpoint());
            loss_sum = 0.0;
            loss_count = 0;
        }
    }
    let mut best = 0;
    for (i, p) in history.iter().enumerate() {
        if p.auc_fg > history[best].auc_fg {
            best = i;
        }
    }
    Ok(TrainOutcome {
        checkpoints,
        best,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, SynthConfig};
    use crate::objective::Strategy;

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            layers: vec![2, 4, 2],
            iterations: 200,
            checkpoint_every: 200,
            batch_size: 8,
            ..TrainConfig::default()
        }
    }

    fn small_data(seed: u64) -> Vec<Sample> {
        let mut synth = SynthConfig {
            seed,
            ..SynthConfig::default()
        };
        for c in [
            &mut synth.negative,
            &mut synth.typical,
            &mut synth.atypical,
            &mut synth.uncertain,
        ] {
            c.count = 20;
        }
        generate(&synth).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            checkpoint_every: 300,
            ..small_cfg()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = TrainConfig {
            layers: vec![2, 3],
            ..small_cfg()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn single_checkpoint_is_best() {
        let out = train(&small_cfg(), &small_data(1), &small_data(2)).unwrap();
        assert_eq!(out.checkpoints.len(), 1);
        assert_eq!(out.best, 0);
        assert_eq!(out.best_checkpoint().iteration, 200);
    }

    #[test]
    fn five_checkpoints_per_run() {
        let cfg = TrainConfig {
            iterations: 500,
            checkpoint_every: 100,
            ..small_cfg()
        };
        let out = train(&cfg, &small_data(1), &small_data(2)).unwrap();
        let iters: Vec<u64> = out.checkpoints.iter().map(|c| c.iteration).collect();
        assert_eq!(iters, [100, 200, 300, 400, 500]);
        let best = out.history[out.best].auc_fg;
        assert!(out.history.iter().all(|p| p.auc_fg <= best));
        assert!(out.history[..out.best].iter().all(|p| p.auc_fg < best));
    }

    #[test]
    fn validation_needs_both_subcategories() {
        let val: Vec<Sample> = small_data(2)
            .into_iter()
            .filter(|s| s.fine != Some(Subcategory::Atypical))
            .collect();
        let err = train(&small_cfg(), &small_data(1), &val).unwrap_err();
        assert!(matches!(err, Error::UndefinedMetric(_)));
    }

    #[test]
    fn report_text_backs_missing_fine_label() {
        let mut val = small_data(2);
        for s in &mut val {
            s.fine = None;
        }
        let positives = validation_positives(&val);
        assert_eq!(positives.len(), 40);
        assert_eq!(positives.iter().filter(|p| p.1 == Subcategory::Atypical).count(), 20);
    }

    #[test]
    fn resume_rejects_other_config() {
        let data = small_data(1);
        let t = Trainer::new(small_cfg(), &data).unwrap();
        let ckpt = t.checkpoint();
        let other = TrainConfig {
            objective: ObjectiveConfig::new(Strategy::UOnes),
            ..small_cfg()
        };
        assert!(matches!(
            Trainer::resume(other, &data, &ckpt),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn empty_after_strategy_is_an_error() {
        let data: Vec<Sample> = small_data(1)
            .into_iter()
            .filter(|s| s.coarse == CoarseLabel::Uncertain)
            .collect();
        let cfg = TrainConfig {
            objective: ObjectiveConfig::new(Strategy::UIgnore),
            ..small_cfg()
        };
        assert!(matches!(Trainer::new(cfg, &data), Err(Error::InvalidDataset(_))));
    }
}
