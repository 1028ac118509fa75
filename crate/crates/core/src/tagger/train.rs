use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{Featurizer, Source};
use super::model::{batch_loss_and_grads, Batch, TaggerModel};
use super::nadam::Nadam;
use crate::corpus::{Corpus, Sentence, TagSet};
use crate::error::{Error, Result};
use crate::eval::{score, Scores};
use crate::noise::{ConfusionModel, ModelExport};

pub const CHECKPOINT_VERSION: u32 = 1;

/// How noisy data enters training.
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    /// Clean data only.
    Base,
    /// Noisy labels treated as if they were clean.
    BaseNoise,
    /// Noisy labels predicted through a confusion model.
    NoiseLayer(ConfusionModel),
}

impl Strategy {
    fn uses_noisy(&self) -> bool {
        !matches!(self, Strategy::Base)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    /// Upper bound on epochs; early stopping usually ends training sooner.
    pub epochs: usize,
    pub seed: u64,
    /// Clean batches per cycle.
    pub mix_clean: usize,
    /// Noisy batches per cycle.
    pub mix_noisy: usize,
    /// Epochs without a dev F1 improvement before stopping.
    pub patience: usize,
    pub hidden: usize,
    /// Keep confusion logits at their initial values.
    pub freeze_noise: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 2e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 30,
            seed: 0,
            mix_clean: 1,
            mix_noisy: 1,
            patience: 5,
            hidden: 128,
            freeze_noise: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.learning_rate, self.epsilon];
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config("learning rate and epsilon must be positive".into()));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{} must lie in [0, 1), got {}", name, b)));
            }
        }
        if self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::Config("batch size and hidden size must be positive".into()));
        }
        if self.mix_clean == 0 || self.mix_noisy == 0 {
            return Err(Error::Config("mixing ratio terms must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub clean_batches: usize,
    pub noisy_batches: usize,
    pub dev: Scores,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev F1.
    pub model: TaggerModel,
    pub noise: Option<ConfusionModel>,
    pub log: Vec<EpochRecord>,
    /// Loss of every optimizer step, in order.
    pub batch_losses: Vec<f64>,
    pub best_epoch: Option<usize>,
    pub best_dev_f1: f64,
    /// Optimizer state after the last step.
    pub optimizer: Nadam,
    pub epochs_run: usize,
}

/// Token positions of one corpus, drawn in reshuffled passes.
struct Stream<'c> {
    sentences: &'c [Sentence],
    items: Vec<(usize, usize)>,
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
    source: Source,
}

impl<'c> Stream<'c> {
    fn new(corpus: &'c Corpus, source: Source, rng: ChaCha8Rng) -> Self {
        let items: Vec<(usize, usize)> = corpus
            .sentences
            .iter()
            .enumerate()
            .flat_map(|(s, sent)| (0..sent.len()).map(move |p| (s, p)))
            .collect();
        let order = (0..items.len()).collect();
        let mut stream = Stream {
            sentences: &corpus.sentences,
            items,
            order,
            cursor: 0,
            rng,
            source,
        };
        stream.reshuffle();
        stream
    }

    fn reshuffle(&mut self) {
        self.order.shuffle(&mut self.rng);
        self.cursor = 0;
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn next_batch(&mut self, size: usize, featurizer: &Featurizer) -> Result<Batch> {
        let dim = featurizer.input_dim();
        let size = size.min(self.len());
        let mut x = Array2::zeros((size, dim));
        let mut targets = Vec::with_capacity(size);
        let mut groups = Vec::with_capacity(size);
        for mut row in x.rows_mut() {
            if self.cursor == self.order.len() {
                self.reshuffle();
            }
            let (s, p) = self.items[self.order[self.cursor]];
            self.cursor += 1;
            let sent = &self.sentences[s];
            featurizer.window_into(&sent.tokens, p, row.as_slice_mut().expect("standard layout"));
            let tag = sent.tags.as_ref().expect("checked tagged")[p].to_io();
            let t = featurizer
                .tagset
                .index(&tag)
                .ok_or_else(|| Error::Config(format!("tag {} is not in the tag set", tag)))?;
            targets.push(t);
            groups.push(featurizer.group(&sent.tokens[p]));
        }
        Ok(Batch {
            x,
            targets,
            sources: vec![self.source; size],
            groups,
        })
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Dev-set entity scores of a model.
pub fn evaluate(model: &TaggerModel, featurizer: &Featurizer, gold: &Corpus) -> Result<Scores> {
    let predicted = model.predict_corpus(featurizer, gold);
    Ok(score(&gold.to_iob2(), &predicted)?.overall)
}

/// Train on clean and noisy data, keeping the parameters of the epoch
/// with the best dev F1.
///
/// An epoch is one pass over the larger of the streams in use. Batches
/// alternate `mix_clean` clean batches with `mix_noisy` noisy ones; the
/// smaller stream is reshuffled and reused as often as needed.
pub fn train(
    clean: &Corpus,
    noisy: &Corpus,
    dev: &Corpus,
    featurizer: &Featurizer,
    strategy: Strategy,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if clean.token_count() == 0 {
        return Err(Error::Config("the clean corpus is empty".into()));
    }
    if dev.token_count() == 0 {
        return Err(Error::Config("the dev corpus is empty".into()));
    }
    clean.require_tags("clean")?;
    dev.require_tags("dev")?;
    if strategy.uses_noisy() {
        noisy.require_tags("noisy")?;
    }

    let use_noisy = strategy.uses_noisy() && noisy.token_count() > 0;
    let k = featurizer.tagset.len();
    let mut model = TaggerModel::init(
        featurizer.input_dim(),
        config.hidden,
        k,
        featurizer.window,
        &mut stream_rng(config.seed, 0),
    );
    let mut noise = match strategy {
        Strategy::NoiseLayer(cm) => {
            cm.check()?;
            if cm.k() != k {
                return Err(Error::Shape { expected: k, actual: cm.k() });
            }
            Some(cm)
        }
        _ => None,
    };

    let mut clean_stream = Stream::new(clean, Source::Clean, stream_rng(config.seed, 1));
    let mut noisy_stream = use_noisy.then(|| Stream::new(noisy, Source::Noisy, stream_rng(config.seed, 2)));

    let batches_for = |n: usize| n.div_ceil(config.batch_size);
    // Schedule of one epoch: true for a clean batch.
    let schedule: Vec<bool> = match &noisy_stream {
        None => vec![true; batches_for(clean_stream.len())],
        Some(ns) => {
            let (nc, nn) = (batches_for(clean_stream.len()), batches_for(ns.len()));
            let cycles = (nc.div_ceil(config.mix_clean)).max(nn.div_ceil(config.mix_noisy));
            let mut s = Vec::with_capacity(cycles * (config.mix_clean + config.mix_noisy));
            for _ in 0..cycles {
                s.extend(std::iter::repeat_n(true, config.mix_clean));
                s.extend(std::iter::repeat_n(false, config.mix_noisy));
            }
            s
        }
    };

    let mut optimizer = Nadam::new(config.learning_rate, config.beta1, config.beta2, config.epsilon);
    let mut best = (model.clone(), noise.clone());
    let mut best_epoch = None;
    let mut best_f1 = f64::NEG_INFINITY;
    let mut stale = 0;
    let mut log = Vec::new();
    let mut batch_losses = Vec::new();
    let mut epochs_run = 0;

    for epoch in 1..=config.epochs {
        epochs_run = epoch;
        let mut epoch_loss = 0.0;
        let (mut n_clean, mut n_noisy) = (0, 0);
        for &is_clean in &schedule {
            let batch = if is_clean {
                n_clean += 1;
                clean_stream.next_batch(config.batch_size, featurizer)?
            } else {
                n_noisy += 1;
                noisy_stream
                    .as_mut()
                    .expect("noisy batches are only scheduled with a noisy stream")
                    .next_batch(config.batch_size, featurizer)?
            };
            let (loss, grads) = batch_loss_and_grads(&model, noise.as_ref(), &batch)?;
            batch_losses.push(loss);
            epoch_loss += loss;

            let mut params: Vec<&mut [f64]> = model.tensors_mut().into();
            let mut flat: Vec<&[f64]> = grads.network().into();
            if let (Some(cm), false) = (noise.as_mut(), config.freeze_noise) {
                params.push(cm.global.0.as_slice_mut().expect("standard layout"));
                flat.push(grads.global.as_ref().expect("confusion model in use").as_slice().expect("standard layout"));
                for (g, logits) in cm.groups.iter_mut() {
                    params.push(logits.0.as_slice_mut().expect("standard layout"));
                    flat.push(grads.groups[g].as_slice().expect("standard layout"));
                }
            }
            optimizer.step(&mut params, &flat);
        }

        let dev_scores = evaluate(&model, featurizer, dev)?;
        let record = EpochRecord {
            epoch,
            loss: epoch_loss / schedule.len() as f64,
            clean_batches: n_clean,
            noisy_batches: n_noisy,
            dev: dev_scores,
        };
        log::info!(
            "epoch {}: loss {:.4}, dev P {:.1} R {:.1} F1 {:.1}",
            epoch,
            record.loss,
            dev_scores.precision,
            dev_scores.recall,
            dev_scores.f1
        );
        log.push(record);

        if dev_scores.f1 > best_f1 {
            best_f1 = dev_scores.f1;
            best_epoch = Some(epoch);
            best = (model.clone(), noise.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                log::info!("no dev improvement for {} epochs, stopping", stale);
                break;
            }
        }
    }

    let (model, noise) = best;
    Ok(TrainOutcome {
        model,
        noise,
        log,
        batch_losses,
        best_epoch,
        best_dev_f1: best_f1.max(0.0),
        optimizer,
        epochs_run,
    })
}

/// Everything needed to restore or inspect a trained tagger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub tags: Vec<String>,
    pub config: TrainConfig,
    pub model: TaggerModel,
    pub noise: Option<ModelExport>,
    pub optimizer: Nadam,
    pub epoch: Option<usize>,
    pub dev_f1: f64,
}

impl Checkpoint {
    pub fn new(outcome: &TrainOutcome, tagset: &TagSet, config: &TrainConfig) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            tags: tagset.tags().map(|t| t.to_string()).collect(),
            config: config.clone(),
            model: outcome.model.clone(),
            noise: outcome.noise.as_ref().map(|n| n.to_export(tagset)),
            optimizer: outcome.optimizer.clone(),
            epoch: outcome.best_epoch,
            dev_f1: outcome.best_dev_f1,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!("unsupported checkpoint version {}", c.version)));
        }
        c.model.check()?;
        if c.model.k() != c.tags.len() {
            return Err(Error::Shape {
                expected: c.tags.len(),
                actual: c.model.k(),
            });
        }
        Ok(c)
    }
}
