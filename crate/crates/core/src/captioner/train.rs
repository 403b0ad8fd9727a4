use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backprop::loss_and_gradients;
use super::model::{CaptionModel, Gradients, Parameters};
use super::vocab::{TokenSequence, Vocabulary};
use super::{CaptionError, FeatureSequence};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 1e-4,
            seed: 0,
            batch_size: 1,
        }
    }
}

/// Adam with the usual moment constants (β1 = 0.9, β2 = 0.999, ε = 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Parameters,
    v: Parameters,
}

impl Adam {
    pub fn new(model: &CaptionModel, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: Parameters::zeros(&model.dims),
            v: Parameters::zeros(&model.dims),
        }
    }

    pub fn update(&mut self, params: &mut Parameters, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);

        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for ((((_, w), (_, g)), (_, m)), (_, v)) in tensors {
            for j in 0..w.len() {
                m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                let m_hat = m[j] / bias1;
                let v_hat = v[j] / bias2;
                w[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Teacher-forced training; see [`train_with_log`].
pub fn train(
    model: &CaptionModel,
    corpus: &[(FeatureSequence, String)],
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<CaptionModel, CaptionError> {
    train_with_log(model, corpus, vocab, config, |_, _| {})
}

/// Runs `config.epochs` shuffled passes of Adam over `corpus`, calling
/// `on_epoch(epoch, mean_batch_loss)` after each. Deterministic given the seed.
pub fn train_with_log(
    model: &CaptionModel,
    corpus: &[(FeatureSequence, String)],
    vocab: &Vocabulary,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<CaptionModel, CaptionError> {
    if corpus.is_empty() {
        return Err(CaptionError::InvalidInput("training corpus is empty".into()));
    }
    if config.batch_size == 0 {
        return Err(CaptionError::InvalidInput("batch size must be at least 1".into()));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(CaptionError::InvalidInput("learning rate must be positive".into()));
    }
    if vocab.len() != model.dims.vocab_size {
        return Err(CaptionError::Shape {
            operand: "vocabulary".into(),
            expected: model.dims.vocab_size,
            found: vocab.len(),
        });
    }

    let examples: Vec<(FeatureSequence, TokenSequence)> = corpus
        .iter()
        .map(|(features, sentence)| {
            if features.dim() != model.dims.feature_size {
                return Err(CaptionError::Shape {
                    operand: format!("features of clip `{}`", features.clip_id()),
                    expected: model.dims.feature_size,
                    found: features.dim(),
                });
            }
            let target = vocab.encode_sentence(sentence)?;
            if target.len() > model.dims.max_len {
                return Err(CaptionError::InvalidInput(format!(
                    "sentence `{sentence}` needs {} tokens including `eoc`, maximum is {}",
                    target.len(),
                    model.dims.max_len
                )));
            }
            Ok((features.clone(), target))
        })
        .collect::<Result<_, _>>()?;

    let mut trained = model.clone();
    let mut adam = Adam::new(model, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<_> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let (loss, grads) = loss_and_gradients(&trained, &batch)?;
            adam.update(&mut trained.params, &grads);
            epoch_loss += loss;
            batches += 1;
        }
        on_epoch(epoch, epoch_loss / batches as f64);
    }
    Ok(trained)
}
