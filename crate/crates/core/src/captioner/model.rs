use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lstm::{lstm_step, LstmParameters, LstmState};
use super::vocab::{TokenSequence, EOC, SOS};
use super::{CaptionError, FeatureSequence};
use crate::tensor::{log_softmax_at, softmax, Matrix};

pub const DEFAULT_MAX_LEN: usize = 15;
pub const DEFAULT_INIT_SCALE: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub vocab_size: usize,
    pub embed_size: usize,
    pub hidden_size: usize,
    pub feature_size: usize,
    pub max_len: usize,
}

impl ModelDims {
    pub fn validate(&self) -> Result<(), CaptionError> {
        if self.vocab_size < 4 {
            return Err(CaptionError::InvalidInput(
                "vocabulary must hold at least the 4 reserved tokens".into(),
            ));
        }
        if self.embed_size == 0 || self.hidden_size == 0 || self.feature_size == 0 {
            return Err(CaptionError::InvalidInput("model dimensions must be positive".into()));
        }
        if self.max_len == 0 {
            return Err(CaptionError::InvalidInput("maximum sentence length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Every learnable tensor of the captioner. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// `V × E`, one row per token.
    pub embedding: Matrix,
    pub encoder: LstmParameters,
    pub decoder: LstmParameters,
    /// `V × H`.
    pub output_weights: Matrix,
    pub output_bias: Vec<f64>,
}

pub type Gradients = Parameters;

impl Parameters {
    pub fn zeros(dims: &ModelDims) -> Self {
        Self {
            embedding: Matrix::zeros(dims.vocab_size, dims.embed_size),
            encoder: LstmParameters::zeros(dims.feature_size, dims.hidden_size),
            decoder: LstmParameters::zeros(dims.embed_size, dims.hidden_size),
            output_weights: Matrix::zeros(dims.vocab_size, dims.hidden_size),
            output_bias: vec![0.0; dims.vocab_size],
        }
    }

    /// Named tensors in checkpoint order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = vec![("embedding".to_string(), self.embedding.as_slice())];
        out.extend(self.encoder.tensors().into_iter().map(|(n, t)| (format!("encoder.{n}"), t)));
        out.extend(self.decoder.tensors().into_iter().map(|(n, t)| (format!("decoder.{n}"), t)));
        out.push(("output_weights".to_string(), self.output_weights.as_slice()));
        out.push(("output_bias".to_string(), self.output_bias.as_slice()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = vec![("embedding".to_string(), self.embedding.as_mut_slice())];
        out.extend(
            self.encoder
                .tensors_mut()
                .into_iter()
                .map(|(n, t)| (format!("encoder.{n}"), t)),
        );
        out.extend(
            self.decoder
                .tensors_mut()
                .into_iter()
                .map(|(n, t)| (format!("decoder.{n}"), t)),
        );
        out.push(("output_weights".to_string(), self.output_weights.as_mut_slice()));
        out.push(("output_bias".to_string(), self.output_bias.as_mut_slice()));
        out
    }

    pub fn add_assign(&mut self, other: &Parameters) {
        for ((_, dst), (_, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, t) in self.tensors_mut() {
            for v in t.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

/// The full captioning model: dimensions, the seed used to initialize it, and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionModel {
    pub dims: ModelDims,
    pub seed: u64,
    pub params: Parameters,
}

impl CaptionModel {
    /// Seeded initialization, every value uniform in `[-0.08, 0.08]`.
    pub fn new(dims: ModelDims, seed: u64) -> Result<Self, CaptionError> {
        Self::with_init_scale(dims, seed, DEFAULT_INIT_SCALE)
    }

    pub fn with_init_scale(dims: ModelDims, seed: u64, scale: f64) -> Result<Self, CaptionError> {
        dims.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = Parameters {
            embedding: Matrix::uniform(dims.vocab_size, dims.embed_size, scale, &mut rng),
            encoder: LstmParameters::uniform(dims.feature_size, dims.hidden_size, scale, &mut rng),
            decoder: LstmParameters::uniform(dims.embed_size, dims.hidden_size, scale, &mut rng),
            output_weights: Matrix::uniform(dims.vocab_size, dims.hidden_size, scale, &mut rng),
            output_bias: Matrix::uniform(1, dims.vocab_size, scale, &mut rng).as_slice().to_vec(),
        };
        Ok(Self { dims, seed, params })
    }

    pub fn zeros(dims: ModelDims) -> Result<Self, CaptionError> {
        dims.validate()?;
        Ok(Self {
            dims,
            seed: 0,
            params: Parameters::zeros(&dims),
        })
    }

    pub(crate) fn logits(&self, h: &[f64]) -> Vec<f64> {
        let mut logits = self.params.output_bias.clone();
        self.params.output_weights.matvec_acc(h, &mut logits);
        logits
    }

    pub(crate) fn check_token(&self, token: usize) -> Result<(), CaptionError> {
        if token >= self.dims.vocab_size {
            return Err(CaptionError::InvalidInput(format!(
                "token id {token} out of range for vocabulary of size {}",
                self.dims.vocab_size
            )));
        }
        Ok(())
    }
}

/// Final encoder state, used as the decoder's initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingVector {
    pub h_final: Vec<f64>,
    pub c_final: Vec<f64>,
}

impl EncodingVector {
    pub fn to_state(&self) -> LstmState {
        LstmState {
            h: self.h_final.clone(),
            c: self.c_final.clone(),
        }
    }
}

pub fn encode(model: &CaptionModel, seq: &FeatureSequence) -> Result<EncodingVector, CaptionError> {
    if seq.is_empty() {
        return Err(CaptionError::InvalidInput("cannot encode an empty sequence".into()));
    }
    if seq.dim() != model.dims.feature_size {
        return Err(CaptionError::Shape {
            operand: "features".into(),
            expected: model.dims.feature_size,
            found: seq.dim(),
        });
    }
    let mut state = LstmState::zeros(model.dims.hidden_size);
    for frame in seq.frames() {
        state = lstm_step(&model.params.encoder, frame, &state)?.0;
    }
    Ok(EncodingVector {
        h_final: state.h,
        c_final: state.c,
    })
}

/// Next-token distribution given the previous token and decoder state.
pub fn decode_step(
    model: &CaptionModel,
    prev_token: usize,
    state: &LstmState,
) -> Result<(Vec<f64>, LstmState), CaptionError> {
    model.check_token(prev_token)?;
    let x = model.params.embedding.row(prev_token);
    let (next, _) = lstm_step(&model.params.decoder, x, state)?;
    let probs = softmax(&model.logits(&next.h));
    Ok((probs, next))
}

/// Greedy argmax decoding; ties go to the lowest id. Stops after `eoc` or `max_len` tokens.
pub fn decode_greedy(model: &CaptionModel, v: &EncodingVector) -> Result<TokenSequence, CaptionError> {
    let mut state = v.to_state();
    let mut prev = SOS;
    let mut ids = Vec::with_capacity(model.dims.max_len);
    while ids.len() < model.dims.max_len {
        let (probs, next) = decode_step(model, prev, &state)?;
        let mut best = 0;
        for (id, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = id;
            }
        }
        ids.push(best);
        if best == EOC {
            break;
        }
        prev = best;
        state = next;
    }
    TokenSequence::new(ids)
}

/// `Σ_k log p(s_k | v, s_<k)` with ground-truth tokens fed back as decoder inputs.
pub fn sentence_log_prob(
    model: &CaptionModel,
    v: &EncodingVector,
    target: &TokenSequence,
) -> Result<f64, CaptionError> {
    if target.is_empty() {
        return Err(CaptionError::InvalidInput("target sentence is empty".into()));
    }
    let mut state = v.to_state();
    let mut prev = SOS;
    let mut total = 0.0;
    for &token in target.ids() {
        model.check_token(token)?;
        let x = model.params.embedding.row(prev);
        state = lstm_step(&model.params.decoder, x, &state)?.0;
        total += log_softmax_at(&model.logits(&state.h), token);
        prev = token;
    }
    Ok(total)
}
