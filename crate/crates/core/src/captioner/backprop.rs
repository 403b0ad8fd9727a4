//! Backpropagation through time for the mean negative log-likelihood loss.

use rayon::prelude::*;

use super::lstm::{lstm_step, step_backward, LstmState, StepCache};
use super::model::{encode, CaptionModel, Gradients, Parameters};
use super::vocab::{TokenSequence, SOS};
use super::{CaptionError, FeatureSequence};
use crate::tensor::softmax;

/// Mean negative log-likelihood over `batch` and its gradient w.r.t. every parameter.
///
/// Per-example work runs in parallel; gradients are summed in batch order so
/// the result does not depend on scheduling.
pub fn loss_and_gradients(
    model: &CaptionModel,
    batch: &[(FeatureSequence, TokenSequence)],
) -> Result<(f64, Gradients), CaptionError> {
    if batch.is_empty() {
        return Err(CaptionError::InvalidInput("batch is empty".into()));
    }
    let per_example = batch
        .par_iter()
        .map(|(features, target)| example_loss_and_gradients(model, features, target))
        .collect::<Result<Vec<_>, _>>()?;

    let mut loss = 0.0;
    let mut grads = Parameters::zeros(&model.dims);
    for (l, g) in &per_example {
        loss += l;
        grads.add_assign(g);
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    Ok((loss * inv, grads))
}

fn example_loss_and_gradients(
    model: &CaptionModel,
    features: &FeatureSequence,
    target: &TokenSequence,
) -> Result<(f64, Gradients), CaptionError> {
    if target.is_empty() {
        return Err(CaptionError::InvalidInput("target sentence is empty".into()));
    }
    // Validates the feature dimension up front.
    encode(model, features)?;
    let p = &model.params;
    let hidden = model.dims.hidden_size;

    let mut enc_steps = Vec::with_capacity(features.len());
    let mut state = LstmState::zeros(hidden);
    for frame in features.frames() {
        let (next, gates) = lstm_step(&p.encoder, frame, &state)?;
        enc_steps.push(StepCache {
            x: frame.clone(),
            prev: state,
            gates,
            next: next.clone(),
        });
        state = next;
    }

    let mut dec_steps = Vec::with_capacity(target.len());
    let mut probs = Vec::with_capacity(target.len());
    let mut inputs = Vec::with_capacity(target.len());
    let mut loss = 0.0;
    let mut prev = SOS;
    for &token in target.ids() {
        model.check_token(token)?;
        let x = p.embedding.row(prev).to_vec();
        let (next, gates) = lstm_step(&p.decoder, &x, &state)?;
        let pr = softmax(&model.logits(&next.h));
        loss -= pr[token].ln();
        dec_steps.push(StepCache {
            x,
            prev: state,
            gates,
            next: next.clone(),
        });
        probs.push(pr);
        inputs.push(prev);
        state = next;
        prev = token;
    }

    let mut g = Parameters::zeros(&model.dims);
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    for k in (0..dec_steps.len()).rev() {
        let cache = &dec_steps[k];
        let mut dlogits = probs[k].clone();
        dlogits[target.ids()[k]] -= 1.0;

        g.output_weights.add_outer(&dlogits, &cache.next.h);
        for (b, d) in g.output_bias.iter_mut().zip(&dlogits) {
            *b += d;
        }
        let mut dh = dh_next;
        p.output_weights.tmatvec_acc(&dlogits, &mut dh);

        let (dx, dprev) = step_backward(&p.decoder, cache, &dh, &dc_next, &mut g.decoder);
        for (e, d) in g.embedding.row_mut(inputs[k]).iter_mut().zip(&dx) {
            *e += d;
        }
        dh_next = dprev.h;
        dc_next = dprev.c;
    }

    // The decoder's initial state is the encoder's final state.
    for cache in enc_steps.iter().rev() {
        let (_, dprev) = step_backward(&p.encoder, cache, &dh_next, &dc_next, &mut g.encoder);
        dh_next = dprev.h;
        dc_next = dprev.c;
    }

    Ok((loss, g))
}
