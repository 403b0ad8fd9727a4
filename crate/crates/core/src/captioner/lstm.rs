//! Single LSTM cell: forward step and its reverse-mode derivative.

use rand::Rng;

use super::CaptionError;
use crate::tensor::{sigmoid, Matrix};

/// Gate order used for every per-gate array in this module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Cell = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Cell, Gate::Output];

    fn suffix(self) -> char {
        match self {
            Gate::Input => 'i',
            Gate::Forget => 'f',
            Gate::Cell => 'g',
            Gate::Output => 'o',
        }
    }
}

/// Weights and biases of one LSTM layer.
///
/// Input weights are `H × D_in`, recurrent weights `H × H`. Both the input
/// and the recurrent path carry their own bias, so each gate pre-activation is
/// `W_i· x + b_i· + W_h· h + b_h·`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParameters {
    pub input_weights: [Matrix; 4],
    pub recurrent_weights: [Matrix; 4],
    pub input_bias: [Vec<f64>; 4],
    pub recurrent_bias: [Vec<f64>; 4],
}

impl LstmParameters {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            input_weights: std::array::from_fn(|_| Matrix::zeros(hidden_size, input_size)),
            recurrent_weights: std::array::from_fn(|_| Matrix::zeros(hidden_size, hidden_size)),
            input_bias: std::array::from_fn(|_| vec![0.0; hidden_size]),
            recurrent_bias: std::array::from_fn(|_| vec![0.0; hidden_size]),
        }
    }

    pub fn uniform<R: Rng>(input_size: usize, hidden_size: usize, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        for (_, t) in p.tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.gen_range(-scale..=scale);
            }
        }
        p
    }

    pub fn hidden_size(&self) -> usize {
        self.recurrent_weights[0].rows()
    }

    pub fn input_size(&self) -> usize {
        self.input_weights[0].cols()
    }

    /// All tensors in checkpoint order: `W_i*`, `W_h*`, `b_i*`, `b_h*`, each in i, f, g, o order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(16);
        for g in Gate::ALL {
            out.push((format!("W_i{}", g.suffix()), self.input_weights[g as usize].as_slice()));
        }
        for g in Gate::ALL {
            out.push((format!("W_h{}", g.suffix()), self.recurrent_weights[g as usize].as_slice()));
        }
        for g in Gate::ALL {
            out.push((format!("b_i{}", g.suffix()), self.input_bias[g as usize].as_slice()));
        }
        for g in Gate::ALL {
            out.push((format!("b_h{}", g.suffix()), self.recurrent_bias[g as usize].as_slice()));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::with_capacity(16);
        let names = |prefix: &str| Gate::ALL.map(|g| format!("{prefix}{}", g.suffix()));
        for (name, m) in names("W_i").into_iter().zip(self.input_weights.iter_mut()) {
            out.push((name, m.as_mut_slice()));
        }
        for (name, m) in names("W_h").into_iter().zip(self.recurrent_weights.iter_mut()) {
            out.push((name, m.as_mut_slice()));
        }
        for (name, b) in names("b_i").into_iter().zip(self.input_bias.iter_mut()) {
            out.push((name, b.as_mut_slice()));
        }
        for (name, b) in names("b_h").into_iter().zip(self.recurrent_bias.iter_mut()) {
            out.push((name, b.as_mut_slice()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            h: vec![0.0; hidden_size],
            c: vec![0.0; hidden_size],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateActivations {
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
}

fn check_len(operand: &str, expected: usize, found: usize) -> Result<(), CaptionError> {
    if expected != found {
        return Err(CaptionError::Shape {
            operand: operand.to_string(),
            expected,
            found,
        });
    }
    Ok(())
}

/// One LSTM update. Returns the new state and the gate values it was built from.
pub fn lstm_step(
    params: &LstmParameters,
    x: &[f64],
    prev: &LstmState,
) -> Result<(LstmState, GateActivations), CaptionError> {
    let hidden = params.hidden_size();
    check_len("x", params.input_size(), x.len())?;
    check_len("prev.h", hidden, prev.h.len())?;
    check_len("prev.c", hidden, prev.c.len())?;

    let pre = |gate: Gate| {
        let k = gate as usize;
        let mut a: Vec<f64> = params.input_bias[k]
            .iter()
            .zip(&params.recurrent_bias[k])
            .map(|(bi, bh)| bi + bh)
            .collect();
        params.input_weights[k].matvec_acc(x, &mut a);
        params.recurrent_weights[k].matvec_acc(&prev.h, &mut a);
        a
    };

    let i: Vec<f64> = pre(Gate::Input).into_iter().map(sigmoid).collect();
    let f: Vec<f64> = pre(Gate::Forget).into_iter().map(sigmoid).collect();
    let g: Vec<f64> = pre(Gate::Cell).into_iter().map(f64::tanh).collect();
    let o: Vec<f64> = pre(Gate::Output).into_iter().map(sigmoid).collect();

    let c: Vec<f64> = (0..hidden)
        .map(|j| f[j] * prev.c[j] + i[j] * g[j])
        .collect();
    let h: Vec<f64> = (0..hidden).map(|j| o[j] * c[j].tanh()).collect();

    Ok((LstmState { h, c }, GateActivations { i, f, g, o }))
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub x: Vec<f64>,
    pub prev: LstmState,
    pub gates: GateActivations,
    pub next: LstmState,
}

/// Backpropagates `dh`, `dc` (gradients w.r.t. the step's output state) through
/// one step, accumulating into `grads`. Returns gradients w.r.t. the input
/// vector and the previous state.
pub(crate) fn step_backward(
    params: &LstmParameters,
    cache: &StepCache,
    dh: &[f64],
    dc: &[f64],
    grads: &mut LstmParameters,
) -> (Vec<f64>, LstmState) {
    let hidden = params.hidden_size();
    let GateActivations { i, f, g, o } = &cache.gates;

    let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; hidden]);
    let mut dc_prev = vec![0.0; hidden];
    for j in 0..hidden {
        let tc = cache.next.c[j].tanh();
        let d_o = dh[j] * tc;
        let dc_total = dc[j] + dh[j] * o[j] * (1.0 - tc * tc);
        let d_i = dc_total * g[j];
        let d_g = dc_total * i[j];
        let d_f = dc_total * cache.prev.c[j];
        dc_prev[j] = dc_total * f[j];

        da[Gate::Input as usize][j] = d_i * i[j] * (1.0 - i[j]);
        da[Gate::Forget as usize][j] = d_f * f[j] * (1.0 - f[j]);
        da[Gate::Cell as usize][j] = d_g * (1.0 - g[j] * g[j]);
        da[Gate::Output as usize][j] = d_o * o[j] * (1.0 - o[j]);
    }

    let mut dx = vec![0.0; params.input_size()];
    let mut dh_prev = vec![0.0; hidden];
    for k in 0..4 {
        grads.input_weights[k].add_outer(&da[k], &cache.x);
        grads.recurrent_weights[k].add_outer(&da[k], &cache.prev.h);
        for j in 0..hidden {
            grads.input_bias[k][j] += da[k][j];
            grads.recurrent_bias[k][j] += da[k][j];
        }
        params.input_weights[k].tmatvec_acc(&da[k], &mut dx);
        params.recurrent_weights[k].tmatvec_acc(&da[k], &mut dh_prev);
    }

    (
        dx,
        LstmState {
            h: dh_prev,
            c: dc_prev,
        },
    )
}
