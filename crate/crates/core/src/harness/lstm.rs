use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::runtime::OperatorPair;
use crate::storage::{decode_f64s, encode_f64s};

/// Hidden and cell vectors. Also used for their adjoints.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(d: usize) -> Self {
        LstmState { h: vec![0.0; d], c: vec![0.0; d] }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = encode_f64s(&self.h);
        bytes.extend_from_slice(&encode_f64s(&self.c));
        bytes
    }
}

const FORGET: usize = 0;
const INPUT: usize = 1;
const OUTPUT: usize = 2;
const CANDIDATE: usize = 3;

/// A single-layer LSTM unrolled over a fixed input sequence, with loss
/// `sum((h_n - target)^2)`.
#[derive(Debug, Clone)]
pub struct LstmCell {
    d: usize,
    /// `W_f, W_i, W_o, W_c`, each `d x 2d` row-major, acting on `[h; x]`.
    weights: [Vec<f64>; 4],
    biases: [Vec<f64>; 4],
    inputs: Vec<Vec<f64>>,
    target: Vec<f64>,
}

struct Gates {
    f: Vec<f64>,
    i: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmCell {
    pub fn new(
        d: usize,
        weights: [Vec<f64>; 4],
        biases: [Vec<f64>; 4],
        inputs: Vec<Vec<f64>>,
        target: Vec<f64>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParams("hidden size must be positive".into()));
        }
        if inputs.is_empty() {
            return Err(Error::InvalidParams("input sequence is empty".into()));
        }
        for w in &weights {
            check_len(2 * d * d, w.len())?;
        }
        for v in biases.iter().chain(&inputs).chain(std::iter::once(&target)) {
            check_len(d, v.len())?;
        }
        Ok(LstmCell { d, weights, biases, inputs, target })
    }

    /// Weights, biases, inputs and target uniform in [-0.1, 0.1].
    pub fn random(d: usize, n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vector = |len: usize| (0..len).map(|_| rng.gen_range(-0.1..=0.1)).collect::<Vec<f64>>();
        let weights = [vector(2 * d * d), vector(2 * d * d), vector(2 * d * d), vector(2 * d * d)];
        let biases = [vector(d), vector(d), vector(d), vector(d)];
        let inputs = (0..n).map(|_| vector(d)).collect();
        let target = vector(d);
        LstmCell::new(d, weights, biases, inputs, target)
    }

    pub fn zeroed(d: usize, n: usize) -> Result<Self> {
        let zeros = || vec![0.0; d];
        let w = || vec![0.0; 2 * d * d];
        LstmCell::new(d, [w(), w(), w(), w()], [zeros(), zeros(), zeros(), zeros()], vec![zeros(); n], zeros())
    }

    /// A state with entries uniform in [-0.1, 0.1].
    pub fn random_state(&self, seed: u64) -> LstmState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vector = || (0..self.d).map(|_| rng.gen_range(-0.1..=0.1)).collect::<Vec<f64>>();
        LstmState { h: vector(), c: vector() }
    }

    pub fn hidden_size(&self) -> usize {
        self.d
    }

    pub fn check_state(&self, state: &LstmState) -> Result<()> {
        check_len(self.d, state.h.len())?;
        check_len(self.d, state.c.len())
    }

    pub fn loss(&self, final_state: &LstmState) -> f64 {
        final_state.h.iter().zip(&self.target).map(|(h, t)| (h - t) * (h - t)).sum()
    }

    /// Runs all steps from `state`; returns the final state.
    pub fn unroll(&self, state: &LstmState) -> LstmState {
        (0..self.inputs.len()).fold(state.clone(), |s, k| self.forward(k, &s))
    }

    fn gates(&self, step: usize, state: &LstmState) -> Gates {
        let d = self.d;
        let x = &self.inputs[step];
        let affine = |gate: usize| -> Vec<f64> {
            let w = &self.weights[gate];
            (0..d)
                .map(|r| {
                    let row = &w[r * 2 * d..(r + 1) * 2 * d];
                    let mut acc = self.biases[gate][r];
                    for (wj, hj) in row[..d].iter().zip(&state.h) {
                        acc += wj * hj;
                    }
                    for (wj, xj) in row[d..].iter().zip(x) {
                        acc += wj * xj;
                    }
                    acc
                })
                .collect()
        };
        let f: Vec<f64> = affine(FORGET).into_iter().map(sigmoid).collect();
        let i: Vec<f64> = affine(INPUT).into_iter().map(sigmoid).collect();
        let o: Vec<f64> = affine(OUTPUT).into_iter().map(sigmoid).collect();
        let g: Vec<f64> = affine(CANDIDATE).into_iter().map(f64::tanh).collect();
        let c: Vec<f64> = (0..d).map(|k| f[k] * state.c[k] + i[k] * g[k]).collect();
        let tanh_c = c.iter().map(|v| v.tanh()).collect();
        Gates { f, i, o, g, c, tanh_c }
    }

    pub fn forward(&self, step: usize, state: &LstmState) -> LstmState {
        let gates = self.gates(step, state);
        let h = gates.o.iter().zip(&gates.tanh_c).map(|(o, t)| o * t).collect();
        LstmState { h, c: gates.c }
    }

    /// Adjoint of `state` given the adjoint of the next state.
    pub fn backward(&self, step: usize, state: &LstmState, next: &LstmState) -> LstmState {
        let d = self.d;
        let Gates { f, i, o, g, tanh_c, .. } = self.gates(step, state);

        let mut pre = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
        let mut dc = vec![0.0; d];
        for k in 0..d {
            let dc_new = next.c[k] + next.h[k] * o[k] * (1.0 - tanh_c[k] * tanh_c[k]);
            pre[OUTPUT][k] = next.h[k] * tanh_c[k] * o[k] * (1.0 - o[k]);
            pre[FORGET][k] = dc_new * state.c[k] * f[k] * (1.0 - f[k]);
            pre[INPUT][k] = dc_new * g[k] * i[k] * (1.0 - i[k]);
            pre[CANDIDATE][k] = dc_new * i[k] * (1.0 - g[k] * g[k]);
            dc[k] = dc_new * f[k];
        }

        let mut dh = vec![0.0; d];
        for (gate, delta) in pre.iter().enumerate() {
            let w = &self.weights[gate];
            for (r, dr) in delta.iter().enumerate() {
                let row = &w[r * 2 * d..r * 2 * d + d];
                for (acc, wj) in dh.iter_mut().zip(row) {
                    *acc += wj * dr;
                }
            }
        }
        LstmState { h: dh, c: dc }
    }

    pub fn seed(&self, final_state: &LstmState) -> LstmState {
        let h = final_state.h.iter().zip(&self.target).map(|(h, t)| 2.0 * (h - t)).collect();
        LstmState { h, c: vec![0.0; self.d] }
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

impl OperatorPair for LstmCell {
    type State = LstmState;
    type Adjoint = LstmState;

    fn steps(&self) -> usize {
        self.inputs.len()
    }

    fn state_size(&self) -> usize {
        2 * self.d * 8
    }

    fn forward_step(&self, step: usize, state: &LstmState) -> LstmState {
        self.forward(step, state)
    }

    fn backward_step(&self, step: usize, state: &LstmState, adjoint: &LstmState) -> LstmState {
        self.backward(step, state, adjoint)
    }

    fn adjoint_seed(&self, final_state: &LstmState) -> LstmState {
        self.seed(final_state)
    }

    fn encode_state(&self, state: &LstmState) -> Vec<u8> {
        state.to_bytes()
    }

    fn decode_state(&self, bytes: &[u8]) -> Result<LstmState> {
        check_len(self.state_size(), bytes.len())?;
        let mut values = decode_f64s(bytes)?;
        let c = values.split_off(self.d);
        Ok(LstmState { h: values, c })
    }
}
