use serde::{Deserialize, Serialize};

use super::LstmParams;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    /// `[h_prev; x]`
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub c_tilde: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    pub steps: Vec<StepCache>,
    pub prediction: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn step(params: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
    let hid = params.hidden;
    let mut z = Vec::with_capacity(hid + params.input_dim);
    z.extend_from_slice(h_prev);
    z.extend_from_slice(x);

    let mut f = vec![0.0; hid];
    let mut i = vec![0.0; hid];
    let mut c_tilde = vec![0.0; hid];
    let mut o = vec![0.0; hid];
    params.w_f.affine_into(&z, &params.b_f, &mut f);
    params.w_i.affine_into(&z, &params.b_i, &mut i);
    params.w_c.affine_into(&z, &params.b_c, &mut c_tilde);
    params.w_o.affine_into(&z, &params.b_o, &mut o);
    f.iter_mut().for_each(|v| *v = sigmoid(*v));
    i.iter_mut().for_each(|v| *v = sigmoid(*v));
    c_tilde.iter_mut().for_each(|v| *v = v.tanh());
    let c: Vec<f64> = (0..hid).map(|k| f[k] * c_prev[k] + i[k] * c_tilde[k]).collect();
    o.iter_mut().for_each(|v| *v = sigmoid(*v));
    let h: Vec<f64> = (0..hid).map(|k| o[k] * c[k].tanh()).collect();

    StepCache { z, f, i, c_tilde, o, c_prev: c_prev.to_vec(), c, h }
}

pub fn cell_step(params: &LstmParams, x_t: &[f64], prev: &LstmState) -> Result<LstmState> {
    if x_t.len() != params.input_dim {
        return Err(Error::ShapeMismatch(format!("input has {} features, expected {}", x_t.len(), params.input_dim)));
    }
    if prev.h.len() != params.hidden || prev.c.len() != params.hidden {
        return Err(Error::ShapeMismatch(format!(
            "state has sizes ({}, {}), expected {}",
            prev.h.len(),
            prev.c.len(),
            params.hidden
        )));
    }
    let s = step(params, x_t, &prev.h, &prev.c);
    Ok(LstmState { h: s.h, c: s.c })
}

/// Runs the sequence from a zero state. `inputs` holds `input_dim` values per step.
pub fn forward_sequence(params: &LstmParams, inputs: &[f64]) -> Result<(f64, Tape)> {
    let d = params.input_dim;
    if inputs.is_empty() {
        return Err(Error::Empty("input sequence"));
    }
    if !inputs.len().is_multiple_of(d) {
        return Err(Error::ShapeMismatch(format!(
            "sequence of {} values is not a whole number of {d}-feature steps",
            inputs.len()
        )));
    }
    let hid = params.hidden;
    let mut steps: Vec<StepCache> = Vec::with_capacity(inputs.len() / d);
    let zeros = vec![0.0; hid];
    for x in inputs.chunks(d) {
        let s = match steps.last() {
            Some(prev) => step(params, x, &prev.h, &prev.c),
            None => step(params, x, &zeros, &zeros),
        };
        steps.push(s);
    }
    let h_last = &steps.last().expect("non-empty").h;
    let prediction = params.b_y + params.w_y.iter().zip(h_last).map(|(a, b)| a * b).sum::<f64>();
    Ok((prediction, Tape { steps, prediction }))
}

pub fn predict_lstm(params: &LstmParams, window: &[f64]) -> Result<f64> {
    forward_sequence(params, window).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::super::init_params;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_give_zero_hidden_state() {
        let p = LstmParams::zeros(5, 1);
        let s = cell_step(&p, &[3.7], &LstmState::zeros(5)).unwrap();
        assert!(s.h.iter().chain(&s.c).all(|&v| v == 0.0));
        let mut p = LstmParams::zeros(5, 1);
        p.b_f.fill(1.0);
        let s = cell_step(&p, &[0.0], &LstmState::zeros(5)).unwrap();
        assert!(s.h.iter().all(|&v| v == 0.0));
        assert_eq!(predict_lstm(&LstmParams::zeros(5, 1), &[1.0, -2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn repeated_calls_are_identical() {
        let p = init_params(6, 2, 3).unwrap();
        let prev = LstmState { h: vec![0.1; 6], c: vec![-0.3; 6] };
        let a = cell_step(&p, &[0.5, -1.0], &prev).unwrap();
        let b = cell_step(&p, &[0.5, -1.0], &prev).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_step_sequence_is_cell_then_head() {
        let p = init_params(4, 1, 5).unwrap();
        let s = cell_step(&p, &[0.25], &LstmState::zeros(4)).unwrap();
        let head = p.b_y + p.w_y.iter().zip(&s.h).map(|(a, b)| a * b).sum::<f64>();
        assert_eq!(predict_lstm(&p, &[0.25]).unwrap(), head);
    }

    #[test]
    fn tape_replay_reproduces_prediction() {
        let p = init_params(8, 1, 11).unwrap();
        let inputs = [0.3, -0.1, 1.2, 0.0, -0.7];
        let (pred, tape) = forward_sequence(&p, &inputs).unwrap();
        let mut state = LstmState::zeros(8);
        for (k, x) in inputs.iter().enumerate() {
            state = cell_step(&p, &[*x], &state).unwrap();
            assert_eq!(state.h, tape.steps[k].h);
            assert_eq!(state.c, tape.steps[k].c);
        }
        let replay = p.b_y + p.w_y.iter().zip(&tape.steps[4].h).map(|(a, b)| a * b).sum::<f64>();
        assert_eq!(pred, replay);
        assert_eq!(predict_lstm(&p, &inputs).unwrap(), pred);
    }

    #[test]
    fn errors() {
        let p = init_params(3, 2, 0).unwrap();
        assert!(matches!(forward_sequence(&p, &[]), Err(Error::Empty(_))));
        assert!(matches!(forward_sequence(&p, &[1.0, 2.0, 3.0]), Err(Error::ShapeMismatch(_))));
        assert!(cell_step(&p, &[1.0], &LstmState::zeros(3)).is_err());
        assert!(cell_step(&p, &[1.0, 2.0], &LstmState::zeros(2)).is_err());
    }

    #[test]
    fn activations_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for seed in 0..20 {
            let mut p = init_params(6, 1, seed).unwrap();
            // Inflate weights to push pre-activations far from zero.
            for t in p.tensors_mut() {
                t.iter_mut().for_each(|v| *v *= 4.0);
            }
            let inputs: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
            let (_, tape) = forward_sequence(&p, &inputs).unwrap();
            for s in &tape.steps {
                for k in 0..6 {
                    for g in [s.f[k], s.i[k], s.o[k]] {
                        assert!(g > 0.0 && g < 1.0);
                    }
                    assert!(s.c_tilde[k].abs() < 1.0);
                    assert!(s.h[k].abs() < 1.0);
                }
            }
        }
    }
}
