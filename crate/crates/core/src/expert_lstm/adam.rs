use super::{GradientSet, LstmParams, TrainConfig};
use crate::{Error, Result};

/// First and second moment estimates, flattened in [`LstmParams::tensors`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Number of updates applied so far.
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &LstmParams) -> Self {
        let n = params.num_params();
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam update. Increments `state.t` before use, so the
/// first call runs with `t = 1`.
pub fn adam_step(params: &mut LstmParams, grads: &GradientSet, state: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    let n = params.num_params();
    if grads.num_params() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "params {n}, gradients {}, moments {}/{}",
            grads.num_params(),
            state.m.len(),
            state.v.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let correction1 = 1.0 - b1.powi(t);
    let correction2 = 1.0 - b2.powi(t);
    let mut offset = 0;
    for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
        for (k, (pv, &gv)) in p.iter_mut().zip(g).enumerate() {
            let idx = offset + k;
            let m = b1 * state.m[idx] + (1.0 - b1) * gv;
            let v = b2 * state.v[idx] + (1.0 - b2) * gv * gv;
            state.m[idx] = m;
            state.v[idx] = v;
            let m_hat = m / correction1;
            let v_hat = v / correction2;
            *pv -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
        offset += g.len();
    }
    Ok(())
}
