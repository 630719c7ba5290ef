use std::ops::{Deref, DerefMut};

use super::{forward_sequence, LstmParams, Tape};
use crate::market_data::WindowSample;
use crate::{Error, Result};

/// Gradient of a scalar loss with respect to every [`LstmParams`] tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(pub LstmParams);

impl GradientSet {
    pub fn zeros_like(params: &LstmParams) -> Self {
        GradientSet(LstmParams::zeros(params.hidden, params.input_dim))
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.0.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.0.tensors().iter().flat_map(|t| t.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for GradientSet {
    type Target = LstmParams;
    fn deref(&self) -> &LstmParams {
        &self.0
    }
}

impl DerefMut for GradientSet {
    fn deref_mut(&mut self) -> &mut LstmParams {
        &mut self.0
    }
}

/// `(1/n)·Σ(ŷ − y)²`
pub fn loss_mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch { left: predictions.len(), right: targets.len() });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("loss inputs"));
    }
    let sum: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(sum / predictions.len() as f64)
}

/// Batch MSE of the network on `batch`.
pub fn batch_loss(params: &LstmParams, batch: &[WindowSample]) -> Result<f64> {
    let preds =
        batch.iter().map(|s| forward_sequence(params, &s.inputs).map(|(p, _)| p)).collect::<Result<Vec<_>>>()?;
    let targets: Vec<f64> = batch.iter().map(|s| s.target).collect();
    loss_mse(&preds, &targets)
}

/// Gradient of the batch-mean MSE, given tapes recorded on the same batch.
pub fn backward_bptt(params: &LstmParams, batch: &[WindowSample], tapes: &[Tape]) -> Result<GradientSet> {
    if batch.len() != tapes.len() {
        return Err(Error::ShapeMismatch(format!("{} samples but {} tapes", batch.len(), tapes.len())));
    }
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let n = batch.len() as f64;
    let mut d_out = Vec::with_capacity(batch.len());
    for (s, tape) in batch.iter().zip(tapes) {
        if tape.steps.len() * params.input_dim != s.inputs.len() {
            return Err(Error::ShapeMismatch(format!(
                "tape has {} steps for a {}-value input",
                tape.steps.len(),
                s.inputs.len()
            )));
        }
        d_out.push(2.0 * (tape.prediction - s.target) / n);
    }
    backward_from_output_grads(params, tapes, &d_out)
}

/// Backpropagates `dL/dŷ` for each tape through the head and the unrolled cell.
pub fn backward_from_output_grads(params: &LstmParams, tapes: &[Tape], d_out: &[f64]) -> Result<GradientSet> {
    if tapes.len() != d_out.len() {
        return Err(Error::LengthMismatch { left: tapes.len(), right: d_out.len() });
    }
    let hid = params.hidden;
    let mut g = GradientSet::zeros_like(params);
    let mut dz = vec![0.0; hid + params.input_dim];
    let mut da_f = vec![0.0; hid];
    let mut da_i = vec![0.0; hid];
    let mut da_c = vec![0.0; hid];
    let mut da_o = vec![0.0; hid];

    for (tape, &dy) in tapes.iter().zip(d_out) {
        let last = tape.steps.last().ok_or(Error::Empty("tape"))?;
        g.b_y += dy;
        for k in 0..hid {
            g.w_y[k] += dy * last.h[k];
        }
        let mut dh: Vec<f64> = params.w_y.iter().map(|w| w * dy).collect();
        let mut dc = vec![0.0; hid];

        for s in tape.steps.iter().rev() {
            for k in 0..hid {
                let tanh_c = s.c[k].tanh();
                let d_o = dh[k] * tanh_c;
                dc[k] += dh[k] * s.o[k] * (1.0 - tanh_c * tanh_c);
                let d_f = dc[k] * s.c_prev[k];
                let d_i = dc[k] * s.c_tilde[k];
                let d_ct = dc[k] * s.i[k];
                da_f[k] = d_f * s.f[k] * (1.0 - s.f[k]);
                da_i[k] = d_i * s.i[k] * (1.0 - s.i[k]);
                da_c[k] = d_ct * (1.0 - s.c_tilde[k] * s.c_tilde[k]);
                da_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
                // Carry the cell gradient to the previous step.
                dc[k] *= s.f[k];
            }
            g.w_f.add_outer(&da_f, &s.z);
            g.w_i.add_outer(&da_i, &s.z);
            g.w_c.add_outer(&da_c, &s.z);
            g.w_o.add_outer(&da_o, &s.z);
            for k in 0..hid {
                g.b_f[k] += da_f[k];
                g.b_i[k] += da_i[k];
                g.b_c[k] += da_c[k];
                g.b_o[k] += da_o[k];
            }
            dz.fill(0.0);
            params.w_f.add_transpose_mul(&da_f, &mut dz);
            params.w_i.add_transpose_mul(&da_i, &mut dz);
            params.w_c.add_transpose_mul(&da_c, &mut dz);
            params.w_o.add_transpose_mul(&da_o, &mut dz);
            dh.copy_from_slice(&dz[..hid]);
        }
    }
    Ok(g)
}
