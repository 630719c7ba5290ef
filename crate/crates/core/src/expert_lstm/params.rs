use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `out = self·x + bias`.
    pub fn affine_into(&self, x: &[f64], bias: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o = bias[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// `out += selfᵀ·v`.
    pub fn add_transpose_mul(&self, v: &[f64], out: &mut [f64]) {
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vr;
            }
        }
    }

    /// `self += u·vᵀ`.
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        for (r, &ur) in u.iter().enumerate() {
            if ur == 0.0 {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (a, b) in row.iter_mut().zip(v) {
                *a += ur * b;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub hidden: usize,
    pub input_dim: usize,
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_c: Matrix,
    pub w_o: Matrix,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
    pub w_y: Vec<f64>,
    pub b_y: f64,
}

impl LstmParams {
    pub fn zeros(hidden: usize, input_dim: usize) -> Self {
        let z = hidden + input_dim;
        Self {
            hidden,
            input_dim,
            w_f: Matrix::zeros(hidden, z),
            w_i: Matrix::zeros(hidden, z),
            w_c: Matrix::zeros(hidden, z),
            w_o: Matrix::zeros(hidden, z),
            b_f: vec![0.0; hidden],
            b_i: vec![0.0; hidden],
            b_c: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
            w_y: vec![0.0; hidden],
            b_y: 0.0,
        }
    }

    /// Every parameter tensor in a fixed order: gate weights, gate biases, head.
    pub fn tensors(&self) -> [&[f64]; 10] {
        [
            &self.w_f.data,
            &self.w_i.data,
            &self.w_c.data,
            &self.w_o.data,
            &self.b_f,
            &self.b_i,
            &self.b_c,
            &self.b_o,
            &self.w_y,
            std::slice::from_ref(&self.b_y),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 10] {
        [
            &mut self.w_f.data,
            &mut self.w_i.data,
            &mut self.w_c.data,
            &mut self.w_o.data,
            &mut self.b_f,
            &mut self.b_i,
            &mut self.b_c,
            &mut self.b_o,
            &mut self.w_y,
            std::slice::from_mut(&mut self.b_y),
        ]
    }

    pub const TENSOR_NAMES: [&'static str; 10] = ["W_f", "W_i", "W_C", "W_o", "b_f", "b_i", "b_C", "b_o", "W_y", "b_y"];

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Checks that every tensor agrees with `hidden` and `input_dim`.
    pub fn validate(&self) -> Result<()> {
        let (h, z) = (self.hidden, self.hidden + self.input_dim);
        for (name, m) in [("W_f", &self.w_f), ("W_i", &self.w_i), ("W_C", &self.w_c), ("W_o", &self.w_o)] {
            if m.rows != h || m.cols != z || m.data.len() != h * z {
                return Err(Error::ShapeMismatch(format!(
                    "{name} is {}x{} ({} values), expected {h}x{z}",
                    m.rows,
                    m.cols,
                    m.data.len()
                )));
            }
        }
        for (name, b) in
            [("b_f", &self.b_f), ("b_i", &self.b_i), ("b_C", &self.b_c), ("b_o", &self.b_o), ("W_y", &self.w_y)]
        {
            if b.len() != h {
                return Err(Error::ShapeMismatch(format!("{name} has length {}, expected {h}", b.len())));
            }
        }
        Ok(())
    }
}

/// Uniform `±√(6/(fan_in+fan_out))` weights, zero biases except `b_f = 1`.
pub fn init_params(hidden: usize, input_dim: usize, seed: u64) -> Result<LstmParams> {
    if hidden == 0 || input_dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "LSTM dimensions must be positive (hidden {hidden}, input {input_dim})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = LstmParams::zeros(hidden, input_dim);
    let gate_bound = (6.0 / (hidden + input_dim + hidden) as f64).sqrt();
    for m in [&mut p.w_f, &mut p.w_i, &mut p.w_c, &mut p.w_o] {
        for v in &mut m.data {
            *v = rng.random_range(-gate_bound..=gate_bound);
        }
    }
    let head_bound = (6.0 / (hidden + 1) as f64).sqrt();
    for v in &mut p.w_y {
        *v = rng.random_range(-head_bound..=head_bound);
    }
    p.b_f.fill(1.0);
    Ok(p)
}
