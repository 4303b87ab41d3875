//! Uncertainty adaptation layer: a pair-dependent 2×2 confusion matrix that
//! maps the BFS posterior to the final posterior.

use alloc::vec;
use alloc::vec::Vec;

use crate::encoder::glorot;
use crate::linalg::Matrix;
use crate::num;
use crate::params::Parameters;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct UalConfig {
    /// `D_u`
    pub dim: usize,
    /// Weight of the entropy regularizer.
    pub beta: f64,
}

impl Default for UalConfig {
    fn default() -> Self {
        Self { dim: 16, beta: 0.1 }
    }
}

/// `C[j][i] = p(H_j | Ĥ_i)`; every column sums to one.
pub type Confusion = [[f64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct UalParams {
    /// `D_u × D_lev`
    pub weight: Matrix,
    pub bias: Vec<f64>,
    /// Row `2j + i` holds `w_ji`.
    pub confusion_weight: Matrix,
    /// Entry `2j + i` holds `b_ji`.
    pub confusion_bias: Vec<f64>,
}

impl UalParams {
    pub fn init(lev_dim: usize, dim: usize, rng: &mut Rng) -> Self {
        Self {
            weight: glorot(rng, dim, lev_dim),
            bias: vec![0.0; dim],
            confusion_weight: Matrix::zeros(4, dim),
            confusion_bias: vec![2.0, 0.0, 0.0, 2.0],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: Matrix::zeros(self.weight.rows(), self.weight.cols()),
            bias: vec![0.0; self.bias.len()],
            confusion_weight: Matrix::zeros(4, self.bias.len()),
            confusion_bias: vec![0.0; 4],
        }
    }
}

impl Parameters for UalParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f(
            "weight",
            &[self.weight.rows(), self.weight.cols()],
            self.weight.as_slice(),
        );
        f("bias", &[self.bias.len()], &self.bias);
        f(
            "confusion_weight",
            &[4, self.bias.len()],
            self.confusion_weight.as_slice(),
        );
        f("confusion_bias", &[4], &self.confusion_bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let (r, c) = self.weight.shape();
        f("weight", &[r, c], self.weight.as_mut_slice());
        f("bias", &[self.bias.len()], &mut self.bias);
        let d = self.bias.len();
        f(
            "confusion_weight",
            &[4, d],
            self.confusion_weight.as_mut_slice(),
        );
        f("confusion_bias", &[4], &mut self.confusion_bias);
    }
}

fn squared_difference(y_1: &[f64], y_2: &[f64]) -> Vec<f64> {
    y_1.iter()
        .zip(y_2)
        .map(|(a, b)| (a - b) * (a - b))
        .collect()
}

/// `tanh(W (y_1 − y_2)∘² + b)`
pub fn pair_representation(y_1: &[f64], y_2: &[f64], params: &UalParams) -> Vec<f64> {
    let mut y = params.weight.matvec(&squared_difference(y_1, y_2));
    for (v, b) in y.iter_mut().zip(&params.bias) {
        *v = num::tanh(*v + b);
    }
    y
}

/// Column-wise softmax of the logits `w_ji · y + b_ji`.
pub fn confusion_matrix(y_ual: &[f64], params: &UalParams) -> Confusion {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        let l0 = num::dot(params.confusion_weight.row(i), y_ual) + params.confusion_bias[i];
        let l1 = num::dot(params.confusion_weight.row(2 + i), y_ual) + params.confusion_bias[2 + i];
        let p1 = num::sigmoid(l1 - l0);
        c[0][i] = num::sigmoid(l0 - l1);
        c[1][i] = p1;
    }
    c
}

/// `p_ual = C · (1 − p_bfs, p_bfs)`
pub fn adapt_posterior(c: &Confusion, p_bfs: f64) -> [f64; 2] {
    let q = [1.0 - p_bfs, p_bfs];
    [
        c[0][0] * q[0] + c[0][1] * q[1],
        c[1][0] * q[0] + c[1][1] * q[1],
    ]
}

/// Negative log-likelihood of the true hypothesis plus `β Σ C ln C`.
pub fn ual_loss(p_ual: &[f64; 2], c: &Confusion, a: bool, beta: f64) -> f64 {
    let nll = -num::ln(p_ual[a as usize].max(num::PROB_EPS));
    nll + beta * neg_entropy(c)
}

fn neg_entropy(c: &Confusion) -> f64 {
    c.iter()
        .flatten()
        .map(|&x| x * num::ln(x.max(num::PROB_EPS)))
        .sum()
}

/// Mean over the two columns of the column entropy of `C`.
pub fn confusion_entropy(c: &Confusion) -> f64 {
    -0.5 * neg_entropy(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UalPairTrace {
    pub diff_sq: Vec<f64>,
    pub y_ual: Vec<f64>,
    pub confusion: Confusion,
    pub p_bfs: f64,
    pub p_ual: [f64; 2],
}

pub fn ual_pair_forward(
    lev_1: &[f64],
    lev_2: &[f64],
    p_bfs: f64,
    params: &UalParams,
) -> UalPairTrace {
    let diff_sq = squared_difference(lev_1, lev_2);
    let mut y_ual = params.weight.matvec(&diff_sq);
    for (v, b) in y_ual.iter_mut().zip(&params.bias) {
        *v = num::tanh(*v + b);
    }
    let confusion = confusion_matrix(&y_ual, params);
    let p_ual = adapt_posterior(&confusion, p_bfs);
    UalPairTrace {
        diff_sq,
        y_ual,
        confusion,
        p_bfs,
        p_ual,
    }
}

/// Accumulates `scale · ∂loss/∂λ` into `grads`. LEVs and `p_bfs` are
/// constants.
pub fn ual_pair_backward(
    trace: &UalPairTrace,
    a: bool,
    beta: f64,
    params: &UalParams,
    scale: f64,
    grads: &mut UalParams,
) {
    let c = &trace.confusion;
    let q = [1.0 - trace.p_bfs, trace.p_bfs];
    let p_a = trace.p_ual[a as usize];
    let mut d_c = [[0.0; 2]; 2];
    for j in 0..2 {
        for i in 0..2 {
            let mut g = 0.0;
            if j == a as usize && p_a > num::PROB_EPS {
                g -= q[i] / p_a;
            }
            g += beta
                * if c[j][i] > num::PROB_EPS {
                    num::ln(c[j][i]) + 1.0
                } else {
                    num::ln(num::PROB_EPS)
                };
            d_c[j][i] = g * scale;
        }
    }
    let d = trace.y_ual.len();
    let mut d_y = vec![0.0; d];
    for i in 0..2 {
        let mean = c[0][i] * d_c[0][i] + c[1][i] * d_c[1][i];
        for j in 0..2 {
            let d_logit = c[j][i] * (d_c[j][i] - mean);
            let row = 2 * j + i;
            grads.confusion_bias[row] += d_logit;
            num::axpy(d_logit, &trace.y_ual, grads.confusion_weight.row_mut(row));
            num::axpy(d_logit, params.confusion_weight.row(row), &mut d_y);
        }
    }
    let dz: Vec<f64> = d_y
        .iter()
        .zip(&trace.y_ual)
        .map(|(g, y)| g * (1.0 - y * y))
        .collect();
    grads.weight.add_outer(1.0, &dz, &trace.diff_sq);
    num::axpy(1.0, &dz, &mut grads.bias);
}
