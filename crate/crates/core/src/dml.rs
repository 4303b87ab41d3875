//! Metric-learning head: LEV projection, squared distance, kernel posterior
//! and the contrastive losses.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::encoder::glorot;
use crate::linalg::Matrix;
use crate::num;
use crate::params::Parameters;
use crate::rng::Rng;

/// Lower clamp on `d` inside `d^α`.
pub const DISTANCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DmlLoss {
    /// Hinge on the kernel posterior.
    #[default]
    Probabilistic,
    /// Hinge on the raw distance.
    Legacy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct DmlConfig {
    /// `D_lev`
    pub lev_dim: usize,
    pub loss: DmlLoss,
    pub tau_s: f64,
    pub tau_d: f64,
    pub legacy_tau_s: f64,
    pub legacy_tau_d: f64,
    /// Train γ and α, or keep them at their initial fit.
    pub learn_kernel: bool,
}

impl Default for DmlConfig {
    fn default() -> Self {
        Self {
            lev_dim: 32,
            loss: DmlLoss::Probabilistic,
            tau_s: 0.91,
            tau_d: 0.09,
            legacy_tau_s: 1.0,
            legacy_tau_d: 3.0,
            learn_kernel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmlParams {
    /// `D_lev × D_x`
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub log_gamma: f64,
    pub log_alpha: f64,
}

impl DmlParams {
    pub fn init(input_dim: usize, lev_dim: usize, rng: &mut Rng) -> Self {
        let (log_gamma, log_alpha) = init_kernel_params();
        Self {
            weight: glorot(rng, lev_dim, input_dim),
            bias: vec![0.0; lev_dim],
            log_gamma,
            log_alpha,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: Matrix::zeros(self.weight.rows(), self.weight.cols()),
            bias: vec![0.0; self.bias.len()],
            log_gamma: 0.0,
            log_alpha: 0.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        num::exp(self.log_gamma)
    }

    pub fn alpha(&self) -> f64 {
        num::exp(self.log_alpha)
    }

    pub fn lev_dim(&self) -> usize {
        self.bias.len()
    }
}

impl Parameters for DmlParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f(
            "weight",
            &[self.weight.rows(), self.weight.cols()],
            self.weight.as_slice(),
        );
        f("bias", &[self.bias.len()], &self.bias);
        f("log_gamma", &[1], core::slice::from_ref(&self.log_gamma));
        f("log_alpha", &[1], core::slice::from_ref(&self.log_alpha));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let (r, c) = self.weight.shape();
        f("weight", &[r, c], self.weight.as_mut_slice());
        f("bias", &[self.bias.len()], &mut self.bias);
        f(
            "log_gamma",
            &[1],
            core::slice::from_mut(&mut self.log_gamma),
        );
        f(
            "log_alpha",
            &[1],
            core::slice::from_mut(&mut self.log_alpha),
        );
    }
}

/// `y = tanh(W x + b)`
pub fn project_lev(x: &[f64], params: &DmlParams) -> Vec<f64> {
    let mut y = params.weight.matvec(x);
    for (v, b) in y.iter_mut().zip(&params.bias) {
        *v = num::tanh(*v + b);
    }
    y
}

pub fn squared_distance(y_1: &[f64], y_2: &[f64]) -> f64 {
    y_1.iter().zip(y_2).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(-γ d^α)` with `d` clamped below at [`DISTANCE_EPS`], floored at the
/// smallest positive normal.
pub fn kernel(d: f64, gamma: f64, alpha: f64) -> f64 {
    num::exp(-gamma * num::powf(d.max(DISTANCE_EPS), alpha)).max(f64::MIN_POSITIVE)
}

/// `(d, p_dml)` for a pair of LEVs.
pub fn kernel_posterior(y_1: &[f64], y_2: &[f64], params: &DmlParams) -> (f64, f64) {
    let d = squared_distance(y_1, y_2);
    (d, kernel(d, params.gamma(), params.alpha()))
}

pub fn contrastive_loss(p: f64, a: bool, tau_s: f64, tau_d: f64) -> f64 {
    if a {
        let m = (tau_s - p).max(0.0);
        m * m
    } else {
        let m = (p - tau_d).max(0.0);
        m * m
    }
}

/// Distance-margin loss: same-author distances below `tau_s`, different
/// author distances above `tau_d`.
pub fn legacy_contrastive_loss(d: f64, a: bool, tau_s: f64, tau_d: f64) -> f64 {
    if a {
        let m = (d - tau_s).max(0.0);
        m * m
    } else {
        let m = (tau_d - d).max(0.0);
        m * m
    }
}

/// Target curve for the kernel initialization.
pub fn cosine_target(d: f64) -> f64 {
    0.5 * (1.0 + num::cos(PI * d / 4.0))
}

const FIT_POINTS: usize = 41;
const FIT_TOLERANCE: f64 = 1e-10;

fn fit_objective(log_gamma: f64, log_alpha: f64) -> f64 {
    let (g, a) = (num::exp(log_gamma), num::exp(log_alpha));
    (0..FIT_POINTS)
        .map(|k| {
            let d = 4.0 * k as f64 / (FIT_POINTS - 1) as f64;
            let r = kernel(d, g, a) - cosine_target(d);
            r * r
        })
        .sum()
}

fn golden_section(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (num::sqrt(5.0) - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-13 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Least-squares fit of `exp(-γ d^α)` to [`cosine_target`] on 41 points of
/// `[0, 4]`, by coordinate descent over `(ln γ, ln α)`. Returns
/// `(log_gamma, log_alpha)`.
pub fn init_kernel_params() -> (f64, f64) {
    let (mut lg, mut la) = (0.0f64, 0.0f64);
    let mut prev = fit_objective(lg, la);
    for _ in 0..100_000 {
        lg = golden_section(lg - 2.0, lg + 2.0, |x| fit_objective(x, la));
        la = golden_section(la - 2.0, la + 2.0, |x| fit_objective(lg, x));
        let obj = fit_objective(lg, la);
        if prev - obj < FIT_TOLERANCE * 1e-3 {
            break;
        }
        prev = obj;
    }
    (lg, la)
}

/// Forward values of one pair through the head.
#[derive(Debug, Clone, PartialEq)]
pub struct DmlPairTrace {
    pub y_1: Vec<f64>,
    pub y_2: Vec<f64>,
    pub distance: f64,
    pub p_dml: f64,
}

pub fn dml_pair_forward(x_1: &[f64], x_2: &[f64], params: &DmlParams) -> DmlPairTrace {
    let y_1 = project_lev(x_1, params);
    let y_2 = project_lev(x_2, params);
    let (distance, p_dml) = kernel_posterior(&y_1, &y_2, params);
    DmlPairTrace {
        y_1,
        y_2,
        distance,
        p_dml,
    }
}

pub fn dml_pair_loss(trace: &DmlPairTrace, a: bool, cfg: &DmlConfig) -> f64 {
    match cfg.loss {
        DmlLoss::Probabilistic => contrastive_loss(trace.p_dml, a, cfg.tau_s, cfg.tau_d),
        DmlLoss::Legacy => {
            legacy_contrastive_loss(trace.distance, a, cfg.legacy_tau_s, cfg.legacy_tau_d)
        }
    }
}

/// Accumulates `scale · ∂loss/∂ψ,γ,α` into `grads` and returns
/// `(∂loss/∂x_1, ∂loss/∂x_2)` scaled the same way.
pub fn dml_pair_backward(
    trace: &DmlPairTrace,
    x_1: &[f64],
    x_2: &[f64],
    a: bool,
    params: &DmlParams,
    cfg: &DmlConfig,
    scale: f64,
    grads: &mut DmlParams,
) -> (Vec<f64>, Vec<f64>) {
    let d = trace.distance;
    let grad_d = match cfg.loss {
        DmlLoss::Probabilistic => {
            let p = trace.p_dml;
            let grad_p = if a {
                -2.0 * (cfg.tau_s - p).max(0.0)
            } else {
                2.0 * (p - cfg.tau_d).max(0.0)
            } * scale;
            if grad_p == 0.0 {
                return (vec![0.0; x_1.len()], vec![0.0; x_2.len()]);
            }
            let (gamma, alpha) = (params.gamma(), params.alpha());
            let dc = d.max(DISTANCE_EPS);
            let gd_alpha = gamma * num::powf(dc, alpha);
            if cfg.learn_kernel {
                grads.log_gamma += grad_p * (-p * gd_alpha);
                grads.log_alpha += grad_p * (-p * gd_alpha * alpha * num::ln(dc));
            }
            if d > DISTANCE_EPS {
                grad_p * (-p * gamma * alpha * num::powf(dc, alpha - 1.0))
            } else {
                0.0
            }
        }
        DmlLoss::Legacy => {
            scale
                * if a {
                    2.0 * (d - cfg.legacy_tau_s).max(0.0)
                } else {
                    -2.0 * (cfg.legacy_tau_d - d).max(0.0)
                }
        }
    };
    let mut dz_1: Vec<f64> = Vec::with_capacity(trace.y_1.len());
    let mut dz_2: Vec<f64> = Vec::with_capacity(trace.y_2.len());
    for (a1, a2) in trace.y_1.iter().zip(&trace.y_2) {
        let gy = 2.0 * grad_d * (a1 - a2);
        dz_1.push(gy * (1.0 - a1 * a1));
        dz_2.push(-gy * (1.0 - a2 * a2));
    }
    let mut gx_1 = vec![0.0; x_1.len()];
    let mut gx_2 = vec![0.0; x_2.len()];
    for (dz, x, gx) in [(&dz_1, x_1, &mut gx_1), (&dz_2, x_2, &mut gx_2)] {
        grads.weight.add_outer(1.0, dz, x);
        num::axpy(1.0, dz, &mut grads.bias);
        params.weight.matvec_t_acc(dz, gx);
    }
    (gx_1, gx_2)
}
