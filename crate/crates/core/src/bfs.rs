//! Bayes factor scoring under a two-covariance Gaussian model.
//!
//! A projected LEV is modelled as `y = s + n` with speaker-like term
//! `s ~ N(μ, B⁻¹)` and noise `n ~ N(0, W⁻¹)`. For a pair, the sum
//! `u + v` and difference `u − v` of the centred vectors are independent
//! Gaussians under either hypothesis:
//!
//! | hypothesis | cov(u + v)     | cov(u − v) |
//! |------------|----------------|------------|
//! | same       | 4Σ_b + 2Σ_w    | 2Σ_w       |
//! | different  | 2Σ_b + 2Σ_w    | 2Σ_b + 2Σ_w|
//!
//! with `Σ_w = W⁻¹`, `Σ_b = B⁻¹`. The change of variables contributes
//! `D ln 2` to both log-likelihoods.
//!
//! Both precisions are stored as lower-triangular Cholesky factors whose
//! diagonal is kept in log space, so a zero raw matrix is the identity.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use crate::encoder::glorot;
use crate::linalg::{self, LinalgError, Matrix};
use crate::num;
use crate::params::Parameters;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    #[default]
    Swish,
    Tanh,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Swish => z * num::sigmoid(z),
            Activation::Tanh => num::tanh(z),
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Swish => {
                let s = num::sigmoid(z);
                s * (1.0 + z * (1.0 - s))
            }
            Activation::Tanh => {
                let t = num::tanh(z);
                1.0 - t * t
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Swish => "swish",
            Activation::Tanh => "tanh",
        }
    }
}

impl core::str::FromStr for Activation {
    type Err = UnknownActivation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "swish" => Ok(Activation::Swish),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(UnknownActivation),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown activation (expected swish or tanh)")]
pub struct UnknownActivation;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct BfsConfig {
    /// `D_b`
    pub dim: usize,
    pub activation: Activation,
    /// Prior probability of the same-author hypothesis.
    pub prior: f64,
}

impl Default for BfsConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            activation: Activation::Swish,
            prior: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `H_0`
    DifferentAuthors,
    /// `H_1`
    SameAuthor,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BfsError {
    #[error("{matrix} is not numerically positive definite: {source}")]
    NotPositiveDefinite {
        matrix: &'static str,
        #[source]
        source: LinalgError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfsParams {
    /// `D_b × D_lev`
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub mu: Vec<f64>,
    /// Raw Cholesky factor of `W`: strict lower triangle as is, diagonal
    /// as `ln L_ii`, upper triangle ignored.
    pub within_raw: Matrix,
    /// Raw Cholesky factor of `B`, same layout.
    pub between_raw: Matrix,
    pub activation: Activation,
}

impl BfsParams {
    pub fn init(lev_dim: usize, cfg: &BfsConfig, rng: &mut Rng) -> Self {
        Self {
            weight: glorot(rng, cfg.dim, lev_dim),
            bias: vec![0.0; cfg.dim],
            mu: vec![0.0; cfg.dim],
            within_raw: Matrix::zeros(cfg.dim, cfg.dim),
            between_raw: Matrix::zeros(cfg.dim, cfg.dim),
            activation: cfg.activation,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let d = self.dim();
        Self {
            weight: Matrix::zeros(self.weight.rows(), self.weight.cols()),
            bias: vec![0.0; d],
            mu: vec![0.0; d],
            within_raw: Matrix::zeros(d, d),
            between_raw: Matrix::zeros(d, d),
            activation: self.activation,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Within-author precision `W = L_W L_Wᵀ`.
    pub fn within_precision(&self) -> Matrix {
        let l = cholesky_factor(&self.within_raw);
        l.matmul(&l.transpose())
    }

    /// Between-author precision `B = L_B L_Bᵀ`.
    pub fn between_precision(&self) -> Matrix {
        let l = cholesky_factor(&self.between_raw);
        l.matmul(&l.transpose())
    }
}

impl Parameters for BfsParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        let d = self.dim();
        f(
            "weight",
            &[self.weight.rows(), self.weight.cols()],
            self.weight.as_slice(),
        );
        f("bias", &[d], &self.bias);
        f("mu", &[d], &self.mu);
        f("within_factor", &[d, d], self.within_raw.as_slice());
        f("between_factor", &[d, d], self.between_raw.as_slice());
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let d = self.dim();
        let (r, c) = self.weight.shape();
        f("weight", &[r, c], self.weight.as_mut_slice());
        f("bias", &[d], &mut self.bias);
        f("mu", &[d], &mut self.mu);
        f("within_factor", &[d, d], self.within_raw.as_mut_slice());
        f("between_factor", &[d, d], self.between_raw.as_mut_slice());
    }
}

/// Lower-triangular factor from its raw storage.
pub fn cholesky_factor(raw: &Matrix) -> Matrix {
    let n = raw.rows();
    Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        core::cmp::Ordering::Greater => raw[(i, j)],
        core::cmp::Ordering::Equal => num::exp(raw[(i, i)]),
        core::cmp::Ordering::Less => 0.0,
    })
}

/// `f(W y + b)`
pub fn project_bfs(y: &[f64], params: &BfsParams) -> Vec<f64> {
    let mut z = params.weight.matvec(y);
    for (v, b) in z.iter_mut().zip(&params.bias) {
        *v = params.activation.apply(*v + b);
    }
    z
}

fn pre_activation(y: &[f64], params: &BfsParams) -> Vec<f64> {
    let mut z = params.weight.matvec(y);
    num::axpy(1.0, &params.bias, &mut z);
    z
}

/// Covariances and their inverses for one parameter state, shared by all
/// pairs of a batch.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    dim: usize,
    mu: Vec<f64>,
    sigma_w: Matrix,
    /// inverse of `2Σ_b + 2Σ_w`
    p0: Matrix,
    /// inverse of `4Σ_b + 2Σ_w`
    p1: Matrix,
    /// inverse of `2Σ_w`
    p2: Matrix,
    logdet_a0: f64,
    logdet_a1: f64,
    logdet_a2: f64,
    log_prior_odds: f64,
}

fn factorize(a: &Matrix, name: &'static str) -> Result<(Matrix, f64), BfsError> {
    let l = linalg::cholesky(a).map_err(|source| BfsError::NotPositiveDefinite {
        matrix: name,
        source,
    })?;
    Ok((
        linalg::spd_inverse_from_cholesky(&l),
        linalg::log_det_from_cholesky(&l),
    ))
}

fn covariance_from_raw(raw: &Matrix) -> Matrix {
    let inv = linalg::lower_inverse(&cholesky_factor(raw));
    let mut s = inv.transpose().matmul(&inv);
    linalg::symmetrize(&mut s);
    s
}

impl GaussianModel {
    pub fn prepare(params: &BfsParams, prior: f64) -> Result<Self, BfsError> {
        let sigma_w = covariance_from_raw(&params.within_raw);
        let sigma_b = covariance_from_raw(&params.between_raw);
        let mut a0 = sigma_b.scaled(2.0);
        a0.add_scaled(2.0, &sigma_w);
        let mut a1 = sigma_b.scaled(4.0);
        a1.add_scaled(2.0, &sigma_w);
        let a2 = sigma_w.scaled(2.0);
        let (p0, logdet_a0) = factorize(&a0, "different-author covariance")?;
        let (p1, logdet_a1) = factorize(&a1, "same-author sum covariance")?;
        let (p2, logdet_a2) = factorize(&a2, "same-author difference covariance")?;
        Ok(Self {
            dim: params.dim(),
            mu: params.mu.clone(),
            sigma_w,
            p0,
            p1,
            p2,
            logdet_a0,
            logdet_a1,
            logdet_a2,
            log_prior_odds: num::logit(prior),
        })
    }

    pub fn within_covariance(&self) -> &Matrix {
        &self.sigma_w
    }

    fn sum_diff(&self, y_1: &[f64], y_2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let s = (0..self.dim)
            .map(|k| y_1[k] + y_2[k] - 2.0 * self.mu[k])
            .collect();
        let t = (0..self.dim).map(|k| y_1[k] - y_2[k]).collect();
        (s, t)
    }

    fn log_normal(&self, x: &[f64], precision: &Matrix, logdet_cov: f64) -> f64 {
        -0.5 * (precision.quad_form(x) + logdet_cov + self.dim as f64 * num::ln(2.0 * PI))
    }

    pub fn log_likelihood(&self, y_1: &[f64], y_2: &[f64], hypothesis: Hypothesis) -> f64 {
        let (s, t) = self.sum_diff(y_1, y_2);
        let jac = self.dim as f64 * LN_2;
        match hypothesis {
            Hypothesis::SameAuthor => {
                self.log_normal(&s, &self.p1, self.logdet_a1)
                    + self.log_normal(&t, &self.p2, self.logdet_a2)
                    + jac
            }
            Hypothesis::DifferentAuthors => {
                self.log_normal(&s, &self.p0, self.logdet_a0)
                    + self.log_normal(&t, &self.p0, self.logdet_a0)
                    + jac
            }
        }
    }

    /// Log-likelihood ratio of same vs different author.
    pub fn score(&self, y_1: &[f64], y_2: &[f64]) -> f64 {
        let (s, t) = self.sum_diff(y_1, y_2);
        0.5 * (self.p0.quad_form(&s) + self.p0.quad_form(&t)
            - self.p1.quad_form(&s)
            - self.p2.quad_form(&t))
            + self.logdet_a0
            - 0.5 * (self.logdet_a1 + self.logdet_a2)
    }

    /// `(score, p_bfs)` where `p_bfs = sigmoid(score + logit(prior))`.
    pub fn posterior(&self, y_1: &[f64], y_2: &[f64]) -> (f64, f64) {
        let score = self.score(y_1, y_2);
        (score, num::sigmoid(score + self.log_prior_odds))
    }
}

/// Log-likelihood of an already projected pair under one hypothesis.
pub fn log_likelihood_pair(
    y_1: &[f64],
    y_2: &[f64],
    params: &BfsParams,
    hypothesis: Hypothesis,
) -> Result<f64, BfsError> {
    Ok(GaussianModel::prepare(params, 0.5)?.log_likelihood(y_1, y_2, hypothesis))
}

/// `(score, p_bfs)` of an already projected pair with equal priors.
pub fn bfs_posterior(y_1: &[f64], y_2: &[f64], params: &BfsParams) -> Result<(f64, f64), BfsError> {
    Ok(GaussianModel::prepare(params, 0.5)?.posterior(y_1, y_2))
}

/// Binary cross entropy with probabilities clamped at `1e-12`.
pub fn bfs_loss(p_bfs: f64, a: bool) -> f64 {
    let q = if a { p_bfs } else { 1.0 - p_bfs };
    -num::ln(q.max(num::PROB_EPS))
}

/// Same loss from the logit, without forming `p`.
pub fn bfs_loss_from_logit(logit: f64, a: bool) -> f64 {
    let l = if a {
        num::softplus(-logit)
    } else {
        num::softplus(logit)
    };
    l.min(-num::ln(num::PROB_EPS))
}

/// `(H_within, H_between)`: differential entropies of `N(·, W⁻¹)` and
/// `N(·, B⁻¹)`.
pub fn gaussian_entropies(params: &BfsParams) -> (f64, f64) {
    let d = params.dim();
    let base = 0.5 * d as f64 * num::ln(2.0 * PI * core::f64::consts::E);
    let log_diag = |raw: &Matrix| (0..d).map(|i| raw[(i, i)]).sum::<f64>();
    (
        base - log_diag(&params.within_raw),
        base - log_diag(&params.between_raw),
    )
}

/// Forward values of one pair, from LEVs to posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct BfsPairTrace {
    pub z_1: Vec<f64>,
    pub z_2: Vec<f64>,
    pub y_1: Vec<f64>,
    pub y_2: Vec<f64>,
    pub score: f64,
    pub p_bfs: f64,
}

pub fn bfs_pair_forward(
    lev_1: &[f64],
    lev_2: &[f64],
    params: &BfsParams,
    model: &GaussianModel,
) -> BfsPairTrace {
    let z_1 = pre_activation(lev_1, params);
    let z_2 = pre_activation(lev_2, params);
    let f = params.activation;
    let y_1: Vec<f64> = z_1.iter().map(|&z| f.apply(z)).collect();
    let y_2: Vec<f64> = z_2.iter().map(|&z| f.apply(z)).collect();
    let (score, p_bfs) = model.posterior(&y_1, &y_2);
    BfsPairTrace {
        z_1,
        z_2,
        y_1,
        y_2,
        score,
        p_bfs,
    }
}

/// Gradient of `Σ_k weight · bfs_loss(p_k, a_k)` over a batch.
///
/// `pairs` yields `(trace, lev_1, lev_2, a)`. LEVs are constants. The
/// per-pair gradient on the logit is `p − a` everywhere, including where the
/// reported loss is clamped.
pub fn bfs_backward<'a>(
    pairs: impl IntoIterator<Item = (&'a BfsPairTrace, &'a [f64], &'a [f64], bool)>,
    params: &BfsParams,
    model: &GaussianModel,
    weight: f64,
) -> BfsParams {
    let d = params.dim();
    let mut grads = params.zeros_like();
    let mut s_ss = Matrix::zeros(d, d);
    let mut s_tt = Matrix::zeros(d, d);
    let mut g_total = 0.0;
    for (tr, lev_1, lev_2, a) in pairs {
        let g = weight * (tr.p_bfs - if a { 1.0 } else { 0.0 });
        if g == 0.0 {
            continue;
        }
        let (s, t) = model.sum_diff(&tr.y_1, &tr.y_2);
        s_ss.add_outer(g, &s, &s);
        s_tt.add_outer(g, &t, &t);
        g_total += g;
        let p0s = model.p0.matvec(&s);
        let p1s = model.p1.matvec(&s);
        let p0t = model.p0.matvec(&t);
        let p2t = model.p2.matvec(&t);
        for k in 0..d {
            let ds = g * (p0s[k] - p1s[k]);
            let dt = g * (p0t[k] - p2t[k]);
            grads.mu[k] -= 2.0 * ds;
            let dz_1 = (ds + dt) * params.activation.derivative(tr.z_1[k]);
            let dz_2 = (ds - dt) * params.activation.derivative(tr.z_2[k]);
            grads.bias[k] += dz_1 + dz_2;
            num::axpy(dz_1, lev_1, grads.weight.row_mut(k));
            num::axpy(dz_2, lev_2, grads.weight.row_mut(k));
        }
    }
    if g_total == 0.0 && s_ss.as_slice().iter().all(|&x| x == 0.0) {
        return grads;
    }
    // ∂/∂A for the three covariances
    let sandwich = |p: &Matrix, m: &Matrix| p.matmul(m).matmul(p);
    let mut g_a1 = sandwich(&model.p1, &s_ss);
    g_a1.add_scaled(-g_total, &model.p1);
    g_a1.scale(0.5);
    let mut g_a2 = sandwich(&model.p2, &s_tt);
    g_a2.add_scaled(-g_total, &model.p2);
    g_a2.scale(0.5);
    let mut both = s_ss.clone();
    both.add_scaled(1.0, &s_tt);
    let mut g_a0 = sandwich(&model.p0, &both);
    g_a0.add_scaled(-2.0 * g_total, &model.p0);
    g_a0.scale(-0.5);

    let mut g_sigma_b = g_a1.scaled(4.0);
    g_sigma_b.add_scaled(2.0, &g_a0);
    let mut g_sigma_w = g_a1.scaled(2.0);
    g_sigma_w.add_scaled(2.0, &g_a2);
    g_sigma_w.add_scaled(2.0, &g_a0);

    let sigma_b = covariance_from_raw(&params.between_raw);
    factor_gradient(
        &params.within_raw,
        &model.sigma_w,
        &g_sigma_w,
        &mut grads.within_raw,
    );
    factor_gradient(
        &params.between_raw,
        &sigma_b,
        &g_sigma_b,
        &mut grads.between_raw,
    );
    grads
}

/// Chain a covariance gradient through `Σ = (L Lᵀ)⁻¹` to the raw factor.
fn factor_gradient(raw: &Matrix, sigma: &Matrix, g_sigma: &Matrix, out: &mut Matrix) {
    let n = raw.rows();
    let mut g_prec = sigma.matmul(g_sigma).matmul(sigma);
    g_prec.scale(-1.0);
    linalg::symmetrize(&mut g_prec);
    let l = cholesky_factor(raw);
    let g_l = g_prec.matmul(&l);
    for i in 0..n {
        for j in 0..i {
            out[(i, j)] += 2.0 * g_l[(i, j)];
        }
        out[(i, i)] += 2.0 * g_l[(i, i)] * l[(i, i)];
    }
}
