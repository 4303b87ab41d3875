//! Numerical integration of the latent style variable, as an oracle for
//! the closed-form two-covariance likelihoods in one and two dimensions.

#![allow(dead_code)]

use calav_core::bfs::*;
use calav_core::linalg::Matrix;
use calav_core::rng::rng_from;
use rand::Rng;
use std::f64::consts::PI;

pub const TOL: f64 = 1e-6;

/// Symmetric matrix of size 1 or 2, stored dense.
#[derive(Clone, Copy, Debug)]
pub struct Sym {
    d: usize,
    a: f64,
    b: f64,
    c: f64,
}

impl Sym {
    fn from(m: &Matrix) -> Self {
        if m.rows() == 1 {
            Sym {
                d: 1,
                a: m[(0, 0)],
                b: 0.0,
                c: 0.0,
            }
        } else {
            Sym {
                d: 2,
                a: m[(0, 0)],
                b: m[(0, 1)],
                c: m[(1, 1)],
            }
        }
    }

    pub fn det(&self) -> f64 {
        if self.d == 1 {
            self.a
        } else {
            self.a * self.c - self.b * self.b
        }
    }

    pub fn inv(&self) -> Sym {
        if self.d == 1 {
            Sym {
                a: 1.0 / self.a,
                ..*self
            }
        } else {
            let k = self.det();
            Sym {
                d: 2,
                a: self.c / k,
                b: -self.b / k,
                c: self.a / k,
            }
        }
    }

    fn add(&self, o: &Sym, s: f64) -> Sym {
        Sym {
            d: self.d,
            a: self.a + s * o.a,
            b: self.b + s * o.b,
            c: self.c + s * o.c,
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        if self.d == 1 {
            vec![self.a * x[0]]
        } else {
            vec![self.a * x[0] + self.b * x[1], self.b * x[0] + self.c * x[1]]
        }
    }

    fn quad(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// `log N(x; m, Σ)` given the precision `Σ⁻¹`.
pub fn log_gauss(x: &[f64], m: &[f64], precision: &Sym) -> f64 {
    let r: Vec<f64> = x.iter().zip(m).map(|(a, b)| a - b).collect();
    -0.5 * (precision.quad(&r) - precision.det().ln() + x.len() as f64 * (2.0 * PI).ln())
}

/// `log ∫ exp(f(s)) ds` by the trapezoid rule on a box around a Gaussian
/// bump with centre `m` and covariance `cov`.
pub fn log_integrate(f: impl Fn(&[f64]) -> f64, m: &[f64], cov: &Sym) -> f64 {
    const HALF_WIDTH: f64 = 11.0;
    const STEPS_PER_SD: f64 = 16.0;
    let sd = [cov.a.sqrt(), cov.c.sqrt()];
    let n = (2.0 * HALF_WIDTH * STEPS_PER_SD) as i64;
    let h: Vec<f64> = sd.iter().map(|s| s / STEPS_PER_SD).collect();
    let peak = f(m);
    let node = |k: usize, i: i64| m[k] + (i - n / 2) as f64 * h[k];
    let mut total = 0.0;
    if m.len() == 1 {
        for i in 0..=n {
            total += (f(&[node(0, i)]) - peak).exp();
        }
        total *= h[0];
    } else {
        for i in 0..=n {
            for j in 0..=n {
                total += (f(&[node(0, i), node(1, j)]) - peak).exp();
            }
        }
        total *= h[0] * h[1];
    }
    peak + total.ln()
}

pub struct Oracle {
    pub mu: Vec<f64>,
    pub w: Sym,
    pub b: Sym,
}

impl Oracle {
    pub fn new(params: &BfsParams) -> Self {
        Oracle {
            mu: params.mu.clone(),
            w: Sym::from(&params.within_precision()),
            b: Sym::from(&params.between_precision()),
        }
    }

    /// `log ∫ Π_k N(y_k | s, W⁻¹) · N(s | μ, B⁻¹) ds`
    pub fn log_marginal(&self, ys: &[&[f64]]) -> f64 {
        let post_prec = self.b.add(&self.w, ys.len() as f64);
        let post_cov = post_prec.inv();
        let mut rhs = self.b.apply(&self.mu);
        for y in ys {
            for (r, v) in rhs.iter_mut().zip(self.w.apply(y)) {
                *r += v;
            }
        }
        let centre = post_cov.apply(&rhs);
        let f = |s: &[f64]| {
            ys.iter().map(|y| log_gauss(y, s, &self.w)).sum::<f64>()
                + log_gauss(s, &self.mu, &self.b)
        };
        log_integrate(f, &centre, &post_cov)
    }

    pub fn same(&self, y_1: &[f64], y_2: &[f64]) -> f64 {
        self.log_marginal(&[y_1, y_2])
    }

    pub fn different(&self, y_1: &[f64], y_2: &[f64]) -> f64 {
        self.log_marginal(&[y_1]) + self.log_marginal(&[y_2])
    }
}

pub fn random_params(rng: &mut impl Rng, d: usize) -> BfsParams {
    let cfg = BfsConfig {
        dim: d,
        ..Default::default()
    };
    let mut p = BfsParams::init(3, &cfg, &mut rng_from(rng.gen()));
    for raw in [&mut p.within_raw, &mut p.between_raw] {
        for i in 0..d {
            raw[(i, i)] = rng.gen_range(-0.8..0.8);
            for j in 0..i {
                raw[(i, j)] = rng.gen_range(-0.6..0.6);
            }
        }
    }
    for m in p.mu.iter_mut() {
        *m = rng.gen_range(-1.0..1.0);
    }
    p
}

pub fn random_point(rng: &mut impl Rng, mu: &[f64]) -> Vec<f64> {
    mu.iter().map(|m| m + rng.gen_range(-2.5..2.5)).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Compare closed-form likelihoods and posteriors with quadrature on
/// `per_dim` random instances for each of `D_b = 1` and `D_b = 2`. Returns
/// the largest absolute deviation seen.
pub fn check_closed_form(seed: u64, per_dim: usize) -> Result<f64, String> {
    let mut rng = rng_from(seed);
    let mut worst = 0.0f64;
    for d in [1usize, 2] {
        for case in 0..per_dim {
            let p = random_params(&mut rng, d);
            let oracle = Oracle::new(&p);
            let y_1 = random_point(&mut rng, &p.mu);
            // some pairs close together, some far apart
            let y_2 = if case % 3 == 0 {
                y_1.iter().map(|v| v + rng.gen_range(-0.2..0.2)).collect()
            } else {
                random_point(&mut rng, &p.mu)
            };
            let err = |e| format!("d={d} case {case}: {e}");
            let same = log_likelihood_pair(&y_1, &y_2, &p, Hypothesis::SameAuthor).map_err(err)?;
            let diff =
                log_likelihood_pair(&y_1, &y_2, &p, Hypothesis::DifferentAuthors).map_err(err)?;
            let (score, post) = bfs_posterior(&y_1, &y_2, &p).map_err(err)?;
            let (q_same, q_diff) = (oracle.same(&y_1, &y_2), oracle.different(&y_1, &y_2));
            for (what, a, b) in [
                ("H1 log-likelihood", same, q_same),
                ("H0 log-likelihood", diff, q_diff),
                ("score", score, q_same - q_diff),
                ("posterior", post, sigmoid(q_same - q_diff)),
            ] {
                let dev = (a - b).abs();
                if !(dev < TOL) {
                    return Err(format!("d={d} case {case}: {what} {a} vs quadrature {b}"));
                }
                worst = worst.max(dev);
            }
        }
    }
    Ok(worst)
}
