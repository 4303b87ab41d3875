//! Adam with bias correction.

use alloc::vec;
use alloc::vec::Vec;

use crate::num;
use crate::params::Parameters;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct AdamConfig {
    pub beta_1: f64,
    pub beta_2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta_1: 0.9,
            beta_2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moments for one parameter group, flattened in
/// [`Parameters::visit`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn for_params(params: &dyn Parameters) -> Self {
        Self::new(params.num_parameters())
    }
}

/// One update of a flat parameter slice.
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) {
    assert_eq!(
        params.len(),
        grads.len(),
        "parameter/gradient length mismatch"
    );
    assert_eq!(
        params.len(),
        state.m.len(),
        "parameter/state length mismatch"
    );
    state.step += 1;
    let t = state.step as f64;
    let c1 = 1.0 - num::powf(cfg.beta_1, t);
    let c2 = 1.0 - num::powf(cfg.beta_2, t);
    for i in 0..params.len() {
        let g = grads[i];
        let m = cfg.beta_1 * state.m[i] + (1.0 - cfg.beta_1) * g;
        let v = cfg.beta_2 * state.v[i] + (1.0 - cfg.beta_2) * g * g;
        state.m[i] = m;
        state.v[i] = v;
        params[i] -= lr * (m / c1) / (num::sqrt(v / c2) + cfg.epsilon);
    }
}

/// Applies [`adam_update`] to a parameter group using its matching gradient
/// container.
pub fn optimizer_step(
    params: &mut dyn Parameters,
    grads: &dyn Parameters,
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) {
    let mut flat = params.flatten();
    adam_update(&mut flat, &grads.flatten(), state, lr, cfg);
    params.assign_flat(&flat);
}
