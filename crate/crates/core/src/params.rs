//! Uniform access to named parameter tensors, used by the optimizer and by
//! checkpointing.

use alloc::string::String;
use alloc::vec::Vec;

/// A group of trainable tensors. Gradients use the same type as the
/// parameters they belong to, so the visiting order doubles as the flat
/// layout seen by the optimizer.
pub trait Parameters {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64]));

    fn num_parameters(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, _, d| n += d.len());
        n
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_parameters());
        self.visit(&mut |_, _, d| out.extend_from_slice(d));
        out
    }

    /// Overwrite from a flat buffer laid out like [`Parameters::flatten`].
    fn assign_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        self.visit_mut(&mut |_, _, d| {
            d.copy_from_slice(&flat[offset..offset + d.len()]);
            offset += d.len();
        });
        assert_eq!(offset, flat.len(), "flat buffer length mismatch");
    }

    fn zero(&mut self) {
        self.visit_mut(&mut |_, _, d| d.iter_mut().for_each(|x| *x = 0.0));
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |_, _, d| ok &= crate::num::all_finite(d));
        ok
    }
}

impl<T: Parameters + ?Sized> Parameters for &mut T {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        (**self).visit(f)
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        (**self).visit_mut(f)
    }
}

/// Groups visited in order, as one optimizer group.
impl<A: Parameters, B: Parameters, C: Parameters> Parameters for (A, B, C) {
    fn visit(&self, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.0.visit(f);
        self.1.visit(f);
        self.2.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.0.visit_mut(f);
        self.1.visit_mut(f);
        self.2.visit_mut(f);
    }
}

/// Owned copy of one tensor, as stored in checkpoints.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Snapshot every tensor in `params`, prefixing names with `group.`.
pub fn export_tensors(group: &str, params: &dyn Parameters, out: &mut Vec<NamedTensor>) {
    params.visit(&mut |name, shape, data| {
        let mut full = String::from(group);
        full.push('.');
        full.push_str(name);
        out.push(NamedTensor {
            name: full,
            shape: shape.to_vec(),
            data: data.to_vec(),
        });
    });
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImportError {
    #[error("missing tensor `{0}`")]
    Missing(String),
    #[error("tensor `{name}` has shape {found:?}, expected {expected:?}")]
    Shape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
}

/// Fill `params` from tensors named `group.<name>`.
pub fn import_tensors(
    group: &str,
    params: &mut dyn Parameters,
    tensors: &[NamedTensor],
) -> Result<(), ImportError> {
    let mut err = None;
    params.visit_mut(&mut |name, shape, data| {
        if err.is_some() {
            return;
        }
        let mut full = String::from(group);
        full.push('.');
        full.push_str(name);
        match tensors.iter().find(|t| t.name == full) {
            None => err = Some(ImportError::Missing(full)),
            Some(t) if t.shape != shape || t.data.len() != data.len() => {
                err = Some(ImportError::Shape {
                    name: full,
                    expected: shape.to_vec(),
                    found: t.shape.clone(),
                })
            }
            Some(t) => data.copy_from_slice(&t.data),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
