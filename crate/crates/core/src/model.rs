//! Domain types shared by the engine: embeddings, hyperparameters, the
//! partitioned label matrix and the context statistics used for edge
//! re-weighting.
//!
//! Node ids are global and laid out block by block: prototypes occupy
//! `0..C`, few-shot exemplars `C..C+N_l`, and test samples follow in arrival
//! order. Every tie in the engine is broken toward the lower id.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global node index (prototypes, then few-shot, then tests).
pub type NodeId = usize;

/// Tolerance on the unit-norm invariant of an [`Embedding`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Prototype,
    FewShot,
    Test,
}

/// A unit-length feature vector tagged with the block it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
    kind: NodeKind,
    class_id: Option<usize>,
}

impl Embedding {
    /// Normalizes `values` to unit length. Zero and non-finite vectors are
    /// rejected.
    pub fn new(values: Vec<f64>, kind: NodeKind, class_id: Option<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        match (kind, class_id) {
            (NodeKind::Test, Some(_)) => return Err(Error::Config("test embeddings carry no class id".into())),
            (NodeKind::Prototype | NodeKind::FewShot, None) => {
                return Err(Error::Config(format!("{kind:?} embedding needs a class id")))
            }
            _ => {}
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let values = values.into_iter().map(|v| v / norm).collect();
        Ok(Self { values, kind, class_id })
    }

    pub fn prototype(values: Vec<f64>, class_id: usize) -> Result<Self> {
        Self::new(values, NodeKind::Prototype, Some(class_id))
    }

    pub fn fewshot(values: Vec<f64>, class_id: usize) -> Result<Self> {
        Self::new(values, NodeKind::FewShot, Some(class_id))
    }

    pub fn test(values: Vec<f64>) -> Result<Self> {
        Self::new(values, NodeKind::Test, None)
    }

    /// Builds an embedding from single-precision file data.
    pub fn from_f32(values: &[f32], kind: NodeKind, class_id: Option<usize>) -> Result<Self> {
        Self::new(values.iter().map(|&v| f64::from(v)).collect(), kind, class_id)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn class_id(&self) -> Option<usize> {
        self.class_id
    }
}

/// The fixed knobs of the method. Defaults are the values used across all
/// tasks: 3 prototype, 8 test and 8 few-shot neighbours, power 10,
/// carry-over 0.2, mixing 1.0 and 3 propagation steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Neighbours per test node among prototypes.
    pub k_prototype: usize,
    /// Neighbours per test node among other test nodes. Zero drops the block.
    pub k_test: usize,
    /// Neighbours per test node among few-shot exemplars. Zero drops the block.
    pub k_fewshot: usize,
    /// Elementwise power applied to the symmetrized adjacency.
    pub gamma: f64,
    /// Attenuation of carried pseudo-labels between arrivals.
    pub beta: f64,
    /// Propagation mixing weight.
    pub alpha: f64,
    /// Propagation steps per arrival.
    pub iters: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self { k_prototype: 3, k_test: 8, k_fewshot: 8, gamma: 10.0, beta: 0.2, alpha: 1.0, iters: 3 }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_prototype == 0 {
            return Err(Error::Config("k_prototype must be positive".into()));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.iters == 0 {
            return Err(Error::Config("iters must be positive".into()));
        }
        Ok(())
    }
}

/// Per-dimension mean and population variance of the prototype set and,
/// when exemplars exist, of the pooled few-shot set.
///
/// The means are not used when scoring edges; they are kept for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextStats {
    pub mu_p: Vec<f64>,
    pub var_p: Vec<f64>,
    pub mu_l: Option<Vec<f64>>,
    pub var_l: Option<Vec<f64>>,
}

/// The label matrix `Y = [Y_p; Y_l; Y_u]`, stored row-major with one row per
/// node in global id order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelState {
    classes: usize,
    fewshot: usize,
    tests: usize,
    data: Vec<f64>,
}

impl LabelState {
    /// All-zero state with `classes` prototype rows.
    pub fn zeros(classes: usize, fewshot: usize, tests: usize) -> Self {
        Self { classes, fewshot, tests, data: vec![0.0; (classes + fewshot + tests) * classes] }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn num_fewshot(&self) -> usize {
        self.fewshot
    }

    pub fn num_tests(&self) -> usize {
        self.tests
    }

    pub fn num_rows(&self) -> usize {
        self.classes + self.fewshot + self.tests
    }

    /// Global row index of the first test node.
    pub fn test_offset(&self) -> usize {
        self.classes + self.fewshot
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, node: NodeId) -> &[f64] {
        &self.data[node * self.classes..(node + 1) * self.classes]
    }

    pub fn row_mut(&mut self, node: NodeId) -> &mut [f64] {
        let c = self.classes;
        &mut self.data[node * c..(node + 1) * c]
    }

    pub fn test_row(&self, test_index: usize) -> &[f64] {
        self.row(self.test_offset() + test_index)
    }

    /// The `Y_p` and `Y_l` rows as one contiguous slice.
    pub fn anchor_block(&self) -> &[f64] {
        &self.data[..self.test_offset() * self.classes]
    }

    pub fn anchor_block_mut(&mut self) -> &mut [f64] {
        let end = self.test_offset() * self.classes;
        &mut self.data[..end]
    }

    pub fn test_block(&self) -> &[f64] {
        &self.data[self.test_offset() * self.classes..]
    }

    pub fn test_block_mut(&mut self) -> &mut [f64] {
        let start = self.test_offset() * self.classes;
        &mut self.data[start..]
    }

    /// Replaces the test block with `rows` (row-major, `C` columns each).
    pub fn set_test_block(&mut self, rows: &[f64]) {
        assert_eq!(rows.len() % self.classes, 0, "ragged test block");
        let keep = self.test_offset() * self.classes;
        self.data.truncate(keep);
        self.data.extend_from_slice(rows);
        self.tests = rows.len() / self.classes;
    }

    pub(crate) fn from_parts(classes: usize, fewshot: usize, tests: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), (classes + fewshot + tests) * classes);
        Self { classes, fewshot, tests, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_is_normalized() {
        let e = Embedding::test(vec![3.0, 4.0]).unwrap();
        assert_eq!(e.values(), &[0.6, 0.8]);
        let norm: f64 = e.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= UNIT_NORM_TOLERANCE);
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(matches!(Embedding::test(vec![0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(Embedding::test(vec![1.0, f64::NAN]), Err(Error::NonFinite(1))));
    }

    #[test]
    fn class_id_presence_matches_kind() {
        assert!(Embedding::new(vec![1.0], NodeKind::Test, Some(0)).is_err());
        assert!(Embedding::new(vec![1.0], NodeKind::Prototype, None).is_err());
        assert!(Embedding::fewshot(vec![1.0], 2).is_ok());
    }

    #[test]
    fn default_hyperparams() {
        let h = HyperParams::default();
        assert_eq!((h.k_prototype, h.k_test, h.k_fewshot, h.iters), (3, 8, 8, 3));
        assert_eq!((h.gamma, h.beta, h.alpha), (10.0, 0.2, 1.0));
        h.validate().unwrap();
    }

    #[test]
    fn hyperparam_validation() {
        let bad = [
            HyperParams { k_prototype: 0, ..Default::default() },
            HyperParams { gamma: 0.0, ..Default::default() },
            HyperParams { beta: 1.5, ..Default::default() },
            HyperParams { alpha: 0.0, ..Default::default() },
            HyperParams { iters: 0, ..Default::default() },
        ];
        for h in bad {
            assert!(h.validate().is_err(), "{h:?}");
        }
        let ablated = HyperParams { k_test: 0, k_fewshot: 0, ..Default::default() };
        ablated.validate().unwrap();
    }

    #[test]
    fn label_state_blocks() {
        let mut y = LabelState::zeros(2, 1, 2);
        assert_eq!(y.num_rows(), 5);
        assert_eq!(y.test_offset(), 3);
        y.row_mut(3)[1] = 7.0;
        assert_eq!(y.test_row(0), &[0.0, 7.0]);
        y.set_test_block(&[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]);
        assert_eq!(y.num_tests(), 3);
        assert_eq!(y.test_row(2), &[0.5, 0.5]);
        assert_eq!(y.anchor_block().len(), 6);
    }
}
