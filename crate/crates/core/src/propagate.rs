//! Iterative label propagation with anchor resets.
//!
//! One step is `Y ← α·W̃·Y + (1−α)·Y0`; after each step the prototype and
//! few-shot rows are restored from `Y0`. With the default `α = 1` the
//! stabilizing term vanishes and the reset alone keeps anchors fixed. Between
//! stream arrivals the test rows are carried forward as attenuated argmax
//! pseudo-labels.

use crate::error::{Error, Result};
use crate::graph::NormalizedGraph;
use crate::model::{HyperParams, LabelState};

/// Initial labels: identity over prototypes, one-hot few-shot rows and
/// `tests` zero rows.
pub fn init_labels(classes: usize, fewshot_labels: &[usize], tests: usize) -> Result<LabelState> {
    if classes < 2 {
        return Err(Error::TooFewClasses(classes));
    }
    let mut y = LabelState::zeros(classes, fewshot_labels.len(), tests);
    for c in 0..classes {
        y.row_mut(c)[c] = 1.0;
    }
    for (j, &class) in fewshot_labels.iter().enumerate() {
        if class >= classes {
            return Err(Error::InvalidLabel { class, classes });
        }
        y.row_mut(classes + j)[class] = 1.0;
    }
    Ok(y)
}

/// `α·(W̃·Y) + (1−α)·Y0`.
pub fn propagate_step(y: &LabelState, graph: &NormalizedGraph, alpha: f64, y0: &LabelState) -> LabelState {
    assert_eq!(graph.num_nodes(), y.num_rows(), "graph and label rows disagree");
    assert_eq!(y.num_rows(), y0.num_rows());
    let c = y.classes();
    let mut out = vec![0.0; y.as_slice().len()];
    graph.mul_dense(y.as_slice(), c, &mut out);
    if alpha != 1.0 {
        for (o, z) in out.iter_mut().zip(y0.as_slice()) {
            *o = alpha * *o + (1.0 - alpha) * z;
        }
    }
    LabelState::from_parts(c, y.num_fewshot(), y.num_tests(), out)
}

/// Restores the prototype and few-shot rows from `y0`; test rows are kept.
pub fn reset_labels(y: &mut LabelState, y0: &LabelState) {
    y.anchor_block_mut().copy_from_slice(y0.anchor_block());
}

/// Loop settings. [`Propagation::from`] a [`HyperParams`] gives the
/// streaming configuration (resets on).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagation {
    pub alpha: f64,
    pub iters: usize,
    pub reset: bool,
}

impl From<&HyperParams> for Propagation {
    fn from(h: &HyperParams) -> Self {
        Self { alpha: h.alpha, iters: h.iters, reset: true }
    }
}

/// `T` steps, each followed by an anchor reset.
pub fn run_propagation(graph: &NormalizedGraph, y0: &LabelState, hyper: &HyperParams) -> LabelState {
    run_propagation_with(graph, y0, Propagation::from(hyper), |_, _| {})
}

/// Like [`run_propagation`] with explicit settings. `observer` sees the
/// state after every step (after the reset, when enabled).
pub fn run_propagation_with<F>(
    graph: &NormalizedGraph,
    y0: &LabelState,
    settings: Propagation,
    mut observer: F,
) -> LabelState
where
    F: FnMut(usize, &LabelState),
{
    let mut y = y0.clone();
    for t in 0..settings.iters {
        y = propagate_step(&y, graph, settings.alpha, y0);
        if settings.reset {
            reset_labels(&mut y, y0);
        }
        observer(t, &y);
    }
    y
}

/// Index of the largest entry, ties to the lowest index. `None` when no entry
/// is positive.
pub fn argmax(row: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in row.iter().enumerate() {
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the largest score, ties to the lowest index. Unlike [`argmax`]
/// it accepts negative values.
pub fn nearest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Class of test row `test_index`. A row without label mass (an isolated
/// node) defers to `fallback`.
pub fn predict<F: FnOnce() -> usize>(y: &LabelState, test_index: usize, fallback: F) -> usize {
    argmax(y.test_row(test_index)).unwrap_or_else(fallback)
}

/// Carried pseudo-labels: each test row keeps only its argmax entry, scaled
/// by `beta`. Returned row-major, one row per observed test node.
pub fn attenuate(y: &LabelState, beta: f64) -> Vec<f64> {
    let c = y.classes();
    let mut out = vec![0.0; y.num_tests() * c];
    for (src, dst) in y.test_block().chunks_exact(c).zip(out.chunks_exact_mut(c)) {
        if let Some(k) = argmax(src) {
            dst[k] = beta * src[k];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node_graph() -> NormalizedGraph {
        NormalizedGraph::from_directed(2, [(1, 0, 0.8)], 10.0)
    }

    #[test]
    fn init_zero_shot() {
        let y = init_labels(3, &[], 4).unwrap();
        assert_eq!(y.num_rows(), 7);
        for c in 0..3 {
            for k in 0..3 {
                assert_eq!(y.row(c)[k], if c == k { 1.0 } else { 0.0 });
            }
        }
        assert!(y.test_block().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_fewshot_rows() {
        let y = init_labels(2, &[1, 0], 0).unwrap();
        assert_eq!(y.row(2), &[0.0, 1.0]);
        assert_eq!(y.row(3), &[1.0, 0.0]);
    }

    #[test]
    fn init_rejects_bad_input() {
        assert!(matches!(init_labels(1, &[], 0), Err(Error::TooFewClasses(1))));
        assert!(matches!(init_labels(2, &[2], 0), Err(Error::InvalidLabel { class: 2, .. })));
    }

    /// Two classes so the label state is valid; node 0 is the class-0
    /// prototype, node 1 a second prototype left unconnected, node 2 the test.
    #[test]
    fn single_edge_moves_full_mass() {
        let g = NormalizedGraph::from_directed(3, [(2, 0, 0.8)], 10.0);
        let y0 = init_labels(2, &[], 1).unwrap();
        let y1 = propagate_step(&y0, &g, 1.0, &y0);
        assert_eq!(y1.test_row(0), &[1.0, 0.0]);
        let yt = run_propagation(&g, &y0, &HyperParams { iters: 1, ..Default::default() });
        assert_eq!(yt.test_row(0), &[1.0, 0.0]);
        assert_eq!(two_node_graph().to_dense(), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_graph_and_fixed_point() {
        let g = NormalizedGraph::from_directed(3, std::iter::empty(), 10.0);
        let mut y0 = init_labels(2, &[], 1).unwrap();
        y0.row_mut(2)[1] = 0.4;
        let y1 = propagate_step(&y0, &g, 1.0, &y0);
        assert!(y1.as_slice().iter().all(|&v| v == 0.0));
        let half = propagate_step(&y0, &g, 0.25, &y0);
        let expect: Vec<f64> = y0.as_slice().iter().map(|v| 0.75 * v).collect();
        assert_eq!(half.as_slice(), expect.as_slice());
        let connected = NormalizedGraph::from_directed(3, [(2, 0, 0.9), (2, 1, 0.5)], 1.0);
        let still = propagate_step(&y0, &connected, 0.0, &y0);
        assert_eq!(still, y0);
    }

    #[test]
    fn reset_semantics() {
        let y0 = init_labels(2, &[1], 1).unwrap();
        let mut y = LabelState::zeros(2, 1, 1);
        y.as_mut_slice().iter_mut().enumerate().for_each(|(i, v)| *v = i as f64);
        let tests_before = y.test_block().to_vec();
        reset_labels(&mut y, &y0);
        assert_eq!(y.anchor_block(), y0.anchor_block());
        assert_eq!(y.test_block(), tests_before.as_slice());
        let once = y.clone();
        reset_labels(&mut y, &y0);
        assert_eq!(y, once);
    }

    #[test]
    fn disconnected_test_stays_empty() {
        let g = NormalizedGraph::from_directed(4, [(2, 0, 0.9)], 10.0);
        let y0 = init_labels(2, &[], 2).unwrap();
        for iters in 1..5 {
            let y = run_propagation(&g, &y0, &HyperParams { iters, ..Default::default() });
            assert_eq!(y.test_row(1), &[0.0, 0.0]);
        }
    }

    #[test]
    fn prediction_rules() {
        let mut y = LabelState::zeros(3, 0, 3);
        y.row_mut(3).copy_from_slice(&[0.1, 0.5, 0.2]);
        y.row_mut(4).copy_from_slice(&[0.3, 0.3, 0.0]);
        assert_eq!(predict(&y, 0, || 9), 1);
        assert_eq!(predict(&y, 1, || 9), 0);
        assert_eq!(predict(&y, 2, || 2), 2);
        assert_eq!(nearest(&[-0.5, -0.1, -0.1]), 1);
    }

    #[test]
    fn attenuation() {
        let mut y = LabelState::zeros(3, 0, 2);
        y.row_mut(3).copy_from_slice(&[0.1, 0.5, 0.2]);
        let carried = attenuate(&y, 0.2);
        assert_eq!(&carried[..3], &[0.0, 0.2 * 0.5, 0.0]);
        assert_eq!(&carried[3..], &[0.0, 0.0, 0.0]);
        assert!(attenuate(&y, 0.0).iter().all(|&v| v == 0.0));
    }
}
