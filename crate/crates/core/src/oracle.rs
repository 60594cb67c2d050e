//! Brute-force reference implementations.
//!
//! Everything here is dense and naive on purpose, and uses none of the
//! engine's graph, propagation or re-weighting code, so agreement between
//! the two is evidence rather than tautology. Only the plain domain types
//! from [`crate::model`] are shared.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{Embedding, HyperParams, NodeId};

/// Largest node count the dense oracles accept.
pub const MAX_ORACLE_NODES: usize = 500;

/// `Y∞ = (I − αW̃)⁻¹ Y0` by dense LU factorization.
pub fn closed_form_lp(w_norm: &DMatrix<f64>, y0: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    let n = w_norm.nrows();
    if w_norm.ncols() != n || y0.nrows() != n {
        return Err(Error::Config("closed-form oracle: shape mismatch".into()));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("closed-form oracle needs alpha in [0, 1), got {alpha}")));
    }
    if n > MAX_ORACLE_NODES {
        return Err(Error::Config(format!("closed-form oracle limited to {MAX_ORACLE_NODES} nodes")));
    }
    let system = DMatrix::<f64>::identity(n, n) - w_norm * alpha;
    system.lu().solve(y0).ok_or(Error::OracleSingular)
}

/// Scores every candidate, sorts all of them (score descending, id
/// ascending) and keeps the first `k`.
pub fn exhaustive_knn<F>(candidates: &[NodeId], k: usize, mut score: F) -> Vec<(NodeId, f64)>
where
    F: FnMut(NodeId) -> f64,
{
    let mut all: Vec<(NodeId, f64)> = candidates.iter().map(|&id| (id, score(id))).collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Largest eigenvalue magnitude of a symmetric matrix.
pub fn symmetric_spectral_radius(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Which similarities the dense pipeline re-weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleSwitches {
    pub text_reweight: bool,
    pub fewshot_reweight: bool,
    pub reweight_prototype_edges: bool,
}

impl Default for OracleSwitches {
    fn default() -> Self {
        Self { text_reweight: true, fewshot_reweight: true, reweight_prototype_edges: true }
    }
}

fn population_variance(set: &[Embedding]) -> Vec<f64> {
    let d = set[0].dim();
    let n = set.len() as f64;
    (0..d)
        .map(|c| {
            let mean = set.iter().map(|e| e.values()[c]).sum::<f64>() / n;
            set.iter().map(|e| (e.values()[c] - mean).powi(2)).sum::<f64>() / n
        })
        .collect()
}

fn weighted_unit(v: &[f64], w: &[f64]) -> Vec<f64> {
    let scaled: Vec<f64> = v.iter().zip(w).map(|(a, b)| a * b).collect();
    let norm = scaled.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        scaled.iter().map(|x| x / norm).collect()
    } else {
        vec![0.0; v.len()]
    }
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Transductive predictions over the full node set, computed with dense
/// matrices: statistics, re-weighted similarities, per-block exhaustive
/// k-NN, `D^{-1/2}(W+Wᵀ)^γ D^{-1/2}`, `T` propagation steps with anchor
/// resets from zero test labels, and argmax with nearest-prototype fallback
/// for rows that received no label mass.
pub fn dense_pipeline(
    prototypes: &[Embedding],
    fewshot: &[Embedding],
    tests: &[Embedding],
    hyper: &HyperParams,
    switches: OracleSwitches,
) -> Result<Vec<usize>> {
    let c = prototypes.len();
    let nl = fewshot.len();
    let nu = tests.len();
    let n = c + nl + nu;
    if n > MAX_ORACLE_NODES {
        return Err(Error::Config(format!("dense pipeline limited to {MAX_ORACLE_NODES} nodes, got {n}")));
    }
    if c < 2 {
        return Err(Error::TooFewClasses(c));
    }
    let d = prototypes[0].dim();

    let var_p = population_variance(prototypes);
    let text_w = if switches.text_reweight { var_p } else { vec![1.0; d] };
    let fs_w: Vec<f64> = if switches.fewshot_reweight && nl >= 2 {
        population_variance(fewshot).iter().map(|v| 1.0 / (v + 1e-8)).collect()
    } else {
        vec![1.0; d]
    };
    let text_on = switches.text_reweight;
    let proto_on = switches.text_reweight && switches.reweight_prototype_edges;
    let fs_on = switches.fewshot_reweight && nl >= 2;
    let target = |v: &[f64], w: &[f64], on: bool| if on { weighted_unit(v, w) } else { v.to_vec() };

    let proto_t: Vec<Vec<f64>> = prototypes.iter().map(|p| target(p.values(), &text_w, proto_on)).collect();
    let test_t: Vec<Vec<f64>> = tests.iter().map(|u| target(u.values(), &text_w, text_on)).collect();
    let test_f: Vec<Vec<f64>> = tests.iter().map(|u| target(u.values(), &fs_w, fs_on)).collect();

    let proto_score = |i: usize, p: usize| inner(tests[i].values(), &proto_t[p]);

    let mut w = DMatrix::<f64>::zeros(n, n);
    let base = c + nl;
    let proto_ids: Vec<NodeId> = (0..c).collect();
    let fs_ids: Vec<NodeId> = (c..base).collect();
    for i in 0..nu {
        let row = base + i;
        for (id, s) in exhaustive_knn(&proto_ids, hyper.k_prototype, |p| proto_score(i, p)) {
            w[(row, id)] = s.max(0.0);
        }
        let others: Vec<NodeId> = (0..nu).filter(|&j| j != i).map(|j| base + j).collect();
        for (id, s) in exhaustive_knn(&others, hyper.k_test, |id| inner(tests[i].values(), &test_t[id - base])) {
            w[(row, id)] = s.max(0.0);
        }
        for (id, s) in exhaustive_knn(&fs_ids, hyper.k_fewshot, |id| inner(fewshot[id - c].values(), &test_f[i])) {
            w[(row, id)] = s.max(0.0);
        }
    }

    let sym = w.clone() + w.transpose();
    let powered = sym.map(|v| if v > 0.0 { v.powf(hyper.gamma) } else { 0.0 });
    let degree: Vec<f64> = (0..n).map(|i| powered.row(i).iter().sum()).collect();
    let mut wn = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if powered[(i, j)] > 0.0 {
                wn[(i, j)] = powered[(i, j)] / (degree[i].sqrt() * degree[j].sqrt());
            }
        }
    }

    let mut y0 = DMatrix::<f64>::zeros(n, c);
    for k in 0..c {
        y0[(k, k)] = 1.0;
    }
    for (j, l) in fewshot.iter().enumerate() {
        let class = l.class_id().unwrap_or(usize::MAX);
        if class >= c {
            return Err(Error::InvalidLabel { class, classes: c });
        }
        y0[(c + j, class)] = 1.0;
    }
    let mut y = y0.clone();
    for _ in 0..hyper.iters {
        y = &wn * &y * hyper.alpha + &y0 * (1.0 - hyper.alpha);
        for r in 0..base {
            for k in 0..c {
                y[(r, k)] = y0[(r, k)];
            }
        }
    }

    Ok((0..nu)
        .map(|i| {
            let row: Vec<f64> = (0..c).map(|k| y[(base + i, k)]).collect();
            let peak = row.iter().cloned().fold(0.0f64, f64::max);
            if peak > 0.0 {
                row.iter().position(|&v| v == peak).unwrap_or(0)
            } else {
                let scores: Vec<f64> = (0..c).map(|p| proto_score(i, p)).collect();
                let top = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                scores.iter().position(|&v| v == top).unwrap_or(0)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_zero_graph() {
        let w = DMatrix::<f64>::zeros(3, 3);
        let y0 = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]);
        let y = closed_form_lp(&w, &y0, 0.9).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn closed_form_two_node() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let y0 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let y = closed_form_lp(&w, &y0, 0.5).unwrap();
        assert!((y[(0, 0)] - 4.0 / 3.0).abs() < 1e-12);
        assert!((y[(1, 0)] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_rejects_alpha_one() {
        let w = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let y0 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        assert!(closed_form_lp(&w, &y0, 1.0).is_err());
    }

    #[test]
    fn singular_system_detected() {
        // I − 0.5·W is singular when W has eigenvalue 2.
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let y0 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        assert!(matches!(closed_form_lp(&w, &y0, 0.5), Err(Error::OracleSingular)));
    }

    #[test]
    fn exhaustive_knn_basics() {
        let ids = [4, 2, 9];
        assert_eq!(exhaustive_knn(&ids, 5, |_| 1.0), vec![(2, 1.0), (4, 1.0), (9, 1.0)]);
        assert!(exhaustive_knn(&[], 3, |_| 1.0).is_empty());
        assert_eq!(exhaustive_knn(&ids, 1, |id| id as f64), vec![(9, 9.0)]);
    }

    #[test]
    fn single_test_goes_to_nearest_prototype() {
        let protos = vec![
            Embedding::prototype(vec![1.0, 0.0, 0.1], 0).unwrap(),
            Embedding::prototype(vec![0.0, 1.0, 0.3], 1).unwrap(),
            Embedding::prototype(vec![0.2, 0.2, 1.0], 2).unwrap(),
        ];
        let test = vec![Embedding::test(vec![0.1, 0.9, 0.35]).unwrap()];
        for switches in [OracleSwitches::default(), OracleSwitches { text_reweight: false, ..Default::default() }] {
            let pred = dense_pipeline(&protos, &[], &test, &HyperParams::default(), switches).unwrap();
            assert_eq!(pred, vec![1]);
        }
    }

    #[test]
    fn spectral_radius_of_path() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((symmetric_spectral_radius(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_of_engine_kernels() {
        let src = include_str!("oracle.rs");
        let (body, _) = src.split_once("#[cfg(test)]").unwrap();
        for forbidden in ["crate::graph", "crate::propagate", "crate::reweight"] {
            assert!(!body.contains(forbidden), "oracle depends on {forbidden}");
        }
    }
}
