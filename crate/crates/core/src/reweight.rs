//! Context-aware edge re-weighting.
//!
//! Feature dimensions that vary strongly across the class prototypes are
//! amplified when comparing test samples, while dimensions that vary strongly
//! across few-shot exemplars (intra-class noise) are suppressed. In both cases
//! the weight is applied to the target vector, which is then re-normalized:
//!
//! ```text
//! text:     sim(u_i, u_j) = u_iᵀ · unit(var_p ⊙ u_j)
//! few-shot: sim(l_i, u_j) = l_iᵀ · unit((1 / (var_l + ε)) ⊙ u_j)
//! ```

use crate::error::{Error, Result};
use crate::model::{ContextStats, Embedding};

/// Added to the few-shot variance before taking its reciprocal.
pub const FEWSHOT_VARIANCE_EPS: f64 = 1e-8;

/// Per-dimension mean and population variance of a vector set.
#[derive(Debug, Clone, PartialEq)]
pub struct DimStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

fn dim_stats(set: &[Embedding]) -> Result<DimStats> {
    if set.len() < 2 {
        return Err(Error::StatsDegenerate(set.len()));
    }
    let d = set[0].dim();
    for e in set {
        if e.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: e.dim() });
        }
    }
    let n = set.len() as f64;
    let mut mean = vec![0.0; d];
    for e in set {
        for (m, v) in mean.iter_mut().zip(e.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for e in set {
        for ((s, v), m) in var.iter_mut().zip(e.values()).zip(&mean) {
            let dev = v - m;
            *s += dev * dev;
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    Ok(DimStats { mean, var })
}

/// Mean and population variance over the class prototypes.
pub fn compute_prototype_stats(prototypes: &[Embedding]) -> Result<DimStats> {
    dim_stats(prototypes)
}

/// Mean and population variance over all few-shot exemplars, pooled across
/// classes.
pub fn compute_fewshot_stats(fewshot: &[Embedding]) -> Result<DimStats> {
    dim_stats(fewshot)
}

/// Builds the full statistics record. An empty few-shot set leaves the
/// few-shot fields absent.
pub fn compute_context_stats(prototypes: &[Embedding], fewshot: &[Embedding]) -> Result<ContextStats> {
    let p = compute_prototype_stats(prototypes)?;
    let (mu_l, var_l) = if fewshot.is_empty() {
        (None, None)
    } else {
        let l = compute_fewshot_stats(fewshot)?;
        if l.mean.len() != p.mean.len() {
            return Err(Error::DimensionMismatch { expected: p.mean.len(), found: l.mean.len() });
        }
        (Some(l.mean), Some(l.var))
    };
    Ok(ContextStats { mu_p: p.mean, var_p: p.var, mu_l, var_l })
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `unit(weights ⊙ target)`, or the zero vector when the product vanishes.
pub fn reweight_target(target: &[f64], weights: &[f64]) -> Vec<f64> {
    debug_assert_eq!(target.len(), weights.len());
    let mut out: Vec<f64> = target.iter().zip(weights).map(|(t, w)| t * w).collect();
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        out.iter_mut().for_each(|v| *v /= norm);
    } else {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    out
}

/// Reciprocal few-shot weights `1 / (var_l + ε)`.
pub fn fewshot_weights(var_l: &[f64]) -> Vec<f64> {
    var_l.iter().map(|v| 1.0 / (v + FEWSHOT_VARIANCE_EPS)).collect()
}

pub fn text_reweighted_similarity(query: &Embedding, target: &Embedding, var_p: &[f64]) -> f64 {
    dot(query.values(), &reweight_target(target.values(), var_p))
}

pub fn fewshot_reweighted_similarity(fewshot_sample: &Embedding, test: &Embedding, var_l: &[f64]) -> f64 {
    dot(fewshot_sample.values(), &reweight_target(test.values(), &fewshot_weights(var_l)))
}

/// Which edge types are re-weighted, with the weight vectors to use.
///
/// Targets are pre-transformed once per node with [`EdgeWeighting::text_target`]
/// and [`EdgeWeighting::fewshot_target`], after which every similarity is a
/// plain dot product against the raw query.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeighting {
    text: Option<Vec<f64>>,
    fewshot: Option<Vec<f64>>,
    prototype_edges: bool,
}

impl EdgeWeighting {
    /// Plain cosine similarity on every edge type.
    pub fn cosine() -> Self {
        Self { text: None, fewshot: None, prototype_edges: false }
    }

    /// `text_reweight` applies `var_p` to test and (if `reweight_prototype_edges`)
    /// prototype targets; `fewshot_reweight` applies `1/(var_l+ε)` to test
    /// targets of few-shot edges and is ignored when no few-shot statistics
    /// exist.
    pub fn new(
        stats: &ContextStats,
        text_reweight: bool,
        fewshot_reweight: bool,
        reweight_prototype_edges: bool,
    ) -> Self {
        Self {
            text: text_reweight.then(|| stats.var_p.clone()),
            fewshot: if fewshot_reweight { stats.var_l.as_deref().map(fewshot_weights) } else { None },
            prototype_edges: text_reweight && reweight_prototype_edges,
        }
    }

    pub fn text_enabled(&self) -> bool {
        self.text.is_some()
    }

    pub fn fewshot_enabled(&self) -> bool {
        self.fewshot.is_some()
    }

    pub fn prototype_edges_enabled(&self) -> bool {
        self.prototype_edges
    }

    /// Target form of a test node for test→test edges.
    pub fn text_target(&self, v: &[f64]) -> Vec<f64> {
        match &self.text {
            Some(w) => reweight_target(v, w),
            None => v.to_vec(),
        }
    }

    /// Target form of a prototype for test→prototype edges.
    pub fn prototype_target(&self, v: &[f64]) -> Vec<f64> {
        match (&self.text, self.prototype_edges) {
            (Some(w), true) => reweight_target(v, w),
            _ => v.to_vec(),
        }
    }

    /// Target form of a test node for few-shot→test edges.
    pub fn fewshot_target(&self, v: &[f64]) -> Vec<f64> {
        match &self.fewshot {
            Some(w) => reweight_target(v, w),
            None => v.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn emb(v: &[f64]) -> Embedding {
        Embedding::test(v.to_vec()).unwrap()
    }

    fn protos(rows: &[&[f64]]) -> Vec<Embedding> {
        rows.iter().enumerate().map(|(i, r)| Embedding::prototype(r.to_vec(), i).unwrap()).collect()
    }

    // Scalar reference for mean / population variance, written out longhand.
    fn scalar_stats(rows: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
        let n = rows.len() as f64;
        let d = rows[0].len();
        let mut mu = Vec::new();
        let mut var = Vec::new();
        for c in 0..d {
            let mut s = 0.0;
            for r in rows {
                s += r[c];
            }
            let m = s / n;
            let mut q = 0.0;
            for r in rows {
                q += (r[c] - m) * (r[c] - m);
            }
            mu.push(m);
            var.push(q / n);
        }
        (mu, var)
    }

    #[test]
    fn two_axis_prototypes() {
        let rows: [&[f64]; 2] = [&[1.0, 0.0], &[0.0, 1.0]];
        let (mu, var) = scalar_stats(&rows);
        assert_eq!(mu, vec![0.5, 0.5]);
        assert_eq!(var, vec![0.25, 0.25]);
        let s = compute_prototype_stats(&protos(&rows)).unwrap();
        assert_eq!(s.mean, mu);
        assert_eq!(s.var, var);
    }

    #[test]
    fn repeated_prototypes() {
        let rows: [&[f64]; 4] = [&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]];
        let (_, var) = scalar_stats(&rows);
        assert_eq!(var, vec![0.25, 0.25]);
        assert_eq!(compute_prototype_stats(&protos(&rows)).unwrap().var, var);
    }

    #[test]
    fn identical_prototypes_have_zero_variance() {
        let rows: [&[f64]; 4] = [&[0.6, 0.8]; 4];
        let s = compute_prototype_stats(&protos(&rows)).unwrap();
        assert_eq!(s.var, vec![0.0, 0.0]);
    }

    #[test]
    fn degenerate_sets() {
        assert!(matches!(compute_prototype_stats(&protos(&[&[1.0, 0.0]])), Err(Error::StatsDegenerate(1))));
        assert!(matches!(compute_fewshot_stats(&[]), Err(Error::StatsDegenerate(0))));
    }

    #[test]
    fn fewshot_stats_and_optional_block() {
        let shots =
            vec![Embedding::fewshot(vec![1.0, 0.0], 0).unwrap(), Embedding::fewshot(vec![0.0, 1.0], 1).unwrap()];
        assert_eq!(compute_fewshot_stats(&shots).unwrap().var, vec![0.25, 0.25]);
        let p = protos(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let zs = compute_context_stats(&p, &[]).unwrap();
        assert!(zs.mu_l.is_none() && zs.var_l.is_none());
        let fs = compute_context_stats(&p, &shots).unwrap();
        assert_eq!(fs.var_l.unwrap(), vec![0.25, 0.25]);
    }

    #[test]
    fn text_similarity_examples() {
        let q = emb(&[1.0, 0.0]);
        let t = emb(&[0.6, 0.8]);
        assert_eq!(text_reweighted_similarity(&q, &t, &[1.0, 1.0]), 0.6);
        // weighted target (0, 0.8) normalizes to (0, 1)
        assert_eq!(text_reweighted_similarity(&q, &t, &[0.0, 1.0]), 0.0);
        // zero weighting vector yields zero similarity
        assert_eq!(text_reweighted_similarity(&q, &t, &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn fewshot_similarity_examples() {
        let l = Embedding::fewshot(vec![1.0, 0.0], 0).unwrap();
        let u = emb(&[0.6, 0.8]);
        let plain = fewshot_reweighted_similarity(&l, &u, &[1.0, 1.0]);
        assert!((plain - 0.6).abs() < 1e-7);
        let crushed = fewshot_reweighted_similarity(&l, &u, &[1e9, 1e-9]);
        assert!(crushed.abs() < 1e-12, "{crushed}");
        let uniform = fewshot_reweighted_similarity(&l, &u, &[0.0, 0.0]);
        assert!((uniform - 0.6).abs() < 1e-12);
    }

    #[test]
    fn weighting_switches() {
        let stats = ContextStats { mu_p: vec![0.0, 0.0], var_p: vec![0.0, 1.0], mu_l: None, var_l: None };
        let v = [0.6, 0.8];
        let w = EdgeWeighting::new(&stats, true, true, false);
        assert_eq!(w.text_target(&v), vec![0.0, 1.0]);
        assert_eq!(w.prototype_target(&v), v.to_vec());
        assert!(!w.fewshot_enabled());
        let off = EdgeWeighting::new(&stats, false, true, true);
        assert_eq!(off.text_target(&v), v.to_vec());
        assert!(!off.prototype_edges_enabled());
        assert_eq!(EdgeWeighting::cosine().fewshot_target(&v), v.to_vec());
    }

    fn unit_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, d).prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn scale_invariance(q in unit_vec(8), t in unit_vec(8),
                            var in prop::collection::vec(0.001f64..2.0, 8),
                            kappa in 1e-3f64..1e3) {
            let q = emb(&q);
            let t = emb(&t);
            let scaled: Vec<f64> = var.iter().map(|v| v * kappa).collect();
            let a = text_reweighted_similarity(&q, &t, &var);
            let b = text_reweighted_similarity(&q, &t, &scaled);
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn bounded_and_cosine_reduction(q in unit_vec(6), t in unit_vec(6),
                                        var in prop::collection::vec(0.0f64..3.0, 6),
                                        c in 1e-4f64..1e4) {
            let q = emb(&q);
            let t = emb(&t);
            let s = text_reweighted_similarity(&q, &t, &var);
            prop_assert!(s.abs() <= 1.0 + 1e-12);
            let f = fewshot_reweighted_similarity(&Embedding::fewshot(q.values().to_vec(), 0).unwrap(), &t, &var);
            prop_assert!(f.abs() <= 1.0 + 1e-12);
            let cos = dot(q.values(), t.values());
            let constant = vec![c; 6];
            prop_assert!((text_reweighted_similarity(&q, &t, &constant) - cos).abs() <= 1e-9);
        }
    }
}
