//! Bounded-degree k-NN graph over prototypes, few-shot exemplars and test
//! samples.
//!
//! Only test nodes own outgoing edges. Each test row keeps three capped
//! neighbour lists, one per block, so the prototype/prototype,
//! few-shot/few-shot and prototype/few-shot blocks of the adjacency are
//! structurally zero. Connectivity of anchors comes from symmetrization in
//! [`finalize`].
//!
//! A new test node is inserted with [`expand`]: its own row is an exact k-NN
//! search over every existing node, and every existing test row is offered
//! the new node as a candidate, replacing its weakest edge if the newcomer
//! ranks ahead of it. Because a capped list that always evicts its weakest
//! entry is a streaming top-k, every row after any number of expansions
//! equals the row that [`rebuild_static`] computes from scratch.

use crate::error::{Error, Result};
use crate::model::{Embedding, HyperParams, NodeId, NodeKind};
use crate::reweight::{dot, EdgeWeighting};

/// A directed edge out of a test row. `score` is the raw (re-weighted)
/// similarity and orders candidates; the stored weight is clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub target: NodeId,
    pub score: f64,
}

impl Edge {
    pub fn weight(&self) -> f64 {
        self.score.max(0.0)
    }
}

/// Neighbour order: higher score first, then lower node id.
#[inline]
pub fn ranks_before(a: &Edge, b: &Edge) -> bool {
    a.score > b.score || (a.score == b.score && a.target < b.target)
}

/// Offers `edge` to a best-first list capped at `k`. The edge is inserted
/// in rank order if the list has room or if it outranks the current last
/// entry, which is then evicted. Returns whether the list changed.
pub fn offer(list: &mut Vec<Edge>, k: usize, edge: Edge) -> bool {
    if k == 0 {
        return false;
    }
    if list.len() >= k {
        if !ranks_before(&edge, &list[k - 1]) {
            return false;
        }
        list.truncate(k - 1);
    }
    let pos = list.iter().position(|e| ranks_before(&edge, e)).unwrap_or(list.len());
    list.insert(pos, edge);
    true
}

/// The `k` best candidates by `score`, best first, ties to the lower id.
/// An empty candidate set (or `k == 0`) yields no edges.
pub fn knn_edges<I, F>(candidates: I, k: usize, mut score: F) -> Vec<Edge>
where
    I: IntoIterator<Item = NodeId>,
    F: FnMut(NodeId) -> f64,
{
    let mut best: Vec<Edge> = Vec::with_capacity(k + 1);
    for target in candidates {
        offer(&mut best, k, Edge { target, score: score(target) });
    }
    best
}

/// Per-row capacities of the three neighbour lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capacities {
    pub prototype: usize,
    pub test: usize,
    pub fewshot: usize,
}

impl From<&HyperParams> for Capacities {
    fn from(h: &HyperParams) -> Self {
        Self { prototype: h.k_prototype, test: h.k_test, fewshot: h.k_fewshot }
    }
}

/// Node features plus the pre-transformed targets used for scoring.
///
/// Prototype `c` has node id `c`, few-shot exemplar `j` has id `C + j`, and
/// test `t` has id `C + N_l + t`.
#[derive(Debug, Clone)]
pub struct NodeStore {
    dim: usize,
    weighting: EdgeWeighting,
    prototypes: Vec<Embedding>,
    prototype_targets: Vec<Vec<f64>>,
    fewshot: Vec<Embedding>,
    test_raw: Vec<f64>,
    test_text: Vec<f64>,
    test_fewshot: Vec<f64>,
    num_tests: usize,
}

impl NodeStore {
    /// `prototypes[c]` must be the prototype of class `c`.
    pub fn new(prototypes: Vec<Embedding>, fewshot: Vec<Embedding>, weighting: EdgeWeighting) -> Result<Self> {
        let classes = prototypes.len();
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        let dim = prototypes[0].dim();
        for (c, p) in prototypes.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            if p.kind() != NodeKind::Prototype || p.class_id() != Some(c) {
                return Err(Error::Config(format!("prototype {c} must be a prototype of class {c}")));
            }
        }
        for l in &fewshot {
            if l.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: l.dim() });
            }
            if l.kind() != NodeKind::FewShot {
                return Err(Error::Config("few-shot block holds a non few-shot embedding".into()));
            }
            let class = l.class_id().unwrap_or(usize::MAX);
            if class >= classes {
                return Err(Error::InvalidLabel { class, classes });
            }
        }
        let prototype_targets = prototypes.iter().map(|p| weighting.prototype_target(p.values())).collect();
        Ok(Self {
            dim,
            weighting,
            prototypes,
            prototype_targets,
            fewshot,
            test_raw: Vec::new(),
            test_text: Vec::new(),
            test_fewshot: Vec::new(),
            num_tests: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.prototypes.len()
    }

    pub fn num_fewshot(&self) -> usize {
        self.fewshot.len()
    }

    pub fn num_tests(&self) -> usize {
        self.num_tests
    }

    pub fn num_nodes(&self) -> usize {
        self.classes() + self.num_fewshot() + self.num_tests
    }

    pub fn weighting(&self) -> &EdgeWeighting {
        &self.weighting
    }

    pub fn prototypes(&self) -> &[Embedding] {
        &self.prototypes
    }

    pub fn fewshot(&self) -> &[Embedding] {
        &self.fewshot
    }

    pub fn fewshot_labels(&self) -> Vec<usize> {
        self.fewshot.iter().map(|l| l.class_id().unwrap_or(0)).collect()
    }

    pub fn test_id(&self, test_index: usize) -> NodeId {
        self.classes() + self.num_fewshot() + test_index
    }

    pub fn test_values(&self, test_index: usize) -> &[f64] {
        &self.test_raw[test_index * self.dim..(test_index + 1) * self.dim]
    }

    /// Appends a test node and returns its test index.
    pub fn push_test(&mut self, embedding: &Embedding) -> Result<usize> {
        if embedding.kind() != NodeKind::Test {
            return Err(Error::Config("only test embeddings can be streamed".into()));
        }
        if embedding.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: embedding.dim() });
        }
        let v = embedding.values();
        self.test_raw.extend_from_slice(v);
        self.test_text.extend(self.weighting.text_target(v));
        self.test_fewshot.extend(self.weighting.fewshot_target(v));
        self.num_tests += 1;
        Ok(self.num_tests - 1)
    }

    /// Similarity of test `t` to prototype `c`.
    pub fn prototype_score(&self, t: usize, c: usize) -> f64 {
        dot(self.test_values(t), &self.prototype_targets[c])
    }

    /// Similarity of test `query` to test `target`.
    pub fn test_score(&self, query: usize, target: usize) -> f64 {
        dot(self.test_values(query), &self.test_text[target * self.dim..(target + 1) * self.dim])
    }

    /// Similarity of few-shot exemplar `l` to test `t`.
    pub fn fewshot_score(&self, t: usize, l: usize) -> f64 {
        dot(self.fewshot[l].values(), &self.test_fewshot[t * self.dim..(t + 1) * self.dim])
    }

    /// Prototype similarities of test `t`, one per class.
    pub fn prototype_scores(&self, t: usize) -> Vec<f64> {
        (0..self.classes()).map(|c| self.prototype_score(t, c)).collect()
    }

    /// Exhaustive neighbour search for test `t` among the first `visible`
    /// test nodes (excluding itself), all prototypes and all exemplars.
    pub fn search_row(&self, t: usize, visible: usize, caps: Capacities) -> TestRow {
        let c = self.classes();
        let test_base = c + self.num_fewshot();
        TestRow {
            prototype: knn_edges(0..c, caps.prototype, |p| self.prototype_score(t, p)),
            test: knn_edges((0..visible).filter(|&j| j != t).map(|j| test_base + j), caps.test, |id| {
                self.test_score(t, id - test_base)
            }),
            fewshot: knn_edges(c..test_base, caps.fewshot, |id| self.fewshot_score(t, id - c)),
        }
    }
}

/// Outgoing edges of one test node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestRow {
    pub prototype: Vec<Edge>,
    pub test: Vec<Edge>,
    pub fewshot: Vec<Edge>,
}

impl TestRow {
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.prototype.iter().chain(&self.test).chain(&self.fewshot)
    }

    /// Edges of every block sorted by target, for order-insensitive comparison.
    pub fn sorted_edges(&self) -> Vec<Edge> {
        let mut all: Vec<Edge> = self.edges().copied().collect();
        all.sort_by_key(|e| e.target);
        all
    }
}

/// The sparse adjacency as capped per-test neighbour lists.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedRowGraph {
    caps: Capacities,
    classes: usize,
    fewshot: usize,
    rows: Vec<TestRow>,
}

impl BoundedRowGraph {
    pub fn new(caps: Capacities, classes: usize, fewshot: usize) -> Self {
        Self { caps, classes, fewshot, rows: Vec::new() }
    }

    pub fn capacities(&self) -> Capacities {
        self.caps
    }

    pub fn rows(&self) -> &[TestRow] {
        &self.rows
    }

    pub fn row(&self, test_index: usize) -> &TestRow {
        &self.rows[test_index]
    }

    pub fn num_nodes(&self) -> usize {
        self.classes + self.fewshot + self.rows.len()
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(|r| r.prototype.len() + r.test.len() + r.fewshot.len()).sum()
    }

    /// Checks capacity bounds, self/duplicate edges, block membership of
    /// targets and non-negative weights.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let base = self.classes + self.fewshot;
        for (t, row) in self.rows.iter().enumerate() {
            let me = base + t;
            if row.prototype.len() > self.caps.prototype
                || row.test.len() > self.caps.test
                || row.fewshot.len() > self.caps.fewshot
            {
                return Err(format!("row {t} exceeds capacity"));
            }
            let in_block = |e: &Edge, lo: usize, hi: usize| e.target >= lo && e.target < hi;
            if !row.prototype.iter().all(|e| in_block(e, 0, self.classes))
                || !row.fewshot.iter().all(|e| in_block(e, self.classes, base))
                || !row.test.iter().all(|e| in_block(e, base, self.num_nodes()))
            {
                return Err(format!("row {t} has an edge into the wrong block"));
            }
            let mut targets: Vec<NodeId> = row.edges().map(|e| e.target).collect();
            if targets.contains(&me) {
                return Err(format!("row {t} has a self edge"));
            }
            targets.sort_unstable();
            if targets.windows(2).any(|w| w[0] == w[1]) {
                return Err(format!("row {t} has duplicate targets"));
            }
            if row.edges().any(|e| !(e.weight() >= 0.0 && e.weight().is_finite())) {
                return Err(format!("row {t} has an invalid weight"));
            }
        }
        Ok(())
    }
}

/// Inserts the most recently pushed test node of `store` into `graph`.
///
/// The new row is searched exhaustively; every existing test row receives
/// the new node if it has spare capacity or if the new node outranks its
/// weakest edge, which it then replaces. Lists stay in rank order, so the
/// weakest edge is always the last one.
pub fn expand(graph: &mut BoundedRowGraph, store: &NodeStore) -> Result<()> {
    let t = graph.rows.len();
    if store.num_tests() != t + 1 || store.classes() != graph.classes || store.num_fewshot() != graph.fewshot {
        return Err(Error::Config(format!("graph holds {t} test rows but the store has {} tests", store.num_tests())));
    }
    let new_id = store.test_id(t);
    let row = store.search_row(t, t, graph.caps);
    let cap = graph.caps.test;
    if cap > 0 {
        for (i, existing) in graph.rows.iter_mut().enumerate() {
            offer(&mut existing.test, cap, Edge { target: new_id, score: store.test_score(i, t) });
        }
    }
    graph.rows.push(row);
    Ok(())
}

/// Pushes `embedding` into the store and expands the graph with it.
pub fn push_and_expand(graph: &mut BoundedRowGraph, store: &mut NodeStore, embedding: &Embedding) -> Result<NodeId> {
    let t = store.push_test(embedding)?;
    expand(graph, store)?;
    Ok(store.test_id(t))
}

/// Builds every test row from scratch by exhaustive search.
pub fn build_static_rows(store: &NodeStore, caps: Capacities) -> BoundedRowGraph {
    let n = store.num_tests();
    BoundedRowGraph {
        caps,
        classes: store.classes(),
        fewshot: store.num_fewshot(),
        rows: (0..n).map(|t| store.search_row(t, n, caps)).collect(),
    }
}

/// Static construction followed by [`finalize`].
pub fn rebuild_static(store: &NodeStore, hyper: &HyperParams) -> NormalizedGraph {
    finalize(&build_static_rows(store, Capacities::from(hyper)), hyper.gamma)
}

/// `D^{-1/2} (W + Wᵀ)^{∘γ} D^{-1/2}` of the bounded-row adjacency.
pub fn finalize(graph: &BoundedRowGraph, gamma: f64) -> NormalizedGraph {
    let base = graph.classes + graph.fewshot;
    let edges =
        graph.rows.iter().enumerate().flat_map(|(t, row)| row.edges().map(move |e| (base + t, e.target, e.weight())));
    NormalizedGraph::from_directed(graph.num_nodes(), edges, gamma)
}

/// Symmetric, degree-normalized sparse adjacency in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGraph {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedGraph {
    /// Symmetrizes the directed weights by summation, raises each entry to
    /// `gamma`, and normalizes by degree. Zero-degree nodes get empty rows.
    pub fn from_directed<I>(n: usize, edges: I, gamma: f64) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, w) in edges {
            debug_assert!(i < n && j < n);
            if w > 0.0 && i != j {
                triplets.push((i, j, w));
                triplets.push((j, i, w));
            }
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));

        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, w) in &triplets {
            if last == Some((i, j)) {
                *values.last_mut().expect("merged entry") += w;
            } else {
                indices.push(j);
                values.push(w);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        values.iter_mut().for_each(|v| *v = v.powf(gamma));

        let inv_sqrt_degree: Vec<f64> = (0..n)
            .map(|i| {
                let d: f64 = values[indptr[i]..indptr[i + 1]].iter().sum();
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        for i in 0..n {
            for k in indptr[i]..indptr[i + 1] {
                values[k] *= inv_sqrt_degree[i] * inv_sqrt_degree[indices[k]];
            }
        }
        Self { n, indptr, indices, values }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// Row-major dense copy, for tests and diagnostics.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[i * self.n + j] = v;
            }
        }
        out
    }

    /// `out = self · y` where `y` and `out` are row-major `n × width`.
    pub fn mul_dense(&self, y: &[f64], width: usize, out: &mut [f64]) {
        assert_eq!(y.len(), self.n * width);
        assert_eq!(out.len(), self.n * width);
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let dst = &mut out[i * width..(i + 1) * width];
            for k in self.indptr[i]..self.indptr[i + 1] {
                let w = self.values[k];
                let src = &y[self.indices[k] * width..(self.indices[k] + 1) * width];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
    }
}
