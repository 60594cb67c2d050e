//! Stream orchestration: one [`Session`] per input stream.
//!
//! Per arrival the session inserts the sample into the graph, rebuilds the
//! normalized operator, propagates labels over the whole current graph for
//! `T` steps with anchor resets, emits the prediction for the new sample and
//! carries attenuated pseudo-labels into the next arrival.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{expand, finalize, BoundedRowGraph, Capacities, NodeStore, NormalizedGraph};
use crate::model::{ContextStats, Embedding, HyperParams, LabelState, NodeKind};
use crate::propagate::{attenuate, init_labels, nearest, predict, run_propagation, run_propagation_with, Propagation};
use crate::reweight::{compute_context_stats, dot, EdgeWeighting};
use crate::runner::io::{EmbeddingFile, LabelSidecar};

/// Feature switches for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFlags {
    /// Weight test targets by prototype variance.
    pub text_reweight: bool,
    /// Also weight prototype targets (only meaningful with `text_reweight`).
    pub reweight_prototype_edges: bool,
    /// Weight test targets of few-shot edges by reciprocal few-shot variance.
    pub fewshot_reweight: bool,
    /// Also produce transductive predictions over the final graph.
    pub transductive: bool,
}

impl Default for RunFlags {
    fn default() -> Self {
        Self { text_reweight: true, reweight_prototype_edges: true, fewshot_reweight: true, transductive: false }
    }
}

/// Everything a run consumes, already normalized.
#[derive(Debug, Clone)]
pub struct StreamInputs {
    pub class_names: Vec<String>,
    pub prototypes: Vec<Embedding>,
    pub fewshot: Vec<Embedding>,
    pub tests: Vec<Embedding>,
    /// Ground truth for `tests`, when known.
    pub labels: Option<Vec<usize>>,
}

impl StreamInputs {
    pub fn from_files(
        prototypes: &EmbeddingFile,
        tests: &EmbeddingFile,
        fewshot: Option<&EmbeddingFile>,
        sidecar: &LabelSidecar,
    ) -> Result<Self> {
        sidecar.validate()?;
        let classes = sidecar.num_classes();
        if prototypes.count() != classes {
            return Err(Error::Config(format!("{} prototypes for {classes} class names", prototypes.count())));
        }
        let dim = prototypes.dim();
        for f in std::iter::once(tests).chain(fewshot) {
            if f.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
            }
        }
        let class_ids: Vec<usize> = (0..classes).collect();
        let fewshot = match fewshot {
            Some(f) => {
                let ids = sidecar.fewshot_labels(f.count())?;
                f.to_embeddings(NodeKind::FewShot, Some(&ids))?
            }
            None => Vec::new(),
        };
        let labels = sidecar.labels.clone();
        if let Some(l) = &labels {
            if l.len() != tests.count() {
                return Err(Error::Config(format!("{} labels for {} test rows", l.len(), tests.count())));
            }
        }
        Ok(Self {
            class_names: sidecar.class_names.clone(),
            prototypes: prototypes.to_embeddings(NodeKind::Prototype, Some(&class_ids))?,
            fewshot,
            tests: tests.to_embeddings(NodeKind::Test, None)?,
            labels,
        })
    }

    pub fn load(
        prototypes: impl AsRef<Path>,
        tests: impl AsRef<Path>,
        fewshot: Option<&Path>,
        sidecar: impl AsRef<Path>,
    ) -> Result<Self> {
        let sidecar = LabelSidecar::read(sidecar)?;
        let fewshot = fewshot.map(EmbeddingFile::read).transpose()?;
        Self::from_files(&EmbeddingFile::read(prototypes)?, &EmbeddingFile::read(tests)?, fewshot.as_ref(), &sidecar)
    }

    pub fn num_classes(&self) -> usize {
        self.prototypes.len()
    }

    /// The same inputs with the test stream permuted: position `i` of the
    /// new stream is test `order[i]` of this one.
    pub fn reordered(&self, order: &[usize]) -> Self {
        Self {
            tests: order.iter().map(|&i| self.tests[i].clone()).collect(),
            labels: self.labels.as_ref().map(|l| order.iter().map(|&i| l[i]).collect()),
            ..self.clone()
        }
    }

    /// The same inputs with the first `n` test samples only.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.tests.len());
        Self { tests: self.tests[..n].to_vec(), labels: self.labels.as_ref().map(|l| l[..n].to_vec()), ..self.clone() }
    }

    /// The same inputs without few-shot exemplars.
    pub fn zero_shot(&self) -> Self {
        Self { fewshot: Vec::new(), ..self.clone() }
    }

    /// Plain-cosine nearest-prototype class of every test sample.
    pub fn baseline_predictions(&self) -> Vec<usize> {
        self.tests
            .iter()
            .map(|u| {
                let scores: Vec<f64> = self.prototypes.iter().map(|p| dot(u.values(), p.values())).collect();
                nearest(&scores)
            })
            .collect()
    }
}

/// Outcome of one arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub test_index: usize,
    pub prediction: usize,
    /// True when the new node received no label mass and the prediction fell
    /// back to its nearest prototype.
    pub isolated: bool,
}

/// Streaming inference state for one test stream.
#[derive(Debug, Clone)]
pub struct Session {
    hyper: HyperParams,
    flags: RunFlags,
    stats: ContextStats,
    store: NodeStore,
    graph: BoundedRowGraph,
    fewshot_labels: Vec<usize>,
    carried: Vec<f64>,
}

impl Session {
    pub fn new(
        prototypes: Vec<Embedding>,
        fewshot: Vec<Embedding>,
        hyper: HyperParams,
        flags: RunFlags,
    ) -> Result<Self> {
        hyper.validate()?;
        let stats = compute_context_stats(&prototypes, &fewshot)?;
        let weighting =
            EdgeWeighting::new(&stats, flags.text_reweight, flags.fewshot_reweight, flags.reweight_prototype_edges);
        let store = NodeStore::new(prototypes, fewshot, weighting)?;
        let fewshot_labels = store.fewshot_labels();
        let graph = BoundedRowGraph::new(Capacities::from(&hyper), store.classes(), store.num_fewshot());
        Ok(Self { hyper, flags, stats, store, graph, fewshot_labels, carried: Vec::new() })
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn flags(&self) -> &RunFlags {
        &self.flags
    }

    pub fn stats(&self) -> &ContextStats {
        &self.stats
    }

    pub fn store(&self) -> &NodeStore {
        &self.store
    }

    pub fn graph(&self) -> &BoundedRowGraph {
        &self.graph
    }

    pub fn classes(&self) -> usize {
        self.store.classes()
    }

    pub fn num_tests(&self) -> usize {
        self.store.num_tests()
    }

    /// Pseudo-labels carried into the next arrival, one row per observed test.
    pub fn carried_labels(&self) -> &[f64] {
        &self.carried
    }

    /// Nearest prototype of test `t` under the prototype-edge similarity.
    pub fn fallback_prediction(&self, t: usize) -> usize {
        nearest(&self.store.prototype_scores(t))
    }

    pub fn push(&mut self, embedding: &Embedding) -> Result<Arrival> {
        self.push_observed(embedding, |_, _| {})
    }

    /// Processes one arrival; `observer` sees the label state after every
    /// propagation step.
    pub fn push_observed<F>(&mut self, embedding: &Embedding, observer: F) -> Result<Arrival>
    where
        F: FnMut(usize, &LabelState),
    {
        let t = self.store.push_test(embedding)?;
        expand(&mut self.graph, &self.store)?;
        let normalized = finalize(&self.graph, self.hyper.gamma);

        let c = self.classes();
        let mut y0 = init_labels(c, &self.fewshot_labels, 0)?;
        self.carried.resize((t + 1) * c, 0.0);
        y0.set_test_block(&self.carried);

        let y = run_propagation_with(&normalized, &y0, Propagation::from(&self.hyper), observer);
        let mut isolated = false;
        let prediction = predict(&y, t, || {
            isolated = true;
            self.fallback_prediction(t)
        });
        self.carried = attenuate(&y, self.hyper.beta);
        Ok(Arrival { test_index: t, prediction, isolated })
    }

    /// The normalized operator over the current graph.
    pub fn normalized_graph(&self) -> NormalizedGraph {
        finalize(&self.graph, self.hyper.gamma)
    }

    /// Re-reads every test row: propagation over the current graph from the
    /// initial labels (no carried pseudo-labels), argmax per row.
    pub fn transductive_predictions(&self) -> Result<Vec<usize>> {
        let n = self.num_tests();
        let y0 = init_labels(self.classes(), &self.fewshot_labels, n)?;
        let y = run_propagation(&self.normalized_graph(), &y0, &self.hyper);
        Ok((0..n).map(|t| predict(&y, t, || self.fallback_prediction(t))).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl Accuracy {
    pub fn of(predictions: &[usize], labels: &[usize]) -> Self {
        let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
        let total = labels.len();
        let accuracy = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
        Self { correct, total, accuracy }
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.accuracy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub hyper: HyperParams,
    pub flags: RunFlags,
    pub classes: usize,
    pub fewshot: usize,
    pub tests: usize,
    pub dim: usize,
}

/// Result of one streamed run.
///
/// Wall-clock timings are kept out of the serialized report so that
/// identical inputs give byte-identical reports; see [`RunReport::timings_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    /// Online prediction for each test sample, emitted on its arrival.
    pub predictions: Vec<usize>,
    /// Test samples whose online prediction fell back to the nearest prototype.
    pub isolated: Vec<usize>,
    pub baseline_predictions: Vec<usize>,
    pub online: Option<Accuracy>,
    pub baseline: Option<Accuracy>,
    pub transductive_predictions: Option<Vec<usize>>,
    pub transductive: Option<Accuracy>,
    /// Seconds spent on each arrival.
    #[serde(skip)]
    pub arrival_seconds: Vec<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::from("arrival,seconds\n");
        for (i, s) in self.arrival_seconds.iter().enumerate() {
            out.push_str(&format!("{i},{s:.9}\n"));
        }
        out
    }

    /// A short human-readable summary.
    pub fn summary(&self) -> String {
        let cfg = &self.config;
        let mut lines =
            vec![format!("classes={} fewshot={} tests={} dim={}", cfg.classes, cfg.fewshot, cfg.tests, cfg.dim)];
        let fmt = |name: &str, a: &Option<Accuracy>| {
            a.map(|a| format!("{name:<14} {:6.2}%  ({}/{})", a.percent(), a.correct, a.total))
        };
        lines.extend(fmt("online", &self.online));
        lines.extend(fmt("baseline", &self.baseline));
        lines.extend(fmt("transductive", &self.transductive));
        if !self.arrival_seconds.is_empty() {
            let total: f64 = self.arrival_seconds.iter().sum();
            lines.push(format!(
                "time           {total:.3}s total, {:.3}ms per arrival",
                1e3 * total / self.arrival_seconds.len() as f64
            ));
        }
        if !self.isolated.is_empty() {
            lines.push(format!("isolated       {} arrivals used the prototype fallback", self.isolated.len()));
        }
        lines.join("\n")
    }
}

/// Runs the whole stream through a fresh [`Session`].
pub fn run_stream(inputs: &StreamInputs, hyper: &HyperParams, flags: &RunFlags) -> Result<RunReport> {
    run_stream_observed(inputs, hyper, flags, |_, _| {})
}

/// [`run_stream`] with an observer called after every propagation step of
/// every arrival.
pub fn run_stream_observed<F>(
    inputs: &StreamInputs,
    hyper: &HyperParams,
    flags: &RunFlags,
    mut observer: F,
) -> Result<RunReport>
where
    F: FnMut(usize, &LabelState),
{
    let mut session = Session::new(inputs.prototypes.clone(), inputs.fewshot.clone(), *hyper, *flags)?;
    let n = inputs.tests.len();
    let mut predictions = Vec::with_capacity(n);
    let mut isolated = Vec::new();
    let mut arrival_seconds = Vec::with_capacity(n);
    for u in &inputs.tests {
        let start = Instant::now();
        let arrival = session.push_observed(u, &mut observer)?;
        arrival_seconds.push(start.elapsed().as_secs_f64());
        predictions.push(arrival.prediction);
        if arrival.isolated {
            isolated.push(arrival.test_index);
        }
    }
    let transductive_predictions = if flags.transductive { Some(session.transductive_predictions()?) } else { None };
    let baseline_predictions = inputs.baseline_predictions();
    let labels = inputs.labels.as_deref();
    Ok(RunReport {
        config: ConfigEcho {
            hyper: *hyper,
            flags: *flags,
            classes: inputs.num_classes(),
            fewshot: inputs.fewshot.len(),
            tests: n,
            dim: session.store().dim(),
        },
        online: labels.map(|l| Accuracy::of(&predictions, l)),
        baseline: labels.map(|l| Accuracy::of(&baseline_predictions, l)),
        transductive: labels.zip(transductive_predictions.as_deref()).map(|(l, p)| Accuracy::of(p, l)),
        predictions,
        isolated,
        baseline_predictions,
        transductive_predictions,
        arrival_seconds,
    })
}
