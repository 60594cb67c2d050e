//! Wall-clock comparison of graph construction strategies.
//!
//! For a stream of `N` total nodes the dynamic strategy pays one
//! [`expand`] + [`finalize`] per arrival (`O(d·n)` each, `O(d·N²)` total);
//! the static strategy rebuilds the whole graph from scratch at every
//! arrival (`O(d·n²)` each, `O(d·N³)` total). Growth exponents are fitted by
//! least squares on `ln(time)` against `ln(N)`.
//!
//! Timing every static rebuild is cubic in `N` and dominates the benchmark,
//! so the static total is estimated from `static_samples` evenly spaced
//! arrivals, each standing in for its stride of arrivals. Setting
//! `static_samples >= N` times every arrival.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::graph::{build_static_rows, expand, finalize, rebuild_static, BoundedRowGraph, Capacities, NodeStore};
use crate::model::HyperParams;
use crate::reweight::{compute_context_stats, EdgeWeighting};
use crate::runner::synthetic::{generate_synthetic, SyntheticConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Total node counts (prototypes + test samples) to time.
    pub node_counts: Vec<usize>,
    pub dim: usize,
    pub classes: usize,
    pub noise: f64,
    pub seed: u64,
    pub hyper: HyperParams,
    /// Static rebuilds timed per node count.
    pub static_samples: usize,
    /// Dynamic passes per node count; the fastest is kept.
    pub dynamic_repeats: usize,
    /// Compare every row of the dynamic graph with a from-scratch build at
    /// each sampled arrival.
    pub audit: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            node_counts: vec![500, 1000, 2000, 4000],
            dim: 64,
            classes: 10,
            noise: 0.3,
            seed: 0,
            hyper: HyperParams::default(),
            static_samples: 48,
            dynamic_repeats: 3,
            audit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub nodes: usize,
    pub dynamic_seconds: f64,
    pub static_seconds: f64,
    /// Static arrivals actually timed.
    pub static_timed: usize,
    /// Sampled arrivals whose dynamic graph differed from the static one
    /// (always zero unless `audit` found a discrepancy).
    pub audit_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
    pub dynamic_exponent: f64,
    pub static_exponent: f64,
}

impl BenchTable {
    pub fn render(&self) -> String {
        let mut out = format!("{:>8} {:>14} {:>14} {:>9}\n", "nodes", "dynamic (s)", "static (s)", "speedup");
        for r in &self.rows {
            out.push_str(&format!(
                "{:>8} {:>14.4} {:>14.4} {:>8.1}x\n",
                r.nodes,
                r.dynamic_seconds,
                r.static_seconds,
                r.static_seconds / r.dynamic_seconds
            ));
        }
        out.push_str(&format!(
            "growth exponent: dynamic {:.2}, static {:.2}\n",
            self.dynamic_exponent, self.static_exponent
        ));
        out
    }
}

/// Least-squares slope of `ln(y)` against `ln(x)`.
pub fn fit_exponent(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn fresh_store(
    data: &crate::runner::session::StreamInputs,
    hyper: &HyperParams,
) -> Result<(NodeStore, BoundedRowGraph)> {
    let stats = compute_context_stats(&data.prototypes, &data.fewshot)?;
    let store =
        NodeStore::new(data.prototypes.clone(), data.fewshot.clone(), EdgeWeighting::new(&stats, true, true, true))?;
    let graph = BoundedRowGraph::new(Capacities::from(hyper), store.classes(), store.num_fewshot());
    Ok((store, graph))
}

pub fn bench_construction(cfg: &BenchConfig) -> Result<BenchTable> {
    if cfg.node_counts.len() < 2 {
        return Err(Error::Config("need at least two node counts to fit growth".into()));
    }
    let mut rows = Vec::new();
    for &nodes in &cfg.node_counts {
        if nodes <= cfg.classes {
            return Err(Error::Config(format!("{nodes} nodes leave no room for test samples")));
        }
        let tests = nodes - cfg.classes;
        let synth = SyntheticConfig {
            classes: cfg.classes,
            per_class: tests.div_ceil(cfg.classes),
            shots: 0,
            dim: cfg.dim,
            noise: cfg.noise,
            seed: cfg.seed,
        };
        let data = generate_synthetic(&synth)?.inputs()?.truncated(tests);

        let mut dynamic_seconds = f64::INFINITY;
        for _ in 0..cfg.dynamic_repeats.max(1) {
            let (mut store, mut graph) = fresh_store(&data, &cfg.hyper)?;
            let mut total = 0.0;
            for u in &data.tests {
                store.push_test(u)?;
                let start = Instant::now();
                expand(&mut graph, &store)?;
                let normalized = finalize(&graph, cfg.hyper.gamma);
                total += start.elapsed().as_secs_f64();
                std::hint::black_box(normalized);
            }
            dynamic_seconds = dynamic_seconds.min(total);
        }

        let samples = cfg.static_samples.clamp(1, tests);
        let stride = tests as f64 / samples as f64;
        let checkpoints: Vec<usize> =
            (0..samples).map(|s| (((s as f64 + 0.5) * stride) as usize).min(tests - 1) + 1).collect();
        let (mut store, mut graph) = fresh_store(&data, &cfg.hyper)?;
        let mut static_seconds = 0.0;
        let mut audit_mismatches = 0;
        let mut next = checkpoints.iter().peekable();
        for (i, u) in data.tests.iter().enumerate() {
            store.push_test(u)?;
            expand(&mut graph, &store)?;
            if next.peek() == Some(&&(i + 1)) {
                next.next();
                let start = Instant::now();
                let normalized = rebuild_static(&store, &cfg.hyper);
                static_seconds += start.elapsed().as_secs_f64() * stride;
                std::hint::black_box(normalized);
                if cfg.audit && build_static_rows(&store, Capacities::from(&cfg.hyper)) != graph {
                    audit_mismatches += 1;
                }
            }
        }
        rows.push(BenchRow { nodes, dynamic_seconds, static_seconds, static_timed: samples, audit_mismatches });
    }
    let dynamic: Vec<(f64, f64)> = rows.iter().map(|r| (r.nodes as f64, r.dynamic_seconds)).collect();
    let stat: Vec<(f64, f64)> = rows.iter().map(|r| (r.nodes as f64, r.static_seconds)).collect();
    Ok(BenchTable { dynamic_exponent: fit_exponent(&dynamic), static_exponent: fit_exponent(&stat), rows })
}
