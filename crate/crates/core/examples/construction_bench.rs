//! Times dynamic expansion against rebuilding the graph at every arrival,
//! then fits per-arrival expansion time against the current node count.
//!
//! cargo run --release --example construction_bench -- [max_nodes]

use std::time::Instant;

use lpstream::graph::{expand, BoundedRowGraph, Capacities, NodeStore};
use lpstream::reweight::{compute_context_stats, EdgeWeighting};
use lpstream::runner::bench::{bench_construction, BenchConfig};
use lpstream::runner::synthetic::{generate_synthetic, SyntheticConfig};
use lpstream::HyperParams;

fn main() -> lpstream::Result<()> {
    let max: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let node_counts: Vec<usize> = [max / 4, max / 2, max].into_iter().filter(|&n| n > 10).collect();
    let cfg = BenchConfig { node_counts, audit: true, ..BenchConfig::default() };
    let table = bench_construction(&cfg)?;
    print!("{}", table.render());
    let mismatches: usize = table.rows.iter().map(|r| r.audit_mismatches).sum();
    println!("audited arrivals where the graphs differed: {mismatches}");

    let synth = SyntheticConfig { classes: 10, per_class: max / 10, dim: 64, ..SyntheticConfig::default() };
    let inputs = generate_synthetic(&synth)?.inputs()?;
    let stats = compute_context_stats(&inputs.prototypes, &[])?;
    let mut store = NodeStore::new(inputs.prototypes.clone(), vec![], EdgeWeighting::new(&stats, true, true, true))?;
    let mut graph = BoundedRowGraph::new(Capacities::from(&HyperParams::default()), 10, 0);
    let mut points = Vec::new();
    for u in &inputs.tests {
        store.push_test(u)?;
        let start = Instant::now();
        expand(&mut graph, &store)?;
        points.push((store.num_nodes() as f64, start.elapsed().as_secs_f64()));
    }
    let (slope, intercept, r2) = linear_fit(&points);
    println!("per-arrival expand time ~ {:.3} us + {:.4} us/node, R^2 = {r2:.3}", intercept * 1e6, slope * 1e6);
    let binned: Vec<(f64, f64)> = points
        .chunks(50)
        .map(|c| {
            (c.iter().map(|p| p.0).sum::<f64>() / c.len() as f64, c.iter().map(|p| p.1).sum::<f64>() / c.len() as f64)
        })
        .collect();
    println!("over means of 50 consecutive arrivals: R^2 = {:.3}", linear_fit(&binned).2);
    Ok(())
}

fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy * sxy / (sxx * syy))
}
