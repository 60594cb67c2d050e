//! Component ablations, graph-block ablations and a neighbour-count sweep on
//! one synthetic task.
//!
//! cargo run --release --example ablation_table -- [noise]

use lpstream::runner::ablation::{ablate, block_configs, component_configs, knn_sweep};
use lpstream::runner::synthetic::{generate_synthetic, SyntheticConfig};

fn main() -> lpstream::Result<()> {
    let noise: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1.2);
    let cfg = SyntheticConfig { classes: 10, per_class: 40, shots: 4, dim: 64, noise, seed: 2 };
    let inputs = generate_synthetic(&cfg)?.inputs()?;

    println!("components");
    print!("{}", ablate(&inputs, &component_configs())?.render());
    println!("\ngraph blocks");
    print!("{}", ablate(&inputs, &block_configs())?.render());

    let ks = [1, 3, 5, 8, 10];
    println!("\nneighbour counts (zero-shot, text re-weighting)");
    print!("{}", knn_sweep(&inputs.zero_shot(), &component_configs()[1], &ks, &ks)?.render());
    Ok(())
}
