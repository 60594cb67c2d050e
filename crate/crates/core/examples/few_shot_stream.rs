//! Adds labelled exemplars to the graph and shows the effect of
//! re-weighting few-shot edges by the inverse exemplar variance.
//!
//! cargo run --release --example few_shot_stream -- [shots]

use lpstream::runner::synthetic::{generate_synthetic, SyntheticConfig};
use lpstream::{run_stream, HyperParams, RunFlags};

fn main() -> lpstream::Result<()> {
    let shots: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4);
    let cfg = SyntheticConfig { classes: 10, per_class: 50, shots, dim: 32, noise: 1.0, seed: 7 };
    let inputs = generate_synthetic(&cfg)?.inputs()?;
    let hyper = HyperParams::default();

    let runs = [
        ("zero-shot", inputs.zero_shot(), RunFlags::default()),
        ("few-shot, plain", inputs.clone(), RunFlags { fewshot_reweight: false, ..RunFlags::default() }),
        ("few-shot, re-weighted", inputs.clone(), RunFlags::default()),
    ];
    for (name, data, flags) in runs {
        let report = run_stream(&data, &hyper, &flags)?;
        let online = report.online.expect("labelled");
        println!("{name:<22} {:6.2}%  ({} exemplars)", online.percent(), data.fewshot.len());
    }
    Ok(())
}
