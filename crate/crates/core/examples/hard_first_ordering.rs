//! Compares a random stream order with orders whose first 5% and 10% are
//! samples the nearest-prototype baseline gets wrong.
//!
//! cargo run --release --example hard_first_ordering -- [noise]

use lpstream::runner::synthetic::{generate_synthetic, hard_first_order, random_order, SyntheticConfig};
use lpstream::{run_stream, HyperParams, RunFlags};

fn main() -> lpstream::Result<()> {
    let noise: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1.2);
    let cfg = SyntheticConfig { classes: 10, per_class: 100, dim: 64, noise, seed: 4, ..Default::default() };
    let inputs = generate_synthetic(&cfg)?.inputs()?;
    let hyper = HyperParams::default();
    let flags = RunFlags::default();

    let orders = [
        ("random", random_order(inputs.tests.len(), 1)),
        ("5% hard first", hard_first_order(&inputs, 0.05, 1)?),
        ("10% hard first", hard_first_order(&inputs, 0.10, 1)?),
    ];
    for (name, order) in orders {
        let report = run_stream(&inputs.reordered(&order), &hyper, &flags)?;
        println!(
            "{name:<15} online {:6.2}%  baseline {:6.2}%",
            report.online.expect("labelled").percent(),
            report.baseline.expect("labelled").percent()
        );
    }
    Ok(())
}
