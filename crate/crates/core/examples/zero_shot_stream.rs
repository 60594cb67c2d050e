//! Streams a synthetic zero-shot task through a session one arrival at a
//! time and compares the online predictions with the nearest-prototype
//! baseline.
//!
//! cargo run --release --example zero_shot_stream -- [noise] [seed]

use lpstream::runner::session::Accuracy;
use lpstream::runner::synthetic::{generate_synthetic, SyntheticConfig};
use lpstream::{HyperParams, RunFlags, Session};

fn main() -> lpstream::Result<()> {
    let mut args = std::env::args().skip(1);
    let noise: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.8);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);

    let cfg = SyntheticConfig { classes: 8, per_class: 60, dim: 32, noise, seed, ..Default::default() };
    let inputs = generate_synthetic(&cfg)?.inputs()?;
    let labels = inputs.labels.clone().expect("synthetic data is labelled");

    let mut session = Session::new(inputs.prototypes.clone(), vec![], HyperParams::default(), RunFlags::default())?;
    let mut predictions = Vec::new();
    for (i, u) in inputs.tests.iter().enumerate() {
        let arrival = session.push(u)?;
        predictions.push(arrival.prediction);
        if (i + 1) % 96 == 0 {
            let so_far = Accuracy::of(&predictions, &labels[..=i]);
            println!(
                "after {:>3} arrivals: {:>6.2}% online, graph has {} edges",
                i + 1,
                so_far.percent(),
                session.graph().num_edges()
            );
        }
    }
    let online = Accuracy::of(&predictions, &labels);
    let baseline = Accuracy::of(&inputs.baseline_predictions(), &labels);
    println!("online   {:6.2}%", online.percent());
    println!("baseline {:6.2}%", baseline.percent());
    Ok(())
}
