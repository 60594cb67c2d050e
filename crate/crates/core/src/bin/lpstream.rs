//! Command-line front end: streams embedding files through a session and
//! writes a JSON report. `--bench` and `--generate` run the construction
//! benchmark and the synthetic data generator instead.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lpstream::runner::bench::{bench_construction, BenchConfig};
use lpstream::runner::oracle_check;
use lpstream::runner::synthetic::{generate_synthetic, SyntheticConfig};
use lpstream::{run_stream, Error, HyperParams, RunFlags, StreamInputs};

const EXIT_INGEST: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_ORACLE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "lpstream", version, about = "Streaming label propagation over embedding files")]
struct Args {
    /// Prototype embeddings, one row per class.
    #[arg(long)]
    prototypes: Option<PathBuf>,
    /// Test embeddings in stream order.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Optional few-shot exemplar embeddings.
    #[arg(long)]
    fewshot: Option<PathBuf>,
    /// JSON sidecar with class names, labels and few-shot classes.
    #[arg(long)]
    sidecar: Option<PathBuf>,

    #[arg(long, default_value_t = 3)]
    kp: usize,
    #[arg(long, default_value_t = 8)]
    ku: usize,
    #[arg(long, default_value_t = 8)]
    kl: usize,
    #[arg(long, default_value_t = 10.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    iters: usize,

    /// Use plain cosine for test and prototype edges.
    #[arg(long)]
    no_text_reweight: bool,
    /// Keep text re-weighting on test edges but not on prototype edges.
    #[arg(long)]
    no_proto_reweight: bool,
    /// Use plain cosine for few-shot edges.
    #[arg(long)]
    no_fewshot_reweight: bool,
    /// Also report transductive predictions over the final graph.
    #[arg(long)]
    transductive: bool,
    /// Compare transductive predictions with the dense oracle (≤ 500 nodes).
    #[arg(long)]
    oracle_check: bool,

    /// Run the static-vs-dynamic construction benchmark.
    #[arg(long)]
    bench: bool,
    /// Node counts for --bench.
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2000,4000")]
    bench_nodes: Vec<usize>,

    /// Write a synthetic dataset into this directory.
    #[arg(long)]
    generate: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    #[arg(long, default_value_t = 0)]
    shots: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the JSON run report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Where to write per-arrival wall times as CSV.
    #[arg(long)]
    timings: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Ingest { .. }
        | Error::Io(_)
        | Error::Json(_)
        | Error::DimensionMismatch { .. }
        | Error::ZeroVector
        | Error::NonFinite(_) => EXIT_INGEST,
        _ => EXIT_CONFIG,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let hyper = HyperParams {
        k_prototype: args.kp,
        k_test: args.ku,
        k_fewshot: args.kl,
        gamma: args.gamma,
        beta: args.beta,
        alpha: args.alpha,
        iters: args.iters,
    };
    if let Err(e) = hyper.validate() {
        return fail(e);
    }
    let flags = RunFlags {
        text_reweight: !args.no_text_reweight,
        reweight_prototype_edges: !args.no_proto_reweight,
        fewshot_reweight: !args.no_fewshot_reweight,
        transductive: args.transductive,
    };

    if let Some(dir) = &args.generate {
        let cfg = SyntheticConfig {
            classes: args.classes,
            per_class: args.per_class,
            shots: args.shots,
            dim: args.dim,
            noise: args.noise,
            seed: args.seed,
        };
        return match generate_synthetic(&cfg).and_then(|d| d.write_dir(dir)) {
            Ok(paths) => {
                println!("wrote {}", paths.tests.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        };
    }

    if args.bench {
        let cfg = BenchConfig {
            node_counts: args.bench_nodes.clone(),
            dim: args.dim,
            seed: args.seed,
            hyper,
            ..Default::default()
        };
        return match bench_construction(&cfg) {
            Ok(table) => {
                print!("{}", table.render());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        };
    }

    let (Some(prototypes), Some(test), Some(sidecar)) = (&args.prototypes, &args.test, &args.sidecar) else {
        return fail(Error::Config("--prototypes, --test and --sidecar are required".into()));
    };
    let inputs = match StreamInputs::load(prototypes, test, args.fewshot.as_deref(), sidecar) {
        Ok(i) => i,
        Err(e) => return fail(e),
    };
    let report = match run_stream(&inputs, &hyper, &flags) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    println!("{}", report.summary());
    if let Some(path) = &args.report {
        if let Err(e) = report.write(path) {
            return fail(e);
        }
    }
    if let Some(path) = &args.timings {
        if let Err(e) = std::fs::write(path, report.timings_csv()) {
            return fail(e.into());
        }
    }
    if args.oracle_check {
        match oracle_check(&inputs, &hyper, &flags) {
            Ok(check) if check.passed() => println!("oracle check: {} predictions agree", check.engine.len()),
            Ok(check) => {
                eprintln!("oracle check: {} mismatches, first at test {}", check.mismatches.len(), check.mismatches[0]);
                return ExitCode::from(EXIT_ORACLE);
            }
            Err(e) => return fail(e),
        }
    }
    ExitCode::SUCCESS
}
