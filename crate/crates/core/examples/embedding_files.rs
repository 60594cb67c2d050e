//! Writes embeddings and a label sidecar in the on-disk formats the CLI
//! reads, checks the bit-exact round trip, then runs a stream from disk.

use lpstream::runner::io::{EmbeddingFile, FewshotIndices, LabelSidecar, HEADER_LEN};
use lpstream::{run_stream, HyperParams, RunFlags, StreamInputs};

fn main() -> lpstream::Result<()> {
    let dir = std::env::temp_dir().join("lpstream-embedding-files");
    std::fs::create_dir_all(&dir)?;

    let prototypes = EmbeddingFile::from_rows(&[[1.0f32, 0.0, 0.2], [0.0, 1.0, 0.2], [0.1, 0.1, 1.0]])?;
    let tests = EmbeddingFile::from_rows(&[
        [0.9f32, 0.1, 0.1],
        [0.2, 0.8, 0.3],
        [0.1, 0.2, 0.9],
        [0.7, 0.3, 0.0],
        [0.0, 0.9, 0.1],
    ])?;
    let fewshot = EmbeddingFile::from_rows(&[[0.95f32, 0.05, 0.1], [0.05, 0.1, 0.95]])?;
    let sidecar = LabelSidecar {
        class_names: vec!["cat".into(), "dog".into(), "bird".into()],
        labels: Some(vec![0, 1, 2, 0, 1]),
        fewshot_indices: Some(FewshotIndices::PerClass(vec![vec![0], vec![], vec![1]])),
    };

    prototypes.write(dir.join("prototypes.eclp"))?;
    tests.write(dir.join("test.eclp"))?;
    fewshot.write(dir.join("fewshot.eclp"))?;
    sidecar.write(dir.join("sidecar.json"))?;

    let bytes = std::fs::read(dir.join("test.eclp"))?;
    println!(
        "test.eclp: {} bytes ({HEADER_LEN}-byte header + {} rows x {} f32)",
        bytes.len(),
        tests.count(),
        tests.dim()
    );
    let reread = EmbeddingFile::read(dir.join("test.eclp"))?;
    assert!(reread.data().iter().zip(tests.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    println!("round trip is bit-exact");

    let fewshot_path = dir.join("fewshot.eclp");
    let inputs = StreamInputs::load(
        dir.join("prototypes.eclp"),
        dir.join("test.eclp"),
        Some(fewshot_path.as_path()),
        dir.join("sidecar.json"),
    )?;
    let report = run_stream(&inputs, &HyperParams::default(), &RunFlags::default())?;
    for (i, p) in report.predictions.iter().enumerate() {
        println!("test {i}: {}", inputs.class_names[*p]);
    }
    report.write(dir.join("report.json"))?;
    println!("report written to {}", dir.join("report.json").display());
    Ok(())
}
