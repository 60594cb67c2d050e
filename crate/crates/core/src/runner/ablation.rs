//! Component ablations and neighbour-count sweeps.

use crate::error::{Error, Result};
use crate::model::HyperParams;
use crate::runner::session::{run_stream, Accuracy, RunFlags, StreamInputs};

/// One ablation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationConfig {
    pub name: String,
    pub use_fewshot: bool,
    pub flags: RunFlags,
    pub hyper: HyperParams,
}

impl AblationConfig {
    pub fn new(name: &str, use_fewshot: bool, text_reweight: bool, fewshot_reweight: bool) -> Self {
        Self {
            name: name.to_string(),
            use_fewshot,
            flags: RunFlags { text_reweight, fewshot_reweight, ..Default::default() },
            hyper: HyperParams::default(),
        }
    }
}

/// The component grid: propagation alone, with text re-weighting, and the
/// few-shot variants with and without each re-weighting.
pub fn component_configs() -> Vec<AblationConfig> {
    vec![
        AblationConfig::new("LP", false, false, false),
        AblationConfig::new("LP+text", false, true, false),
        AblationConfig::new("LP+FS", true, false, false),
        AblationConfig::new("LP+FS+fs-rw", true, false, true),
        AblationConfig::new("LP+FS+text+fs-rw", true, true, true),
    ]
}

/// The graph-block grid: prototype edges only, then adding test edges, for
/// zero- and few-shot.
pub fn block_configs() -> Vec<AblationConfig> {
    let with_k = |name: &str, fewshot: bool, k_test: usize| AblationConfig {
        hyper: HyperParams { k_test, k_fewshot: if fewshot { 8 } else { 0 }, ..Default::default() },
        ..AblationConfig::new(name, fewshot, true, true)
    };
    vec![
        with_k("W_up", false, 0),
        with_k("W_up+W_u", false, 8),
        with_k("W_up+W_lu", true, 0),
        with_k("W_up+W_u+W_lu", true, 8),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub config: AblationConfig,
    pub accuracy: Accuracy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub baseline: Accuracy,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn render(&self) -> String {
        let mark = |b: bool| if b { "x" } else { "-" };
        let mut out = format!(
            "{:<20} {:>4} {:>4} {:>4} {:>4} {:>4} {:>9}\n",
            "config", "FS", "text", "fsrw", "kP", "kU", "acc (%)"
        );
        out.push_str(&format!(
            "{:<20} {:>4} {:>4} {:>4} {:>4} {:>4} {:>9.2}\n",
            "nearest prototype",
            "-",
            "-",
            "-",
            "-",
            "-",
            self.baseline.percent()
        ));
        for r in &self.rows {
            let c = &r.config;
            out.push_str(&format!(
                "{:<20} {:>4} {:>4} {:>4} {:>4} {:>4} {:>9.2}\n",
                c.name,
                mark(c.use_fewshot),
                mark(c.flags.text_reweight),
                mark(c.use_fewshot && c.flags.fewshot_reweight),
                c.hyper.k_prototype,
                c.hyper.k_test,
                r.accuracy.percent()
            ));
        }
        out
    }
}

fn require_labels(inputs: &StreamInputs) -> Result<&[usize]> {
    inputs.labels.as_deref().ok_or_else(|| Error::Config("ablations need ground-truth labels".into()))
}

/// Online accuracy of one configuration.
pub fn run_config(inputs: &StreamInputs, config: &AblationConfig) -> Result<Accuracy> {
    require_labels(inputs)?;
    if config.use_fewshot && inputs.fewshot.is_empty() {
        return Err(Error::Config(format!("{} needs few-shot exemplars", config.name)));
    }
    let data = if config.use_fewshot { inputs.clone() } else { inputs.zero_shot() };
    let report = run_stream(&data, &config.hyper, &config.flags)?;
    report.online.ok_or_else(|| Error::Config("run produced no accuracy".into()))
}

pub fn ablate(inputs: &StreamInputs, configs: &[AblationConfig]) -> Result<AblationTable> {
    let labels = require_labels(inputs)?;
    let baseline = Accuracy::of(&inputs.baseline_predictions(), labels);
    let rows = configs
        .iter()
        .map(|c| Ok(AblationRow { config: c.clone(), accuracy: run_config(inputs, c)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationTable { baseline, rows })
}

/// Accuracy for every `(k_prototype, k_test)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGrid {
    pub k_prototype: Vec<usize>,
    pub k_test: Vec<usize>,
    /// `accuracy[i][j]` for `k_prototype[i]`, `k_test[j]`.
    pub accuracy: Vec<Vec<Accuracy>>,
}

impl KnnGrid {
    pub fn cells(&self) -> usize {
        self.accuracy.iter().map(Vec::len).sum()
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:>8}", "kP \\ kU");
        for ku in &self.k_test {
            out.push_str(&format!("{ku:>8}"));
        }
        out.push('\n');
        for (kp, row) in self.k_prototype.iter().zip(&self.accuracy) {
            out.push_str(&format!("{kp:>8}"));
            for a in row {
                out.push_str(&format!("{:>8.2}", a.percent()));
            }
            out.push('\n');
        }
        out
    }
}

pub fn knn_sweep(
    inputs: &StreamInputs,
    base: &AblationConfig,
    k_prototype: &[usize],
    k_test: &[usize],
) -> Result<KnnGrid> {
    let accuracy = k_prototype
        .iter()
        .map(|&kp| {
            k_test
                .iter()
                .map(|&ku| {
                    let cfg = AblationConfig {
                        hyper: HyperParams { k_prototype: kp, k_test: ku, ..base.hyper },
                        ..base.clone()
                    };
                    run_config(inputs, &cfg)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KnnGrid { k_prototype: k_prototype.to_vec(), k_test: k_test.to_vec(), accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::synthetic::{generate_synthetic, SyntheticConfig};

    fn data() -> StreamInputs {
        let cfg = SyntheticConfig { classes: 3, per_class: 10, shots: 2, dim: 8, noise: 0.5, seed: 5 };
        generate_synthetic(&cfg).unwrap().inputs().unwrap()
    }

    #[test]
    fn grid_shape() {
        let inputs = data();
        let grid = knn_sweep(&inputs, &component_configs()[1], &[1, 3, 5, 8, 10], &[1, 3, 5, 8, 10]).unwrap();
        assert_eq!(grid.cells(), 25);
        assert_eq!(grid.render().lines().count(), 6);
    }

    #[test]
    fn table_is_deterministic() {
        let inputs = data();
        let a = ablate(&inputs, &component_configs()).unwrap();
        let b = ablate(&inputs, &component_configs()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 5);
        assert!(a.render().contains("LP+text"));
        assert_eq!(ablate(&inputs, &block_configs()).unwrap().rows.len(), 4);
    }

    #[test]
    fn fewshot_config_needs_exemplars() {
        let inputs = data().zero_shot();
        assert!(run_config(&inputs, &component_configs()[2]).is_err());
    }
}
