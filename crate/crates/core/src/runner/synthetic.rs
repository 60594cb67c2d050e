//! Seeded synthetic class manifolds standing in for encoder features.
//!
//! Class means are drawn uniformly on the unit sphere, at least 30° apart.
//! Every sample (prototype, test or few-shot) is `unit(mean + ε)` with
//! `ε ~ N(0, (noise² / d)·I)`, so `noise` is the expected norm of the
//! perturbation regardless of dimension.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::runner::io::{EmbeddingFile, FewshotIndices, LabelSidecar};
use crate::runner::session::StreamInputs;

/// Minimum pairwise angle between class means, in degrees.
pub const MIN_MEAN_ANGLE_DEG: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub per_class: usize,
    /// Few-shot exemplars per class; zero writes no few-shot file.
    pub shots: usize,
    pub dim: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { classes: 10, per_class: 100, shots: 0, dim: 64, noise: 0.3, seed: 0 }
    }
}

/// Generated files, ready to write or ingest.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub prototypes: EmbeddingFile,
    pub tests: EmbeddingFile,
    pub fewshot: Option<EmbeddingFile>,
    pub sidecar: LabelSidecar,
}

/// Paths written by [`SyntheticData::write_dir`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticPaths {
    pub prototypes: PathBuf,
    pub tests: PathBuf,
    pub fewshot: Option<PathBuf>,
    pub sidecar: PathBuf,
}

impl SyntheticData {
    pub fn inputs(&self) -> Result<StreamInputs> {
        StreamInputs::from_files(&self.prototypes, &self.tests, self.fewshot.as_ref(), &self.sidecar)
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<SyntheticPaths> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let paths = SyntheticPaths {
            prototypes: dir.join("prototypes.eclp"),
            tests: dir.join("test.eclp"),
            fewshot: self.fewshot.as_ref().map(|_| dir.join("fewshot.eclp")),
            sidecar: dir.join("sidecar.json"),
        };
        self.prototypes.write(&paths.prototypes)?;
        self.tests.write(&paths.tests)?;
        if let (Some(f), Some(p)) = (&self.fewshot, &paths.fewshot) {
            f.write(p)?;
        }
        self.sidecar.write(&paths.sidecar)?;
        Ok(paths)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn sample_around(rng: &mut ChaCha8Rng, mean: &[f64], noise: f64) -> Vec<f32> {
    let eps = gaussian(rng, mean.len(), noise / (mean.len() as f64).sqrt());
    unit(mean.iter().zip(eps).map(|(m, e)| m + e).collect()).into_iter().map(|x| x as f32).collect()
}

/// Draws `classes` unit means with pairwise angle at least 30°, giving up
/// after `10 · classes` rejected draws.
pub fn class_means(rng: &mut ChaCha8Rng, classes: usize, dim: usize) -> Result<Vec<Vec<f64>>> {
    let max_cos = MIN_MEAN_ANGLE_DEG.to_radians().cos();
    let budget = 10 * classes;
    let mut rejected = 0;
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(classes);
    while means.len() < classes {
        let candidate = unit(gaussian(rng, dim, 1.0));
        let too_close = means.iter().any(|m| m.iter().zip(&candidate).map(|(a, b)| a * b).sum::<f64>() > max_cos);
        if too_close {
            rejected += 1;
            if rejected > budget {
                return Err(Error::Generator(format!(
                    "could not place {classes} means {MIN_MEAN_ANGLE_DEG}° apart in {dim} dimensions"
                )));
            }
        } else {
            means.push(candidate);
        }
    }
    Ok(means)
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    if cfg.classes < 2 {
        return Err(Error::TooFewClasses(cfg.classes));
    }
    if cfg.dim < 2 {
        return Err(Error::Generator("dimension must be at least 2".into()));
    }
    if !(cfg.noise.is_finite() && cfg.noise >= 0.0) {
        return Err(Error::Generator(format!("noise must be non-negative, got {}", cfg.noise)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let means = class_means(&mut rng, cfg.classes, cfg.dim)?;

    let prototypes: Vec<Vec<f32>> = means.iter().map(|m| sample_around(&mut rng, m, cfg.noise)).collect();

    let mut tests: Vec<(usize, Vec<f32>)> = Vec::with_capacity(cfg.classes * cfg.per_class);
    for (c, m) in means.iter().enumerate() {
        for _ in 0..cfg.per_class {
            tests.push((c, sample_around(&mut rng, m, cfg.noise)));
        }
    }
    tests.shuffle(&mut rng);

    let mut shots: Vec<Vec<f32>> = Vec::new();
    let mut shot_labels = Vec::new();
    for (c, m) in means.iter().enumerate() {
        for _ in 0..cfg.shots {
            shots.push(sample_around(&mut rng, m, cfg.noise));
            shot_labels.push(c);
        }
    }

    let test_rows: Vec<&[f32]> = tests.iter().map(|(_, v)| v.as_slice()).collect();
    let tests_file = if test_rows.is_empty() {
        EmbeddingFile::new(cfg.dim, Vec::new())?
    } else {
        EmbeddingFile::from_rows(&test_rows)?
    };
    Ok(SyntheticData {
        prototypes: EmbeddingFile::from_rows(&prototypes)?,
        tests: tests_file,
        fewshot: if shots.is_empty() { None } else { Some(EmbeddingFile::from_rows(&shots)?) },
        sidecar: LabelSidecar {
            class_names: (0..cfg.classes).map(|c| format!("class_{c:03}")).collect(),
            labels: Some(tests.iter().map(|(c, _)| *c).collect()),
            fewshot_indices: (!shot_labels.is_empty()).then_some(FewshotIndices::PerRow(shot_labels)),
        },
    })
}

/// A seeded uniform permutation of `0..n`.
pub fn random_order(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// A stream order whose first `fraction` of positions hold only hard samples
/// (those the nearest-prototype baseline misclassifies), followed by the
/// remaining samples in seeded random order. If there are fewer hard samples
/// than the head needs, all of them go first.
pub fn hard_first_order(inputs: &StreamInputs, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    let labels =
        inputs.labels.as_ref().ok_or_else(|| Error::Config("hard-first ordering needs ground-truth labels".into()))?;
    let baseline = inputs.baseline_predictions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hard: Vec<usize> = (0..labels.len()).filter(|&i| baseline[i] != labels[i]).collect();
    hard.shuffle(&mut rng);
    let head = ((fraction * labels.len() as f64).ceil() as usize).min(hard.len());
    let mut order: Vec<usize> = hard[..head].to_vec();
    let mut rest: Vec<usize> = (0..labels.len()).filter(|i| !order.contains(i)).collect();
    rest.shuffle(&mut rng);
    order.extend(rest);
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_bytes() {
        let cfg = SyntheticConfig { classes: 3, per_class: 5, shots: 2, dim: 8, noise: 0.2, seed: 9 };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.tests.to_bytes(), b.tests.to_bytes());
        assert_eq!(a.prototypes.to_bytes(), b.prototypes.to_bytes());
        assert_eq!(a, b);
        let c = generate_synthetic(&SyntheticConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.tests, c.tests);
    }

    #[test]
    fn shapes_and_labels() {
        let cfg = SyntheticConfig { classes: 4, per_class: 6, shots: 3, dim: 16, noise: 0.3, seed: 1 };
        let d = generate_synthetic(&cfg).unwrap();
        assert_eq!(d.prototypes.count(), 4);
        assert_eq!(d.tests.count(), 24);
        assert_eq!(d.fewshot.as_ref().unwrap().count(), 12);
        let labels = d.sidecar.labels.as_ref().unwrap();
        for c in 0..4 {
            assert_eq!(labels.iter().filter(|&&l| l == c).count(), 6);
        }
        let inputs = d.inputs().unwrap();
        assert_eq!(inputs.fewshot[4].class_id(), Some(1));
    }

    #[test]
    fn means_are_separated() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let means = class_means(&mut rng, 10, 32).unwrap();
        let max_cos = MIN_MEAN_ANGLE_DEG.to_radians().cos();
        for i in 0..10 {
            for j in 0..i {
                let cos: f64 = means[i].iter().zip(&means[j]).map(|(a, b)| a * b).sum();
                assert!(cos <= max_cos);
            }
        }
    }

    #[test]
    fn crowded_sphere_fails() {
        let cfg = SyntheticConfig { classes: 40, per_class: 1, dim: 2, ..Default::default() };
        assert!(matches!(generate_synthetic(&cfg), Err(Error::Generator(_))));
    }

    #[test]
    fn noiseless_points_sit_on_means() {
        let cfg = SyntheticConfig { classes: 3, per_class: 4, dim: 5, noise: 0.0, seed: 2, shots: 0 };
        let inputs = generate_synthetic(&cfg).unwrap().inputs().unwrap();
        let labels = inputs.labels.as_ref().unwrap();
        for (u, &l) in inputs.tests.iter().zip(labels) {
            for (a, b) in u.values().iter().zip(inputs.prototypes[l].values()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn hard_first_puts_misclassified_samples_first() {
        let cfg = SyntheticConfig { classes: 5, per_class: 40, dim: 16, noise: 0.9, seed: 4, shots: 0 };
        let inputs = generate_synthetic(&cfg).unwrap().inputs().unwrap();
        let order = hard_first_order(&inputs, 0.1, 7).unwrap();
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..200).collect::<Vec<_>>());
        let base = inputs.baseline_predictions();
        let labels = inputs.labels.as_ref().unwrap();
        let hard = (0..200).filter(|&i| base[i] != labels[i]).count();
        let head = 20.min(hard);
        assert!(order[..head].iter().all(|&i| base[i] != labels[i]));
        assert_eq!(random_order(5, 1), random_order(5, 1));
    }
}
