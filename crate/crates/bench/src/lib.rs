//! Fixture builders shared by the benchmarks.

use propml_core::data::{synth_generate, SynthConfig};
use propml_core::{Dataset, LabelSet, Matrix, StreamRng};
use rand::Rng;

/// Synthetic dataset with 10 classes, 1 to 3 labels each.
pub fn dataset(n: usize, dim: usize) -> Dataset {
    synth_generate(&SynthConfig {
        num_instances: n,
        num_classes: 10,
        dim,
        labels_min: 1,
        labels_max: 3,
        noise_std: 0.5,
        seed: 7,
    })
    .expect("valid synth config")
}

pub fn uniform(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = StreamRng::new(seed);
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).expect("finite")
}

/// Random nonempty label sets over `c` classes.
pub fn label_sets(n: usize, c: usize, seed: u64) -> Vec<LabelSet> {
    let mut rng = StreamRng::new(seed);
    (0..n)
        .map(|_| {
            let mut labels: Vec<usize> = (0..c).filter(|_| rng.random_bool(0.3)).collect();
            if labels.is_empty() {
                labels.push(rng.random_range(0..c));
            }
            LabelSet::new(labels)
        })
        .collect()
}
