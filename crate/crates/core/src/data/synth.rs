use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, LabelSet};
use crate::error::{Error, Result};
use crate::tensor::{Matrix, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_instances: usize,
    pub num_classes: usize,
    pub dim: usize,
    pub labels_min: usize,
    pub labels_max: usize,
    pub noise_std: f64,
    pub seed: u64,
}

/// Gaussian class prototypes; each instance is the mean of a uniformly chosen
/// label subset's prototypes plus isotropic Gaussian noise.
///
/// Prototypes come from substream 0 of `seed`, instances from substream 1.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset> {
    let SynthConfig {
        num_instances: n,
        num_classes: c,
        dim: d,
        labels_min: lo,
        labels_max: hi,
        noise_std,
        seed,
    } = *cfg;
    if lo == 0 || lo > hi || hi > c {
        return Err(Error::invalid(format!(
            "labels per instance range [{lo}, {hi}] must be nonempty within [1, {c}]"
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(format!(
            "noise_std must be >= 0, got {noise_std}"
        )));
    }
    if d == 0 {
        return Err(Error::invalid("dim must be positive"));
    }

    let root = StreamRng::new(seed);
    let mut proto_rng = root.substream(0);
    let prototypes: Vec<f64> = (0..c * d)
        .map(|_| StandardNormal.sample(&mut proto_rng))
        .collect();

    let mut rng = root.substream(1);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let count = rng.random_range(lo..=hi);
        let y = LabelSet::new(sample(&mut rng, c, count).into_vec());
        let mut x = vec![0.0; d];
        for l in y.iter() {
            for (xj, pj) in x.iter_mut().zip(&prototypes[l * d..(l + 1) * d]) {
                *xj += pj;
            }
        }
        let inv = 1.0 / y.len() as f64;
        for xj in &mut x {
            *xj *= inv;
            if noise_std > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                *xj += noise_std * z;
            }
        }
        data.extend_from_slice(&x);
        labels.push(y);
    }
    Dataset::new(Matrix::from_vec(n, d, data)?, labels, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SynthConfig {
        SynthConfig {
            num_instances: 50,
            num_classes: 5,
            dim: 8,
            labels_min: 1,
            labels_max: 1,
            noise_std: 0.0,
            seed: 3,
        }
    }

    #[test]
    fn zero_noise_single_label_instances_are_prototypes() {
        let ds = synth_generate(&cfg()).unwrap();
        for i in 0..ds.len() {
            for j in 0..ds.len() {
                let same_label = ds.true_labels()[i] == ds.true_labels()[j];
                let same_row = ds.features().row(i) == ds.features().row(j);
                assert_eq!(same_label, same_row);
            }
        }
    }

    #[test]
    fn deterministic() {
        let c = SynthConfig {
            noise_std: 0.3,
            labels_max: 3,
            ..cfg()
        };
        assert_eq!(synth_generate(&c).unwrap(), synth_generate(&c).unwrap());
    }

    #[test]
    fn mean_label_count_matches_uniform_range() {
        let c = SynthConfig {
            num_instances: 10_000,
            num_classes: 6,
            labels_max: 3,
            noise_std: 0.1,
            ..cfg()
        };
        let ds = synth_generate(&c).unwrap();
        assert!((ds.mean_label_count() - 2.0).abs() < 0.05);
    }

    #[test]
    fn rejects_empty_label_range() {
        assert!(synth_generate(&SynthConfig {
            labels_min: 0,
            ..cfg()
        })
        .is_err());
        assert!(synth_generate(&SynthConfig {
            labels_min: 3,
            labels_max: 2,
            ..cfg()
        })
        .is_err());
        assert!(synth_generate(&SynthConfig {
            labels_max: 6,
            ..cfg()
        })
        .is_err());
    }
}
