use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dataset::MultiViewDataset;
use crate::error::{CuhError, Result};
use crate::model::ViewMatrix;

/// Planted-cluster two-view data.
///
/// Each view gets `c` standard-normal prototypes. Item `i` belongs to cluster
/// `i mod c` in both views and is its prototype plus `N(0, noise²)` per
/// coordinate. Labels are the cluster ids. The output is a pure function of
/// the arguments.
pub fn synth_generate(
    c: usize,
    n: usize,
    d1: usize,
    d2: usize,
    noise: f64,
    seed: u64,
) -> Result<MultiViewDataset> {
    if c == 0 {
        return Err(CuhError::InvalidArgument("need at least one cluster".into()));
    }
    if n < c {
        return Err(CuhError::InvalidArgument(format!(
            "{n} items cannot populate {c} clusters"
        )));
    }
    if d1 == 0 || d2 == 0 {
        return Err(CuhError::InvalidArgument("view dimensions must be positive".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(CuhError::InvalidArgument(format!(
            "noise must be a finite non-negative number, got {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = move || -> f64 { StandardNormal.sample(&mut rng) };

    let proto1 = DMatrix::from_fn(d1, c, |_, _| gauss());
    let proto2 = DMatrix::from_fn(d2, c, |_, _| gauss());
    let mut x1 = DMatrix::zeros(d1, n);
    let mut x2 = DMatrix::zeros(d2, n);
    for i in 0..n {
        let cluster = i % c;
        for j in 0..d1 {
            x1[(j, i)] = proto1[(j, cluster)] + noise * gauss();
        }
        for j in 0..d2 {
            x2[(j, i)] = proto2[(j, cluster)] + noise * gauss();
        }
    }
    let labels = (0..n).map(|i| vec![(i % c) as u32]).collect();
    MultiViewDataset::new(ViewMatrix::new(x1), ViewMatrix::new(x2), Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Modality;

    #[test]
    fn noiseless_clusters_are_identical() {
        let ds = synth_generate(3, 12, 5, 4, 0.0, 1).unwrap();
        for m in [Modality::View1, Modality::View2] {
            let v = ds.view(m).data();
            for i in 3..12 {
                assert_eq!(v.column(i), v.column(i % 3));
            }
        }
    }

    #[test]
    fn seed_determines_output() {
        let a = synth_generate(4, 40, 6, 3, 0.2, 9).unwrap();
        let b = synth_generate(4, 40, 6, 3, 0.2, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_generate(4, 40, 6, 3, 0.2, 10).unwrap());
    }

    #[test]
    fn invalid_sizes_rejected() {
        assert!(synth_generate(5, 3, 4, 4, 0.1, 0).is_err());
        assert!(synth_generate(2, 3, 4, 4, -1.0, 0).is_err());
        assert!(synth_generate(0, 3, 4, 4, 0.1, 0).is_err());
    }

    #[test]
    fn nearest_prototype_recovers_labels_at_low_noise() {
        let c = 6;
        let ds = synth_generate(c, 600, 16, 8, 0.05, 4).unwrap();
        let clean = synth_generate(c, c, 16, 8, 0.0, 4).unwrap();
        let labels = ds.labels().unwrap();
        for m in [Modality::View1, Modality::View2] {
            let protos = clean.view(m).data();
            let v = ds.view(m).data();
            let correct = (0..ds.count())
                .filter(|&i| {
                    let best = (0..c)
                        .min_by(|&a, &b| {
                            let da = (v.column(i) - protos.column(a)).norm_squared();
                            let db = (v.column(i) - protos.column(b)).norm_squared();
                            da.total_cmp(&db)
                        })
                        .unwrap();
                    best as u32 == labels[i][0]
                })
                .count();
            assert!(correct as f64 >= 0.99 * ds.count() as f64);
        }
    }
}
