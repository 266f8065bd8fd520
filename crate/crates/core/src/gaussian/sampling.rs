use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::covariance::{symmetric_factor, CovarianceMatrix};
use crate::error::Result;

/// Identifies one independent random stream: shard `i` always draws from
/// ChaCha stream `i` of the generator keyed by `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedLineage {
    pub seed: u64,
    pub shard: u32,
}

impl SeedLineage {
    pub fn new(seed: u64, shard: u32) -> Self {
        Self { seed, shard }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.shard as u64);
        rng
    }
}

/// One `(x_b, x_a1, x_a2)` record.
pub type Triple = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub angle: f64,
    pub triples: Vec<Triple>,
    pub lineage: SeedLineage,
}

/// Zero-mean Gaussian sampler for a fixed covariance.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: Matrix3<f64>,
}

impl GaussianSampler {
    pub fn new(cov: &CovarianceMatrix) -> Result<Self> {
        Ok(Self {
            factor: symmetric_factor(cov)?,
        })
    }

    /// Streams `n` draws of the shard identified by `lineage` into `sink`
    /// without materialising them.
    pub fn for_each(&self, lineage: SeedLineage, n: u64, mut sink: impl FnMut(Triple)) {
        let mut rng = lineage.rng();
        for _ in 0..n {
            let z = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            );
            let x = self.factor * z;
            sink([x[0], x[1], x[2]]);
        }
    }

    pub fn batch(&self, angle: f64, n: u64, lineage: SeedLineage) -> SampleBatch {
        let mut triples = Vec::with_capacity(n as usize);
        self.for_each(lineage, n, |t| triples.push(t));
        SampleBatch {
            angle,
            triples,
            lineage,
        }
    }
}

/// Draws `n` samples of `cov` from the stream named by `lineage`.
pub fn sample_batch(
    cov: &CovarianceMatrix,
    angle: f64,
    n: u64,
    lineage: SeedLineage,
) -> Result<SampleBatch> {
    Ok(GaussianSampler::new(cov)?.batch(angle, n, lineage))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_lineage_identical_bytes() {
        let cov = CovarianceMatrix::identity();
        let a = sample_batch(&cov, 0.0, 1000, SeedLineage::new(7, 3)).unwrap();
        let b = sample_batch(&cov, 0.0, 1000, SeedLineage::new(7, 3)).unwrap();
        let bytes = |s: &SampleBatch| {
            s.triples
                .iter()
                .flat_map(|t| t.iter().flat_map(|v| v.to_le_bytes()))
                .collect::<Vec<u8>>()
        };
        assert_eq!(bytes(&a), bytes(&b));
        let c = sample_batch(&cov, 0.0, 1000, SeedLineage::new(7, 4)).unwrap();
        assert_ne!(bytes(&a), bytes(&c));
    }

    #[test]
    fn standard_normal_moments() {
        let cov = CovarianceMatrix::identity();
        let n = 1_000_000u64;
        let mut s = [[0.0f64; 3]; 3];
        GaussianSampler::new(&cov)
            .unwrap()
            .for_each(SeedLineage::new(11, 0), n, |t| {
                for (row, ti) in s.iter_mut().zip(t) {
                    for (cell, tj) in row.iter_mut().zip(t) {
                        *cell += ti * tj;
                    }
                }
            });
        for (i, row) in s.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                let m = cell / n as f64;
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((m - expect).abs() < 0.005, "({i},{j}) = {m}");
            }
        }
    }
}
