//! One shared pass over the dataset feeding every weighting at once.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::conditioning::{
    build_q_polynomial, weight_of, HistogramSpec, Marginal, WeightPolynomial, WeightedHistogram,
};
use crate::error::{Error, Result};
use crate::gaussian::cvqs::{self, CvqsHeader, CvqsWriter};
use crate::gaussian::{build_covariance, GaussianSampler, SeedLineage, Triple};
use crate::tomography::MarginalSet;

/// Where the triples of one `(angle, shard)` cell come from.
#[derive(Debug, Clone)]
pub enum SampleSource {
    Simulate,
    /// CVQS files laid out by [`sample_path`].
    Files(PathBuf),
}

/// `<dir>/theta_<ii>_shard_<sss>.cvqs`.
pub fn sample_path(dir: &Path, angle_index: usize, shard: u32) -> PathBuf {
    dir.join(format!("theta_{angle_index:02}_shard_{shard:03}.cvqs"))
}

/// Shard `s` of angle `i` draws from stream `i · shards_per_angle + s`.
pub fn lineage(cfg: &RunConfig, angle_index: usize, shard: u32) -> SeedLineage {
    SeedLineage::new(
        cfg.params.rng_seed,
        angle_index as u32 * cfg.shards_per_angle + shard,
    )
}

/// Samples assigned to `shard`; the remainder goes to the lowest shards.
pub fn shard_count(total: u64, shards: u32, shard: u32) -> u64 {
    total / shards as u64 + u64::from((shard as u64) < total % shards as u64)
}

/// Histograms of one cell, for every polynomial, at both binnings.
#[derive(Debug, Clone)]
pub struct CellHistograms {
    pub native: Vec<WeightedHistogram>,
    pub compare: Vec<WeightedHistogram>,
    pub digest: [u8; 32],
    pub samples: u64,
}

struct CellAccumulator<'a> {
    q: &'a [WeightPolynomial],
    native: Vec<WeightedHistogram>,
    compare: Vec<WeightedHistogram>,
    hasher: Sha256,
    samples: u64,
}

impl<'a> CellAccumulator<'a> {
    fn new(
        angle: f64,
        q: &'a [WeightPolynomial],
        native: HistogramSpec,
        compare: HistogramSpec,
    ) -> Self {
        Self {
            q,
            native: q
                .iter()
                .map(|_| WeightedHistogram::new(angle, native))
                .collect(),
            compare: q
                .iter()
                .map(|_| WeightedHistogram::new(angle, compare))
                .collect(),
            hasher: Sha256::new(),
            samples: 0,
        }
    }

    #[inline]
    fn push(&mut self, t: Triple) {
        let mut buf = [0u8; 24];
        for (k, v) in t.iter().enumerate() {
            buf[8 * k..8 * k + 8].copy_from_slice(&v.to_le_bytes());
        }
        self.hasher.update(buf);
        self.samples += 1;
        for (j, q) in self.q.iter().enumerate() {
            let w = weight_of(t[1], t[2], q);
            self.native[j].accumulate(t[0], w);
            self.compare[j].accumulate(t[0], w);
        }
    }

    fn finish(self) -> CellHistograms {
        CellHistograms {
            native: self.native,
            compare: self.compare,
            digest: self.hasher.finalize().into(),
            samples: self.samples,
        }
    }
}

/// Weighted histograms for every `(polynomial, angle, shard)`.
#[derive(Debug, Clone)]
pub struct ConditionedData {
    pub angles: Vec<f64>,
    /// `cells[angle][shard]`.
    pub cells: Vec<Vec<CellHistograms>>,
    pub n_polynomials: usize,
}

impl ConditionedData {
    pub fn shards(&self) -> usize {
        self.cells[0].len()
    }

    pub fn total_samples(&self) -> u64 {
        self.cells.iter().flatten().map(|c| c.samples).sum()
    }

    /// SHA-256 over the per-cell digests in `(angle, shard)` order.
    pub fn dataset_sha256(&self) -> String {
        let mut h = Sha256::new();
        for c in self.cells.iter().flatten() {
            h.update(c.digest);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Merge of all shards except `exclude`, in shard order.
    pub fn merged(
        &self,
        poly: usize,
        angle: usize,
        compare: bool,
        exclude: Option<usize>,
    ) -> Result<WeightedHistogram> {
        let pick = |c: &CellHistograms| -> WeightedHistogram {
            if compare {
                c.compare[poly].clone()
            } else {
                c.native[poly].clone()
            }
        };
        let row = &self.cells[angle];
        let mut iter = row.iter().enumerate().filter(|(s, _)| Some(*s) != exclude);
        let (_, first) = iter
            .next()
            .ok_or_else(|| Error::InvalidParams("no shards to merge".into()))?;
        let mut acc = pick(first);
        for (_, c) in iter {
            acc.merge(&pick(c))?;
        }
        Ok(acc)
    }

    /// Normalised marginals of `poly` at every angle.
    pub fn marginal_set(
        &self,
        poly: usize,
        compare: bool,
        exclude: Option<usize>,
    ) -> Result<MarginalSet> {
        let ms = (0..self.angles.len())
            .map(|a| {
                self.merged(poly, a, compare, exclude)?
                    .normalize()
                    .map_err(|e| e.in_stage("condition", Some(self.angles[a])))
            })
            .collect::<Result<Vec<Marginal>>>()?;
        MarginalSet::new(ms).map_err(|e| e.in_stage("reconstruct", None))
    }

    /// `Σw / N` pooled over angles, and its standard error.
    pub fn mean_weight(&self, poly: usize) -> Result<(f64, f64)> {
        let mut all = self.merged(poly, 0, false, None)?;
        for a in 1..self.angles.len() {
            let h = self.merged(poly, a, false, None)?;
            all.weight_sum += h.weight_sum;
            all.weight_sq_sum += h.weight_sq_sum;
            all.count += h.count;
        }
        Ok((all.mean_weight(), all.mean_weight_se()))
    }
}

/// Runs the conditioning pass over every `(angle, shard)` cell in parallel
/// and collects the results in a fixed order.
pub fn condition_all(cfg: &RunConfig, source: &SampleSource) -> Result<ConditionedData> {
    let q: Vec<WeightPolynomial> = cfg.polynomials.iter().map(build_q_polynomial).collect();
    let angles = cfg.params.tomography_angles.clone();
    let shards = cfg.shards_per_angle;
    let jobs: Vec<(usize, u32)> = (0..angles.len())
        .flat_map(|a| (0..shards).map(move |s| (a, s)))
        .collect();
    let results: Vec<Result<CellHistograms>> = with_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|&(a, s)| {
                let theta = angles[a];
                let mut acc = CellAccumulator::new(theta, &q, cfg.histogram, cfg.compare_histogram);
                match source {
                    SampleSource::Simulate => {
                        let cov = build_covariance(&cfg.params, theta)
                            .map_err(|e| e.in_stage("simulate", Some(theta)))?;
                        let sampler = GaussianSampler::new(&cov)
                            .map_err(|e| e.in_stage("simulate", Some(theta)))?;
                        let n = shard_count(cfg.params.samples_per_angle, shards, s);
                        sampler.for_each(lineage(cfg, a, s), n, |t| acc.push(t));
                    }
                    SampleSource::Files(dir) => {
                        let path = sample_path(dir, a, s);
                        let reader =
                            cvqs::ingest(&path).map_err(|e| e.in_stage("ingest", Some(theta)))?;
                        if reader.header().angle != theta {
                            return Err(Error::GeometryMismatch(format!(
                                "{} holds angle {}, expected {theta}",
                                path.display(),
                                reader.header().angle
                            ))
                            .in_stage("ingest", Some(theta)));
                        }
                        for t in reader {
                            acc.push(t.map_err(|e| e.in_stage("ingest", Some(theta)))?);
                        }
                    }
                }
                Ok(acc.finish())
            })
            .collect()
    })?;
    let mut cells: Vec<Vec<CellHistograms>> = (0..angles.len()).map(|_| Vec::new()).collect();
    for ((a, _), r) in jobs.iter().zip(results) {
        cells[*a].push(r?);
    }
    Ok(ConditionedData {
        angles,
        cells,
        n_polynomials: q.len(),
    })
}

/// Writes every `(angle, shard)` cell of the simulated dataset as CVQS.
pub fn simulate_to_files(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let angles = &cfg.params.tomography_angles;
    let jobs: Vec<(usize, u32)> = (0..angles.len())
        .flat_map(|a| (0..cfg.shards_per_angle).map(move |s| (a, s)))
        .collect();
    with_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|&(a, s)| {
                let theta = angles[a];
                let stage = |e: Error| e.in_stage("simulate", Some(theta));
                let cov = build_covariance(&cfg.params, theta).map_err(stage)?;
                let sampler = GaussianSampler::new(&cov).map_err(stage)?;
                let n = shard_count(cfg.params.samples_per_angle, cfg.shards_per_angle, s);
                let lin = lineage(cfg, a, s);
                let path = sample_path(dir, a, s);
                let mut w = CvqsWriter::create(
                    &path,
                    CvqsHeader {
                        angle: theta,
                        count: n,
                        lineage: lin,
                    },
                )
                .map_err(stage)?;
                let mut err = None;
                sampler.for_each(lin, n, |t| {
                    if err.is_none() {
                        if let Err(e) = w.push(t) {
                            err = Some(e);
                        }
                    }
                });
                if let Some(e) = err {
                    return Err(stage(e));
                }
                w.finish().map_err(stage)?;
                Ok(path)
            })
            .collect::<Vec<Result<PathBuf>>>()
    })?
    .into_iter()
    .collect()
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
