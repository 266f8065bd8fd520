//! Joint Gaussian statistics of the three homodyne detectors and seeded
//! Monte Carlo draws from them.

mod covariance;
pub mod cvqs;
mod moments;
mod params;
mod sampling;

pub use covariance::{
    build_covariance, mode_covariance, split_conditioning_mode, symmetric_factor, CovarianceMatrix,
    PSD_TOLERANCE,
};
pub use moments::{
    analytic_weighted_moment, MomentTable, QuadraturePolynomial, MAX_TOMOGRAPHY_POWER,
    MAX_WEIGHT_DEGREE,
};
pub use params::{db_to_variance, uniform_angles, ExperimentParams};
pub use sampling::{sample_batch, GaussianSampler, SampleBatch, SeedLineage, Triple};
