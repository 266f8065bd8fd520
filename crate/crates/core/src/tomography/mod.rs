//! Filtered back-projection from quadrature marginals to the Wigner
//! function, and the metrics read off the result.

mod grid;
mod metrics;
mod radon;

pub use grid::{GridSpec, WignerGrid};
pub use metrics::{wigner_metrics, WignerMetrics};
pub use radon::{inverse_radon, marginal_of_wigner, ramp_kernel, MarginalSet, DEFAULT_CUTOFF};
