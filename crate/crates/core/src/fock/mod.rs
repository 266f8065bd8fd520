//! Exact truncated Fock-basis reference for the heralded scheme.

mod herald;
mod phase_space;
mod state;

pub use herald::{
    herald_distribution, ideal_subtracted, measured_conditional_state, tap_and_herald,
    weighted_conditional_marginal, weighted_conditional_state, ConditionalState, TapSetup,
    TwoModeFockState, HERALD_FLOOR,
};
pub use phase_space::{
    binned_marginal, gauss_hermite, quadrature_marginal, wavefunctions, wigner_exact,
};
pub use state::{
    heterodyne_moments, solve_squeezing, FockDensityMatrix, DEFAULT_N_MAX, STATE_TOLERANCE,
};

use crate::gaussian::ExperimentParams;

impl FockDensityMatrix {
    /// Exact Wigner function on `grid`.
    pub fn wigner(&self, grid: crate::tomography::GridSpec) -> crate::tomography::WignerGrid {
        wigner_exact(self.matrix(), grid)
    }

    pub fn marginal(&self, theta: f64, xs: &[f64]) -> Vec<f64> {
        quadrature_marginal(self.matrix(), theta, xs)
    }
}

/// Source state described by `params`.
pub fn source_state(params: &ExperimentParams, n_max: usize) -> crate::Result<FockDensityMatrix> {
    FockDensityMatrix::squeezed_vacuum(
        params.squeezed_variance(),
        params.antisqueezed_variance(),
        n_max,
    )
}

/// Tap reflectivity and detector model of `params`.
pub fn tap_setup(params: &ExperimentParams) -> TapSetup {
    TapSetup {
        reflectivity: params.tap_reflectivity,
        efficiency: params.homodyne_efficiency,
        dark_variance: params.dark_variance(),
    }
}
