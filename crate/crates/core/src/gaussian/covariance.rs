use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::{Matrix3, SMatrix, SymmetricEigen, Vector3};

use super::params::ExperimentParams;
use crate::error::{Error, Result};

/// Tolerance on negative eigenvalues before a covariance is rejected.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Joint covariance of the three measured quadratures `(x_b, x_a1, x_a2)`
/// in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(Matrix3<f64>);

impl CovarianceMatrix {
    /// Wraps a matrix after checking symmetry and positive semidefiniteness.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let asym = (m - m.transpose()).abs().max();
        if !(asym <= 1e-12 * m.abs().max().max(1.0)) {
            return Err(Error::InvalidParams(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let cov = CovarianceMatrix((m + m.transpose()) * 0.5);
        let min_eigenvalue = cov.min_eigenvalue();
        if min_eigenvalue < -PSD_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
        }
        Ok(cov)
    }

    pub fn identity() -> Self {
        CovarianceMatrix(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0).eigenvalues.min()
    }
}

// Phase-space ordering of the optical input vector:
// (X_in, P_in, X_tapvac, P_tapvac, X_splitvac, P_splitvac).
type Row = SMatrix<f64, 1, 6>;

fn quadrature(mode: usize, angle: f64) -> Row {
    let mut r = Row::zeros();
    r[2 * mode] = angle.cos();
    r[2 * mode + 1] = angle.sin();
    r
}

const INPUT: usize = 0;
const TAP_VACUUM: usize = 1;
const SPLIT_VACUUM: usize = 2;

/// Tomography-arm quadrature `X_b^θ` after the tap.
fn tomography_row(reflectivity: f64, theta: f64) -> Row {
    let t = 1.0 - reflectivity;
    quadrature(INPUT, theta) * t.sqrt() + quadrature(TAP_VACUUM, theta) * reflectivity.sqrt()
}

/// Conditioning-arm quadrature `X_a^α` after the tap.
fn conditioning_row(reflectivity: f64, alpha: f64) -> Row {
    let t = 1.0 - reflectivity;
    quadrature(INPUT, alpha) * reflectivity.sqrt() - quadrature(TAP_VACUUM, alpha) * t.sqrt()
}

fn input_covariance(params: &ExperimentParams) -> SMatrix<f64, 6, 6> {
    let mut s = SMatrix::<f64, 6, 6>::identity();
    s[(0, 0)] = params.squeezed_variance();
    s[(1, 1)] = params.antisqueezed_variance();
    s
}

fn propagate(params: &ExperimentParams, rows: [Row; 3], dark: f64) -> Matrix3<f64> {
    let mut map = SMatrix::<f64, 3, 6>::zeros();
    for (i, row) in rows.iter().enumerate() {
        map.set_row(i, row);
    }
    let eta = params.homodyne_efficiency;
    let lossless = map * input_covariance(params) * map.transpose();
    lossless * eta + Matrix3::identity() * (1.0 - eta + dark)
}

/// Covariance of `(X_b^θ, X_a1^φ, X_a2^{φ+π/2})` as recorded by the three
/// homodyne detectors.
///
/// The squeezed input meets vacuum at the tap; the reflected mode `a` meets a
/// second vacuum on the balanced splitter (`a1 = (a + v)/√2`,
/// `a2 = (a − v)/√2`). Detector efficiency acts as `V → ηV + (1−η)` on every
/// channel, and dark noise adds to each diagonal entry.
pub fn build_covariance(params: &ExperimentParams, theta: f64) -> Result<CovarianceMatrix> {
    params.validate()?;
    let r = params.tap_reflectivity;
    let phi = params.conditioning_phase;
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let a1 = (conditioning_row(r, phi) + quadrature(SPLIT_VACUUM, phi)) * s2;
    let a2 =
        (conditioning_row(r, phi + FRAC_PI_2) - quadrature(SPLIT_VACUUM, phi + FRAC_PI_2)) * s2;
    CovarianceMatrix::new(propagate(
        params,
        [tomography_row(r, theta), a1, a2],
        params.dark_variance(),
    ))
}

/// Covariance of `(X_b^θ, X_a^φ, X_a^{φ+π/2})` for the conditioning mode
/// *before* the balanced splitter, i.e. the commuting-variable (Wigner)
/// covariance of a fictitious single-homodyne pair without the vacuum port.
///
/// Detector loss is folded into the modes, which is equivalent for the
/// measured statistics; dark noise is not included.
pub fn mode_covariance(params: &ExperimentParams, theta: f64) -> Result<CovarianceMatrix> {
    params.validate()?;
    let r = params.tap_reflectivity;
    let phi = params.conditioning_phase;
    CovarianceMatrix::new(propagate(
        params,
        [
            tomography_row(r, theta),
            conditioning_row(r, phi),
            conditioning_row(r, phi + FRAC_PI_2),
        ],
        0.0,
    ))
}

/// Dual-homodyne covariance obtained by sending the conditioning mode of
/// `mode` (ordered as in [`mode_covariance`]) through the balanced splitter
/// with a vacuum port.
pub fn split_conditioning_mode(mode: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    let m = Matrix3::from_diagonal(&Vector3::new(1.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2));
    let vacuum = Matrix3::from_diagonal(&Vector3::new(0.0, 0.5, 0.5));
    CovarianceMatrix::new(m * mode.matrix() * m.transpose() + vacuum)
}

/// Symmetric square-root factor `L` with `L Lᵀ = cov`, from the eigen
/// decomposition so that singular (but PSD) covariances are accepted.
pub fn symmetric_factor(cov: &CovarianceMatrix) -> Result<Matrix3<f64>> {
    let eig = SymmetricEigen::new(*cov.matrix());
    let min_eigenvalue = eig.eigenvalues.min();
    if min_eigenvalue < -PSD_TOLERANCE {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
    }
    let roots = Vector3::from_iterator(eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()));
    Ok(eig.eigenvectors * Matrix3::from_diagonal(&roots))
}
