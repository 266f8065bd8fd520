use nalgebra::DMatrix;
use num_complex::Complex64;

use super::phase_space::{bin_average, quadrature_marginal, smear, wigner_exact};
use super::state::{binomials, loss_matrix, write_matrix_csv, FockDensityMatrix, STATE_TOLERANCE};
use crate::conditioning::{build_q_polynomial, HistogramSpec, NumberPolynomial, NumberWeight};
use crate::error::{Error, Result};
use crate::tomography::{GridSpec, WignerGrid};

/// Herald probabilities below this are reported as impossible.
pub const HERALD_FLOOR: f64 = 1e-12;

/// `⟨m−k|_b ⟨k|_a U |m⟩_in |0⟩`: amplitude for `k` of `m` input photons to
/// reflect into the herald arm.
fn tap_amplitudes(n_max: usize, reflectivity: f64) -> Vec<Vec<f64>> {
    let c = binomials(n_max);
    let t = 1.0 - reflectivity;
    (0..=n_max)
        .map(|m| {
            (0..=m)
                .map(|k| (c[m][k] * reflectivity.powi(k as i32) * t.powi((m - k) as i32)).sqrt())
                .collect()
        })
        .collect()
}

/// Unnormalised conditional state of the transmitted mode given `k` photons
/// in the tap arm, and its trace.
fn heralded_block(rho: &DMatrix<Complex64>, amp: &[Vec<f64>], k: usize) -> DMatrix<Complex64> {
    let d = rho.nrows();
    let mut out = DMatrix::zeros(d, d);
    for m in k..d {
        for n in k..d {
            out[(m - k, n - k)] = rho[(m, n)] * (amp[m][k] * amp[n][k]);
        }
    }
    out
}

fn check_reflectivity(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParams(format!(
            "tap reflectivity must lie in (0, 1), got {r}"
        )));
    }
    Ok(())
}

/// Mixes `ρ_in` with vacuum on a beam splitter of reflectivity `R`, detects
/// `k` photons in the reflected arm and returns the normalised transmitted
/// state with the probability of that outcome.
pub fn tap_and_herald(
    rho_in: &FockDensityMatrix,
    reflectivity: f64,
    k: u32,
) -> Result<(FockDensityMatrix, f64)> {
    check_reflectivity(reflectivity)?;
    let rho = rho_in.matrix();
    let amp = tap_amplitudes(rho_in.n_max(), reflectivity);
    let k = k as usize;
    if k > rho_in.n_max() {
        return Err(Error::HeraldImpossible {
            k: k as u32,
            probability: 0.0,
        });
    }
    let block = heralded_block(rho, &amp, k);
    let probability = block.trace().re;
    if !(probability >= HERALD_FLOOR) {
        return Err(Error::HeraldImpossible {
            k: k as u32,
            probability,
        });
    }
    Ok((
        FockDensityMatrix::from_raw(block / Complex64::from(probability)),
        probability,
    ))
}

/// `p_k` for `k = 0..=n_max`.
pub fn herald_distribution(rho_in: &FockDensityMatrix, reflectivity: f64) -> Result<Vec<f64>> {
    check_reflectivity(reflectivity)?;
    let amp = tap_amplitudes(rho_in.n_max(), reflectivity);
    let p = rho_in.populations();
    Ok((0..=rho_in.n_max())
        .map(|k| (k..p.len()).map(|m| p[m] * amp[m][k] * amp[m][k]).sum())
        .collect())
}

/// Joint state of the herald mode `a` and transmitted mode `b`, indexed
/// `ia·(n_max+1) + ib`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeFockState {
    n_max: usize,
    rho: DMatrix<Complex64>,
}

impl TwoModeFockState {
    /// Output of the tap beam splitter for input `ρ_in` and vacuum, built
    /// from `b_in† → √T b† + √R a†`.
    pub fn from_tap(rho_in: &FockDensityMatrix, reflectivity: f64) -> Result<Self> {
        check_reflectivity(reflectivity)?;
        let n_max = rho_in.n_max();
        let d = n_max + 1;
        let amp = tap_amplitudes(n_max, reflectivity);
        let mut u = DMatrix::<f64>::zeros(d * d, d);
        for m in 0..d {
            for k in 0..=m {
                u[(k * d + (m - k), m)] = amp[m][k];
            }
        }
        let uc = u.map(Complex64::from);
        let rho = &uc * rho_in.matrix() * uc.transpose();
        Ok(Self { n_max, rho })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn reduced_a(&self) -> FockDensityMatrix {
        let d = self.n_max + 1;
        FockDensityMatrix::from_raw(DMatrix::from_fn(d, d, |i, j| {
            (0..d).map(|b| self.rho[(i * d + b, j * d + b)]).sum()
        }))
    }

    pub fn reduced_b(&self) -> FockDensityMatrix {
        let d = self.n_max + 1;
        FockDensityMatrix::from_raw(DMatrix::from_fn(d, d, |i, j| {
            (0..d).map(|a| self.rho[(a * d + i, a * d + j)]).sum()
        }))
    }

    /// Projects mode `a` onto `|k⟩` and returns the normalised state of `b`.
    pub fn herald(&self, k: u32) -> Result<(FockDensityMatrix, f64)> {
        let d = self.n_max + 1;
        let k = k as usize;
        let block = if k < d {
            self.rho.view((k * d, k * d), (d, d)).into_owned()
        } else {
            DMatrix::zeros(d, d)
        };
        let probability = block.trace().re;
        if !(probability >= HERALD_FLOOR) {
            return Err(Error::HeraldImpossible {
                k: k as u32,
                probability,
            });
        }
        Ok((
            FockDensityMatrix::from_raw(block / Complex64::from(probability)),
            probability,
        ))
    }
}

/// Tap reflectivity and the detector model shared by all three homodynes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapSetup {
    pub reflectivity: f64,
    pub efficiency: f64,
    /// Additive Gaussian noise variance on every detector output.
    pub dark_variance: f64,
}

impl TapSetup {
    pub fn ideal(reflectivity: f64) -> Self {
        Self {
            reflectivity,
            efficiency: 1.0,
            dark_variance: 0.0,
        }
    }
}

/// `Σ_k w(k) ρ_{b|k} p_k / Σ_k w(k) p_k`: Hermitian with unit trace, but not
/// positive in general because the weights may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalState {
    pub rho: DMatrix<Complex64>,
    /// `Σ_k w(k) p_k`, what the Monte Carlo estimates as `Σw/N`.
    pub denominator: f64,
    /// Detector noise variance added to the tomography quadrature; enters
    /// the marginals but not [`ConditionalState::wigner`].
    pub tomography_noise: f64,
}

impl ConditionalState {
    /// Density of the recorded tomography quadrature, detector noise included.
    pub fn marginal(&self, theta: f64, xs: &[f64]) -> Vec<f64> {
        smear(self.tomography_noise, xs, |pts| {
            quadrature_marginal(&self.rho, theta, pts)
        })
    }

    /// Bin averages of [`ConditionalState::marginal`].
    pub fn binned_marginal(&self, theta: f64, spec: HistogramSpec) -> Vec<f64> {
        bin_average(spec, |pts| self.marginal(theta, pts))
    }

    pub fn wigner(&self, grid: GridSpec) -> WignerGrid {
        wigner_exact(&self.rho, grid)
    }

    /// The state as a density matrix, if it is one.
    pub fn as_density(&self) -> Result<FockDensityMatrix> {
        FockDensityMatrix::new(self.rho.clone())
    }

    /// `m,n,re,im` rows.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        write_matrix_csv(&self.rho, path)
    }

    pub fn is_physical(&self) -> bool {
        FockDensityMatrix::from_raw(self.rho.clone()).min_eigenvalue() >= -STATE_TOLERANCE
    }
}

/// Exact law estimated by the weighted histogram.
///
/// Detection efficiency `η` on the two conditioning homodynes acts as loss
/// on the tap arm before an ideal number measurement, and on the tomography
/// homodyne as loss on the transmitted arm. Both are folded into a three-way
/// split of the input: `ηR` to the herald, `ηT` to the tomography detector.
pub fn weighted_conditional_state(
    rho_in: &FockDensityMatrix,
    setup: TapSetup,
    weight: &dyn NumberWeight,
) -> Result<ConditionalState> {
    let TapSetup {
        reflectivity: r,
        efficiency: eta,
        ..
    } = setup;
    check_reflectivity(r)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "efficiency must lie in (0, 1], got {eta}"
        )));
    }
    let herald_r = eta * r;
    let b_survival = eta * (1.0 - r) / (1.0 - herald_r);
    let rho = rho_in.matrix();
    let amp = tap_amplitudes(rho_in.n_max(), herald_r);
    let d = rho.nrows();
    let mut acc = DMatrix::<Complex64>::zeros(d, d);
    let mut denominator = 0.0;
    let mut scale: f64 = 0.0;
    for k in 0..d {
        let w = weight.weight(k as u32);
        if w == 0.0 {
            continue;
        }
        let block = heralded_block(rho, &amp, k);
        let pk = block.trace().re;
        denominator += w * pk;
        scale = scale.max((w * pk).abs());
        acc += block * Complex64::from(w);
    }
    if !(denominator.abs() > 1e-12 * scale.max(1e-300)) {
        return Err(Error::WeakConditioning {
            weight_sum: denominator,
            threshold: 1e-12 * scale,
        });
    }
    let acc = loss_matrix(&acc, b_survival) / Complex64::from(denominator);
    Ok(ConditionalState {
        rho: acc,
        denominator,
        tomography_noise: setup.dark_variance,
    })
}

/// Exact law of the weighted histogram for the measurable weight built from
/// `p`, including detector noise on the conditioning quadratures.
///
/// Noise turns `Q(W)` into another polynomial of the noiseless `W`, hence of
/// `n̂` through the heterodyne identity; that effective number weighting is
/// applied to the heralded blocks.
pub fn measured_conditional_state(
    rho_in: &FockDensityMatrix,
    setup: TapSetup,
    p: &NumberPolynomial,
) -> Result<ConditionalState> {
    let effective = build_q_polynomial(p).with_detector_noise(setup.dark_variance);
    weighted_conditional_state(rho_in, setup, &effective)
}

/// Density of the weighted conditional marginal on `xs`.
pub fn weighted_conditional_marginal(
    rho_in: &FockDensityMatrix,
    setup: TapSetup,
    weight: &dyn NumberWeight,
    theta: f64,
    xs: &[f64],
) -> Result<Vec<f64>> {
    Ok(weighted_conditional_state(rho_in, setup, weight)?.marginal(theta, xs))
}

/// The ideal `k`-photon-subtracted squeezed vacuum: a pure squeezer with
/// `Var X = V_s`, tapped at `R` and heralded on exactly `k` photons.
pub fn ideal_subtracted(
    v_s: f64,
    reflectivity: f64,
    k: u32,
    n_max: usize,
) -> Result<FockDensityMatrix> {
    if !(v_s > 0.0 && v_s <= 1.0) {
        return Err(Error::UnsolvableSqueezing {
            v_s,
            v_a: 1.0 / v_s,
        });
    }
    let r = -0.5 * v_s.ln();
    let pure = FockDensityMatrix::pure_squeezed(r, n_max);
    Ok(tap_and_herald(&pure, reflectivity, k)?.0)
}
