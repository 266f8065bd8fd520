use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::conditioning::NumberWeight;
use crate::error::{Error, Result};

/// Default photon-number truncation.
pub const DEFAULT_N_MAX: usize = 40;

/// Tolerance on Hermiticity, trace and negative eigenvalues.
pub const STATE_TOLERANCE: f64 = 1e-10;

/// Single-mode density matrix truncated at `n_max` photons.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    rho: DMatrix<Complex64>,
}

/// Binomial coefficients `C(n, k)` for `n ≤ n_max`, as floats.
pub(crate) fn binomials(n_max: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![1.0]];
    for n in 1..=n_max {
        let prev = &c[n - 1];
        let mut row = vec![1.0; n + 1];
        for k in 1..n {
            row[k] = prev[k - 1] + prev[k];
        }
        c.push(row);
    }
    c
}

/// Solves `η e^{∓2r} + 1 − η = V_{s,a}` for `(r, η)`.
pub fn solve_squeezing(v_s: f64, v_a: f64) -> Result<(f64, f64)> {
    let bad = || Error::UnsolvableSqueezing { v_s, v_a };
    if !(v_s > 0.0 && v_a.is_finite()) || v_s > 1.0 || v_a < 1.0 || v_s * v_a < 1.0 - 1e-12 {
        return Err(bad());
    }
    if v_s == 1.0 && v_a == 1.0 {
        return Ok((0.0, 1.0));
    }
    if v_s == 1.0 || v_a == 1.0 {
        return Err(bad());
    }
    let u = (v_a - 1.0) / (1.0 - v_s);
    let eta = ((v_a - 1.0) / (u - 1.0)).min(1.0);
    Ok((0.5 * u.ln(), eta))
}

impl FockDensityMatrix {
    /// Wraps `rho` after checking it is a normalised, Hermitian, positive matrix.
    pub fn new(rho: DMatrix<Complex64>) -> Result<Self> {
        let s = Self { rho };
        s.check()?;
        Ok(s)
    }

    pub(crate) fn from_raw(rho: DMatrix<Complex64>) -> Self {
        Self { rho }
    }

    fn check(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParams(format!("density matrix {what}")));
        if !self.rho.is_square() || self.rho.nrows() == 0 {
            return bad("must be square and non-empty".into());
        }
        let herm = (&self.rho - self.rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > STATE_TOLERANCE {
            return bad(format!("is not Hermitian (deviation {herm:e})"));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > STATE_TOLERANCE {
            return bad(format!("has trace {tr}"));
        }
        let min_eigenvalue = self.min_eigenvalue();
        if min_eigenvalue < -STATE_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
        }
        Ok(())
    }

    pub fn from_amplitudes(psi: &[Complex64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        let norm2 = v.norm_squared();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidParams("zero state vector".into()));
        }
        Ok(Self::from_raw(&v * v.adjoint() / Complex64::from(norm2)))
    }

    pub fn from_populations(p: &[f64]) -> Self {
        let total: f64 = p.iter().sum();
        let d = DVector::from_iterator(p.len(), p.iter().map(|&x| Complex64::from(x / total)));
        Self::from_raw(DMatrix::from_diagonal(&d))
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max)
    }

    pub fn fock(k: usize, n_max: usize) -> Self {
        let mut p = vec![0.0; n_max.max(k) + 1];
        p[k] = 1.0;
        Self::from_populations(&p)
    }

    /// Thermal state of mean photon number `nbar`, renormalised after truncation.
    pub fn thermal(nbar: f64, n_max: usize) -> Self {
        let q = nbar / (1.0 + nbar);
        let p: Vec<f64> = (0..=n_max)
            .map(|n| q.powi(n as i32) / (1.0 + nbar))
            .collect();
        Self::from_populations(&p)
    }

    /// Pure squeezed vacuum `S(r)|0⟩` with `Var X = e^{−2r}`.
    pub fn pure_squeezed(r: f64, n_max: usize) -> Self {
        let t = -r.tanh();
        let mut psi = vec![Complex64::default(); n_max + 1];
        // c_{2m} = t^m √((2m)!) / (2^m m! √cosh r), built by ratio.
        let mut c = 1.0 / r.cosh().sqrt();
        for m in 0..=n_max / 2 {
            psi[2 * m] = Complex64::from(c);
            let mf = m as f64;
            c *= t * ((2.0 * mf + 1.0) * (2.0 * mf + 2.0)).sqrt() / (2.0 * (mf + 1.0));
        }
        Self::from_amplitudes(&psi).expect("non-zero amplitudes")
    }

    /// Lossy squeezed vacuum with quadrature variances `(V_s, V_a)`: a pure
    /// squeezer followed by loss of transmissivity `η_s`.
    pub fn squeezed_vacuum(v_s: f64, v_a: f64, n_max: usize) -> Result<Self> {
        let (r, eta) = solve_squeezing(v_s, v_a)?;
        // Loss within the truncation space needs headroom above n_max.
        let pad = (n_max + 16).max(2 * n_max);
        Ok(Self::pure_squeezed(r, pad)
            .loss_channel(eta)
            .truncate(n_max))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn n_max(&self) -> usize {
        self.rho.nrows() - 1
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho.clone().symmetric_eigenvalues().min()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn expectation(&self, weight: &dyn NumberWeight) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(n, p)| weight.weight(n as u32) * p)
            .sum()
    }

    /// Population above `fraction · n_max`.
    pub fn tail_population(&self, fraction: f64) -> f64 {
        let cut = fraction * self.n_max() as f64;
        self.populations()
            .iter()
            .enumerate()
            .filter(|(n, _)| *n as f64 > cut)
            .map(|(_, p)| p)
            .sum()
    }

    /// Keeps the block `n ≤ n_max` and renormalises.
    pub fn truncate(&self, n_max: usize) -> Self {
        let d = (n_max + 1).min(self.rho.nrows());
        let block = self.rho.view((0, 0), (d, d)).into_owned();
        let tr = block.trace();
        let mut out = DMatrix::zeros(n_max + 1, n_max + 1);
        out.view_mut((0, 0), (d, d)).copy_from(&(block / tr));
        Self::from_raw(out)
    }

    /// Bosonic loss: `Σ_k A_k ρ A_k†` with
    /// `A_k = Σ_n √C(n,k) √(η^{n−k}(1−η)^k) |n−k⟩⟨n|`.
    pub fn loss_channel(&self, eta: f64) -> Self {
        Self::from_raw(loss_matrix(&self.rho, eta))
    }

    /// Distribution of photon number, `m,n,re,im` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_matrix_csv(&self.rho, path)
    }
}

pub(crate) fn loss_matrix(rho: &DMatrix<Complex64>, eta: f64) -> DMatrix<Complex64> {
    let d = rho.nrows();
    if eta == 1.0 {
        return rho.clone();
    }
    let c = binomials(d - 1);
    let pow = |x: f64, k: usize| x.powi(k as i32);
    let mut out = DMatrix::zeros(d, d);
    for m in 0..d {
        for n in 0..d {
            let z = rho[(m, n)];
            if z == Complex64::default() {
                continue;
            }
            for k in 0..=m.min(n) {
                let f = (c[m][k] * c[n][k]).sqrt()
                    * (pow(eta, m - k) * pow(eta, n - k)).sqrt()
                    * pow(1.0 - eta, k);
                out[(m - k, n - k)] += z * f;
            }
        }
    }
    out
}

pub(crate) fn write_matrix_csv(rho: &DMatrix<Complex64>, path: &Path) -> Result<()> {
    let mut out = String::from("m,n,re,im\n");
    for m in 0..rho.nrows() {
        for n in 0..rho.ncols() {
            let z = rho[(m, n)];
            out.push_str(&format!("{m},{n},{:.17e},{:.17e}\n", z.re, z.im));
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// `⟨∏_{j=1..m}(n̂+j)⟩` for `m = 0..=m_max`: the heterodyne averages `E[W^m]`.
pub fn heterodyne_moments(rho: &FockDensityMatrix, m_max: usize) -> Result<Vec<f64>> {
    if m_max > 6 {
        return Err(Error::DegreeTooHigh {
            limit: "heterodyne moments up to m = 6",
            got: m_max,
        });
    }
    let p = rho.populations();
    Ok((0..=m_max)
        .map(|m| {
            p.iter()
                .enumerate()
                .map(|(n, pn)| pn * (1..=m).map(|j| (n + j) as f64).product::<f64>())
                .sum()
        })
        .collect())
}
