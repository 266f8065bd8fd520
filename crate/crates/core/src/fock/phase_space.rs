use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::conditioning::HistogramSpec;
use crate::tomography::{GridSpec, WignerGrid};

/// Number-state wavefunctions `ψ_0..ψ_{n_max}` at `x`, normalised so that
/// the vacuum has `Var X = 1`.
pub fn wavefunctions(x: f64, n_max: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n_max + 1);
    psi.push((2.0 * PI).powf(-0.25) * (-0.25 * x * x).exp());
    if n_max >= 1 {
        psi.push(x * psi[0]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (x * psi[n] - nf.sqrt() * psi[n - 1]) / (nf + 1.0).sqrt();
        psi.push(next);
    }
    psi
}

/// `π^θ(x) = Σ_{mn} ρ_{mn} e^{−iθ(m−n)} ψ_m(x) ψ_n(x)` on `xs`.
pub fn quadrature_marginal(rho: &DMatrix<Complex64>, theta: f64, xs: &[f64]) -> Vec<f64> {
    let n_max = rho.nrows() - 1;
    // Only the real part survives for Hermitian ρ.
    let phased = DMatrix::from_fn(n_max + 1, n_max + 1, |m, n| {
        (rho[(m, n)] * Complex64::from_polar(1.0, -theta * (m as f64 - n as f64))).re
    });
    xs.iter()
        .map(|&x| {
            let psi = wavefunctions(x, n_max);
            let mut s = 0.0;
            for m in 0..=n_max {
                let row: f64 = (0..=n_max).map(|n| phased[(m, n)] * psi[n]).sum();
                s += psi[m] * row;
            }
            s
        })
        .collect()
}

/// Bin averages of the exact marginal.
pub fn binned_marginal(rho: &DMatrix<Complex64>, theta: f64, spec: HistogramSpec) -> Vec<f64> {
    bin_average(spec, |pts| quadrature_marginal(rho, theta, pts))
}

/// Gauss-Hermite rule for weight `e^{−t²}` by Golub-Welsch.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            (
                eig.eigenvalues[k],
                PI.sqrt() * eig.eigenvectors[(0, k)].powi(2),
            )
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Convolves a density, given as a batch evaluator, with `N(0, variance)`.
pub(crate) fn smear(variance: f64, xs: &[f64], f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    if variance == 0.0 {
        return f(xs);
    }
    let (t, w) = gauss_hermite(24);
    let s = (2.0 * variance).sqrt();
    let pts: Vec<f64> = xs
        .iter()
        .flat_map(|&x| t.iter().map(move |tk| x - s * tk))
        .collect();
    let v = f(&pts);
    v.chunks(t.len())
        .map(|c| c.iter().zip(&w).map(|(a, wk)| a * wk).sum::<f64>() / PI.sqrt())
        .collect()
}

/// Bin averages by 4-point Gauss-Legendre per bin.
pub(crate) fn bin_average(spec: HistogramSpec, f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    const NODES: [f64; 4] = [
        -0.861_136_311_594_053,
        -0.339_981_043_584_856,
        0.339_981_043_584_856,
        0.861_136_311_594_053,
    ];
    const WEIGHTS: [f64; 4] = [
        0.347_854_845_137_454,
        0.652_145_154_862_546,
        0.652_145_154_862_546,
        0.347_854_845_137_454,
    ];
    let half = 0.5 * spec.bin_width();
    let xs: Vec<f64> = spec
        .centers()
        .iter()
        .flat_map(|&c| NODES.iter().map(move |t| c + half * t))
        .collect();
    let v = f(&xs);
    v.chunks(4)
        .map(|c| 0.5 * c.iter().zip(WEIGHTS).map(|(a, w)| a * w).sum::<f64>())
        .collect()
}

/// Exact Wigner function from the Fock-basis kernels
/// `W_{mn} = (1/2π)(−1)^n √(n!/m!) (x − ip)^{m−n} e^{−ρ²/2} L_n^{(m−n)}(ρ²)`, `m ≥ n`.
pub fn wigner_exact(rho: &DMatrix<Complex64>, grid: GridSpec) -> WignerGrid {
    let d = rho.nrows();
    let ln_fact: Vec<f64> = (0..d)
        .scan(0.0, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    WignerGrid::from_fn(grid, "exact", |x, p| {
        let t = x * x + p * p;
        let z = Complex64::new(x, -p);
        let gauss = (-0.5 * t).exp() / (2.0 * PI);
        let mut total = 0.0;
        let mut zpow = Complex64::new(1.0, 0.0);
        for diff in 0..d {
            // Laguerre L_n^{(diff)}(t) by upward recursion in n.
            let a = diff as f64;
            let (mut l_prev, mut l) = (0.0, 1.0);
            let mut s = Complex64::default();
            for n in 0..d - diff {
                let m = n + diff;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let norm = (0.5 * (ln_fact[n] - ln_fact[m])).exp();
                let c = rho[(m, n)];
                let weight = sign * norm * l;
                s += c * weight;
                let nf = n as f64;
                let next = ((2.0 * nf + 1.0 + a - t) * l - (nf + a) * l_prev) / (nf + 1.0);
                l_prev = l;
                l = next;
            }
            // ρ_{mn} W_{mn} + ρ_{nm} W_{nm} = 2 Re(ρ_{mn} W_{mn}) off the diagonal.
            let term = (s * zpow).re;
            total += if diff == 0 { term } else { 2.0 * term };
            zpow *= z;
        }
        gauss * total
    })
}
