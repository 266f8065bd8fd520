//! Filtered back-projection of the exact single-photon marginals, with the
//! reconstructed grid written as CSV and PGM.

use cvpnd::conditioning::{HistogramSpec, Marginal};
use cvpnd::fock::{binned_marginal, FockDensityMatrix};
use cvpnd::gaussian::uniform_angles;
use cvpnd::tomography::{inverse_radon, wigner_metrics, GridSpec, MarginalSet, DEFAULT_CUTOFF};

fn main() -> cvpnd::Result<()> {
    let rho = FockDensityMatrix::fock(1, 8);
    let spec = HistogramSpec::default();
    let set = MarginalSet::new(
        uniform_angles(12)
            .into_iter()
            .map(|t| Marginal::from_density(t, spec, binned_marginal(rho.matrix(), t, spec)))
            .collect(),
    )?;
    let grid = GridSpec::default();
    for cutoff in [2.5, 3.5, DEFAULT_CUTOFF, 5.5] {
        let m = wigner_metrics(&inverse_radon(&set, grid, cutoff)?);
        println!(
            "k_c = {cutoff:.1}: origin {:.4}, integral {:.4}",
            m.origin, m.integral
        );
    }
    println!("exact origin {:.4}", -1.0 / (2.0 * std::f64::consts::PI));

    let w = inverse_radon(&set, grid, DEFAULT_CUTOFF)?;
    let dir = std::env::temp_dir().join("cvpnd-radon-example");
    std::fs::create_dir_all(&dir).map_err(|e| cvpnd::Error::io(&dir, e))?;
    w.write_csv(&dir.join("fock1.csv"))?;
    w.write_pgm(&dir.join("fock1.pgm"))?;
    println!("wrote {}", dir.display());
    Ok(())
}
