//! Exact references: the lossy source, heralded photon subtraction, and the
//! weighted conditional states the pipeline should reproduce.

use cvpnd::conditioning::reference_polynomials;
use cvpnd::fock::{
    herald_distribution, ideal_subtracted, measured_conditional_state, solve_squeezing,
    source_state, tap_and_herald, tap_setup, DEFAULT_N_MAX,
};
use cvpnd::gaussian::ExperimentParams;
use cvpnd::tomography::{wigner_metrics, GridSpec};

fn main() -> cvpnd::Result<()> {
    let params = ExperimentParams::default();
    let (r, eta_s) = solve_squeezing(params.squeezed_variance(), params.antisqueezed_variance())?;
    println!("source: r = {r:.4}, effective transmission {eta_s:.4}");
    let src = source_state(&params, DEFAULT_N_MAX)?;
    println!(
        "mean photon number {:.4}, tail {:.1e}",
        src.mean_photon_number(),
        src.tail_population(0.9)
    );

    let heralds = herald_distribution(&src, params.tap_reflectivity)?;
    for (k, p) in heralds.iter().take(4).enumerate() {
        let (rho, _) = tap_and_herald(&src, params.tap_reflectivity, k as u32)?;
        let m = wigner_metrics(&rho.wigner(GridSpec::default()));
        println!(
            "k = {k}: p = {p:.5}, W(0) = {:>8.4}, min W = {:>8.4}",
            m.origin, m.min
        );
    }

    let v_s = params.squeezed_variance();
    for k in [1, 2] {
        let m = wigner_metrics(
            &ideal_subtracted(v_s, params.tap_reflectivity, k, DEFAULT_N_MAX)?
                .wigner(GridSpec::default()),
        );
        println!(
            "ideal {k}-PSSV: min {:.4}, central {:.4}, first negative {:.4}",
            m.min, m.central_fringe, m.first_negative_fringe
        );
    }

    for p in reference_polynomials() {
        let st = measured_conditional_state(&src, tap_setup(&params), &p)?;
        let m = wigner_metrics(&st.wigner(GridSpec::default()));
        println!(
            "P = {:<13} <P> = {:.5}  W(0) = {:>8.4}  min W = {:>8.4}  physical = {}",
            p.to_string(),
            st.denominator,
            m.origin,
            m.min,
            st.is_physical()
        );
    }
    Ok(())
}
