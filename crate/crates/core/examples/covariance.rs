//! Joint covariance of the three recorded quadratures at the default setup,
//! with the exact weighted moments that the Monte Carlo estimates.

use cvpnd::conditioning::{build_q_polynomial, reference_polynomials};
use cvpnd::gaussian::{analytic_weighted_moment, build_covariance, ExperimentParams};

fn main() -> cvpnd::Result<()> {
    let params = ExperimentParams::default();
    println!(
        "V_s = {:.5}, V_a = {:.5}",
        params.squeezed_variance(),
        params.antisqueezed_variance()
    );
    for theta_deg in [0.0, 45.0, 90.0] {
        let cov = build_covariance(&params, f64::to_radians(theta_deg))?;
        println!("\ntheta = {theta_deg} deg, order (x_b, x_a1, x_a2):");
        for i in 0..3 {
            println!(
                "  {:>9.5} {:>9.5} {:>9.5}",
                cov.get(i, 0),
                cov.get(i, 1),
                cov.get(i, 2)
            );
        }
    }
    let cov = build_covariance(&params, 0.0)?;
    println!();
    for p in reference_polynomials() {
        let q = build_q_polynomial(&p);
        println!(
            "P = {:<13} E[Q] = {:>9.6}  E[Q x_b^2] = {:>9.6}",
            p.to_string(),
            analytic_weighted_moment(&cov, &q, 0)?,
            analytic_weighted_moment(&cov, &q, 2)?
        );
    }
    Ok(())
}
