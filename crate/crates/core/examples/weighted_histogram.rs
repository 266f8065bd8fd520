//! Conditions one angle of simulated data on P = n and compares the
//! normalised weighted histogram with the exact conditional marginal.

use cvpnd::conditioning::{
    build_q_polynomial, weight_of, HistogramSpec, NumberPolynomial, WeightedHistogram,
};
use cvpnd::fock::{measured_conditional_state, source_state, tap_setup};
use cvpnd::gaussian::{build_covariance, ExperimentParams, GaussianSampler, SeedLineage};

fn main() -> cvpnd::Result<()> {
    let params = ExperimentParams::default();
    let p = NumberPolynomial::parse("n")?;
    let q = build_q_polynomial(&p);
    let spec = HistogramSpec {
        x_max: 6.0,
        n_bins: 24,
    };
    let theta = 0.0;

    let sampler = GaussianSampler::new(&build_covariance(&params, theta)?)?;
    let mut shards = Vec::new();
    for s in 0..4 {
        let mut h = WeightedHistogram::new(theta, spec);
        sampler.for_each(SeedLineage::new(params.rng_seed, s), 500_000, |t| {
            h.accumulate(t[0], weight_of(t[1], t[2], &q))
        });
        shards.push(h);
    }
    let mut merged = shards[0].clone();
    for h in &shards[1..] {
        merged.merge(h)?;
    }
    let measured = merged.normalize()?;

    let src = source_state(&params, cvpnd::fock::DEFAULT_N_MAX)?;
    let exact =
        measured_conditional_state(&src, tap_setup(&params), &p)?.binned_marginal(theta, spec);

    println!(
        "mean weight {:.5} +- {:.5}",
        merged.mean_weight(),
        merged.mean_weight_se()
    );
    println!("{:>7} {:>10} {:>10}", "x", "measured", "exact");
    for (i, x) in spec.centers().iter().enumerate() {
        println!("{x:>7.2} {:>10.5} {:>10.5}", measured.density[i], exact[i]);
    }
    println!("L1 = {:.4}", measured.l1_distance(&exact));
    Ok(())
}
