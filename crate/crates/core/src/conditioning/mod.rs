//! Photon-number weightings translated to dual-homodyne observables, and
//! the weighted histograms that turn them into conditional marginals.

mod histogram;
mod polynomial;

pub use histogram::{HistogramSpec, Marginal, WeightedHistogram};
pub use polynomial::{
    build_q_polynomial, shifted_factorial, weight_of, NumberPolynomial, NumberWeight, Projector,
    WeightPolynomial, MAX_NUMBER_DEGREE,
};

/// The four weightings applied to the shared dataset: `n`, `n(n−1)`,
/// `n(n−2)(n−3)` and `n(n−1)(n−3)`.
pub fn reference_polynomials() -> Vec<NumberPolynomial> {
    ["n", "n(n-1)", "n(n-2)(n-3)", "n(n-1)(n-3)"]
        .iter()
        .map(|t| NumberPolynomial::parse(t).expect("built-in polynomial"))
        .collect()
}
