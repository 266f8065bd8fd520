//! Exact Gaussian moments by Isserlis/Wick pairing.
//!
//! For zero-mean jointly Gaussian `x`, pairing the first factor of a
//! monomial with every remaining factor gives
//! `E[x_i x^β] = Σ_j Σ_ij β_j E[x^(β − e_j)]`, which is the pairing sum
//! grouped by repeated indices. The recursion is memoised on exponent vectors.

use std::collections::HashMap;

use super::covariance::CovarianceMatrix;
use crate::conditioning::WeightPolynomial;
use crate::error::{Error, Result};

/// Largest `W`-degree of a weight polynomial accepted by the analytic path
/// (total degree 8 in the conditioning quadratures).
pub const MAX_WEIGHT_DEGREE: usize = 4;
/// Largest power of the tomography quadrature.
pub const MAX_TOMOGRAPHY_POWER: u32 = 8;

/// A real polynomial in the three measured quadratures `(x_b, x_a1, x_a2)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadraturePolynomial {
    pub terms: Vec<(f64, [u32; 3])>,
}

impl QuadraturePolynomial {
    pub fn add(&mut self, coefficient: f64, exponents: [u32; 3]) {
        if coefficient != 0.0 {
            self.terms.push((coefficient, exponents));
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, e)| e.iter().sum())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| {
                c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32)
            })
            .sum()
    }

    /// `Q(x_a1, x_a2) · x_b^g` with `W = (x_a1² + x_a2²)/2`.
    pub fn from_weight(q: &WeightPolynomial, g: u32) -> Self {
        let mut p = Self::default();
        for (m, &c) in q.coefficients().iter().enumerate() {
            // W^m = 2^-m Σ_j C(m,j) x1^{2j} x2^{2(m-j)}
            let scale = c / 2f64.powi(m as i32);
            for j in 0..=m {
                p.add(
                    scale * binomial(m, j),
                    [g, 2 * j as u32, 2 * (m - j) as u32],
                );
            }
        }
        p
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Memoising evaluator of `E[x^α]` for one covariance.
pub struct MomentTable<'a> {
    cov: &'a CovarianceMatrix,
    memo: HashMap<[u32; 3], f64>,
}

impl<'a> MomentTable<'a> {
    pub fn new(cov: &'a CovarianceMatrix) -> Self {
        Self {
            cov,
            memo: HashMap::new(),
        }
    }

    pub fn moment(&mut self, alpha: [u32; 3]) -> f64 {
        let total: u32 = alpha.iter().sum();
        if total == 0 {
            return 1.0;
        }
        if total % 2 == 1 {
            return 0.0;
        }
        if let Some(&v) = self.memo.get(&alpha) {
            return v;
        }
        let i = alpha.iter().position(|&a| a > 0).unwrap();
        let mut rest = alpha;
        rest[i] -= 1;
        let mut acc = 0.0;
        for j in 0..3 {
            if rest[j] == 0 {
                continue;
            }
            let mut reduced = rest;
            reduced[j] -= 1;
            acc += self.cov.get(i, j) * rest[j] as f64 * self.moment(reduced);
        }
        self.memo.insert(alpha, acc);
        acc
    }

    pub fn expectation(&mut self, poly: &QuadraturePolynomial) -> f64 {
        poly.terms.iter().map(|&(c, e)| c * self.moment(e)).sum()
    }
}

/// Exact `E[Q(x_a1, x_a2) · x_b^g]` under the zero-mean Gaussian law `cov`.
pub fn analytic_weighted_moment(
    cov: &CovarianceMatrix,
    q: &WeightPolynomial,
    g: u32,
) -> Result<f64> {
    if q.degree() > MAX_WEIGHT_DEGREE {
        return Err(Error::DegreeTooHigh {
            limit: "weight polynomials of total degree <= 8",
            got: 2 * q.degree(),
        });
    }
    if g > MAX_TOMOGRAPHY_POWER {
        return Err(Error::DegreeTooHigh {
            limit: "tomography powers <= 8",
            got: g as usize,
        });
    }
    Ok(MomentTable::new(cov).expectation(&QuadraturePolynomial::from_weight(q, g)))
}
