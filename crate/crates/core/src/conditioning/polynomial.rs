use std::fmt;

use crate::error::{Error, Result};

/// Highest degree of a photon-number weighting polynomial.
pub const MAX_NUMBER_DEGREE: usize = 6;

/// A weighting of photon-number outcomes `n ↦ w(n)`.
pub trait NumberWeight {
    fn weight(&self, n: u32) -> f64;
    fn label(&self) -> String;
}

/// Exact number-resolving selector `δ_{n,k}`; only available to the Fock
/// reference, never measurable with Gaussian detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Projector(pub u32);

impl NumberWeight for Projector {
    fn weight(&self, n: u32) -> f64 {
        if n == self.0 {
            1.0
        } else {
            0.0
        }
    }

    fn label(&self) -> String {
        format!("delta(n,{})", self.0)
    }
}

/// `P(n) = scale · ∏ (n − root)` with integer roots, kept both factored and
/// in the monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberPolynomial {
    scale: i64,
    roots: Vec<i64>,
    coefficients: Vec<f64>,
    target: u32,
}

impl NumberPolynomial {
    pub fn from_roots(scale: i64, roots: Vec<i64>) -> Result<Self> {
        if roots.len() > MAX_NUMBER_DEGREE {
            return Err(Error::InvalidPolynomial {
                text: format!("{} roots", roots.len()),
                reason: format!("degree exceeds {MAX_NUMBER_DEGREE}"),
            });
        }
        if scale == 0 {
            return Err(Error::InvalidPolynomial {
                text: "0".into(),
                reason: "the zero polynomial selects nothing".into(),
            });
        }
        let mut coefficients = vec![scale as f64];
        for &r in &roots {
            coefficients = multiply_linear(&coefficients, -(r as f64));
        }
        let mut p = Self {
            scale,
            roots,
            coefficients,
            target: 0,
        };
        p.target = (0..=MAX_NUMBER_DEGREE as u32)
            .find(|&n| p.eval_factored(n as f64) != 0.0)
            .unwrap_or(0);
        Ok(p)
    }

    /// `n(n−1)…(n−k+1)`.
    pub fn falling_factorial(k: u32) -> Result<Self> {
        Self::from_roots(1, (0..k as i64).collect())
    }

    /// Overrides the photon number this weighting is meant to select. By
    /// default it is the smallest `n ≥ 0` with `P(n) ≠ 0`.
    pub fn with_target(mut self, k: u32) -> Self {
        self.target = k;
        self
    }

    /// Parses a product such as `n`, `n(n-1)`, `n(n-2)(n-3)`, `2n(n+1)`,
    /// `(n-1)^2` or `1`.
    pub fn parse(text: &str) -> Result<Self> {
        let fail = |reason: &str| Error::InvalidPolynomial {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let s: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(fail("empty"));
        }
        let mut i = 0;
        let mut scale: i64 = 1;
        let mut roots = Vec::new();
        let read_int = |i: &mut usize| -> Option<i64> {
            let start = *i;
            while *i < s.len() && s[*i].is_ascii_digit() {
                *i += 1;
            }
            s[start..*i].iter().collect::<String>().parse().ok()
        };
        if s[0] == '-' {
            scale = -1;
            i += 1;
        }
        while i < s.len() {
            let mut factor_roots = Vec::new();
            let mut factor_scale = 1i64;
            match s[i] {
                '*' => {
                    i += 1;
                    continue;
                }
                'n' => {
                    i += 1;
                    factor_roots.push(0);
                }
                '(' => {
                    i += 1;
                    if s.get(i) != Some(&'n') {
                        return Err(fail("expected `n` after `(`"));
                    }
                    i += 1;
                    let root = match s.get(i) {
                        Some(')') => 0,
                        Some('+') | Some('-') => {
                            let sign = if s[i] == '-' { 1 } else { -1 };
                            i += 1;
                            sign * read_int(&mut i)
                                .ok_or_else(|| fail("expected integer offset"))?
                        }
                        _ => return Err(fail("expected `+`, `-` or `)`")),
                    };
                    if s.get(i) != Some(&')') {
                        return Err(fail("unclosed `(`"));
                    }
                    i += 1;
                    factor_roots.push(root);
                }
                c if c.is_ascii_digit() => {
                    factor_scale = read_int(&mut i).ok_or_else(|| fail("bad integer"))?;
                }
                _ => return Err(fail("unexpected character")),
            }
            let mut power = 1;
            if s.get(i) == Some(&'^') {
                i += 1;
                power = read_int(&mut i).ok_or_else(|| fail("expected exponent"))?;
            }
            for _ in 0..power {
                scale = scale
                    .checked_mul(factor_scale)
                    .ok_or_else(|| fail("scale overflow"))?;
                roots.extend_from_slice(&factor_roots);
                if roots.len() > MAX_NUMBER_DEGREE {
                    return Err(fail("degree exceeds 6"));
                }
            }
        }
        Self::from_roots(scale, roots)
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    /// Monomial coefficients, constant term first.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn roots(&self) -> &[i64] {
        &self.roots
    }

    pub fn target(&self) -> u32 {
        self.target
    }

    pub fn eval(&self, n: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * n + c)
    }

    pub fn eval_factored(&self, n: f64) -> f64 {
        self.roots
            .iter()
            .fold(self.scale as f64, |acc, &r| acc * (n - r as f64))
    }

    /// A filesystem- and key-safe identifier, e.g. `n_n-2_n-3`.
    pub fn slug(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if self.scale != 1 {
            parts.push(self.scale.to_string());
        }
        parts.extend(self.roots.iter().map(|&r| match r {
            0 => "n".to_string(),
            r if r > 0 => format!("n-{r}"),
            r => format!("n+{}", -r),
        }));
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("_")
        }
    }
}

impl fmt::Display for NumberPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.roots.is_empty() {
            return write!(f, "{}", self.scale);
        }
        match self.scale {
            1 => {}
            -1 => write!(f, "-")?,
            s => write!(f, "{s}")?,
        }
        for &r in &self.roots {
            match r {
                0 => write!(f, "n")?,
                r if r > 0 => write!(f, "(n-{r})")?,
                r => write!(f, "(n+{})", -r)?,
            }
        }
        Ok(())
    }
}

impl NumberWeight for NumberPolynomial {
    fn weight(&self, n: u32) -> f64 {
        self.eval(n as f64)
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

fn multiply_linear(p: &[f64], c0: f64) -> Vec<f64> {
    // p(n) · (n + c0)
    let mut out = vec![0.0; p.len() + 1];
    for (k, &a) in p.iter().enumerate() {
        out[k] += a * c0;
        out[k + 1] += a;
    }
    out
}

/// Monomial coefficients of `B_m(n) = ∏_{j=1..m} (n + j)`.
pub fn shifted_factorial(m: usize) -> Vec<f64> {
    (1..=m).fold(vec![1.0], |acc, j| multiply_linear(&acc, j as f64))
}

/// A dual-homodyne weighting `Q = Σ_m c_m W^m` with `W = (x_a1² + x_a2²)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPolynomial {
    coefficients: Vec<f64>,
    source: Option<NumberPolynomial>,
}

impl WeightPolynomial {
    pub fn from_coefficients(coefficients: Vec<f64>) -> Self {
        Self {
            coefficients,
            source: None,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn source(&self) -> Option<&NumberPolynomial> {
        self.source.as_ref()
    }

    /// Degree in `W`.
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn eval_radial(&self, w: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * w + c)
    }

    /// Average of `Q` over independent Gaussian noise of variance `d` added
    /// to each of the two quadratures, as a polynomial in the noiseless `W`.
    ///
    /// Uses `E[W'^k | W] = Σ_j C(k,j) (k!/j!) d^{k−j} W^j`.
    pub fn with_detector_noise(&self, d: f64) -> WeightPolynomial {
        let n = self.coefficients.len();
        let mut out = vec![0.0; n];
        for (k, &qk) in self.coefficients.iter().enumerate() {
            let mut binom = 1.0;
            let mut ratio = 1.0;
            // j runs down from k: C(k,j) and k!/j! updated in place.
            for j in (0..=k).rev() {
                out[j] += qk * binom * ratio * d.powi((k - j) as i32);
                if j > 0 {
                    binom *= j as f64 / (k - j + 1) as f64;
                    ratio *= j as f64;
                }
            }
        }
        WeightPolynomial {
            coefficients: out,
            source: None,
        }
    }

    /// `Σ_m c_m B_m(n)`, which equals `P(n)` for a polynomial built by
    /// [`build_q_polynomial`].
    pub fn number_equivalent(&self, n: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(m, &c)| c * (1..=m).fold(1.0, |acc, j| acc * (n + j as f64)))
            .sum()
    }
}

impl NumberWeight for WeightPolynomial {
    fn weight(&self, n: u32) -> f64 {
        self.number_equivalent(n as f64)
    }

    fn label(&self) -> String {
        format!("Q{:?}", self.coefficients)
    }
}

/// Translates `P(n̂)` into the dual-homodyne polynomial whose average over
/// heterodyne outcomes equals `⟨P(n̂)⟩`.
///
/// Heterodyne outcomes satisfy `E[W^m] = ⟨∏_{j=1..m}(n̂+j)⟩`, so `P` is
/// expanded in the monic basis `B_m`; eliminating the leading term degree by
/// degree is exact for integer coefficients.
pub fn build_q_polynomial(p: &NumberPolynomial) -> WeightPolynomial {
    let d = p.degree();
    let mut rest = p.coefficients().to_vec();
    let mut c = vec![0.0; d + 1];
    for m in (0..=d).rev() {
        c[m] = rest[m];
        for (k, b) in shifted_factorial(m).into_iter().enumerate() {
            rest[k] -= c[m] * b;
        }
    }
    WeightPolynomial {
        coefficients: c,
        source: Some(p.clone()),
    }
}

/// Weight assigned to one dual-homodyne record.
pub fn weight_of(x_a1: f64, x_a2: f64, q: &WeightPolynomial) -> f64 {
    q.eval_radial(0.5 * (x_a1 * x_a1 + x_a2 * x_a2))
}
