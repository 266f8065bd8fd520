//! Measurable Q forms of number polynomials, including one parsed from the
//! command line (`cargo run --example q_polynomials -- "n(n-1)(n-2)"`).

use cvpnd::conditioning::{build_q_polynomial, reference_polynomials, NumberPolynomial};

fn main() -> cvpnd::Result<()> {
    let mut polys = reference_polynomials();
    if let Some(arg) = std::env::args().nth(1) {
        polys.push(NumberPolynomial::parse(&arg)?);
    }
    for p in &polys {
        let q = build_q_polynomial(p);
        let terms: Vec<String> = q
            .coefficients()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(m, c)| format!("{c:+}·W^{m}"))
            .collect();
        let check: Vec<String> = (0..6)
            .map(|n| format!("{}", q.number_equivalent(n as f64)))
            .collect();
        println!(
            "P = {p}\n  Q = {}\n  P(0..5) via Q = [{}]",
            terms.join(" "),
            check.join(", ")
        );
    }
    println!("\nW = (x_a1^2 + x_a2^2) / 2");
    Ok(())
}
