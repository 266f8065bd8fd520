//! The whole protocol, by default at 10^7 samples per angle (about half a
//! minute in release):
//! `cargo run --release --example full_protocol -- [samples_per_angle]`.
//!
//! Much smaller counts can fail with a weak-conditioning error for the
//! cubic weightings, whose weight sums are then not resolved from zero.

use cvpnd::pipeline::{run, RunConfig};

fn main() -> cvpnd::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.params.samples_per_angle = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(cfg.params.samples_per_angle);
    cfg.out_dir = std::env::temp_dir().join("cvpnd-full-protocol");
    let out = run(&cfg)?;
    for p in &cfg.polynomials {
        let s = p.slug();
        let get = |k: &str| out.report.get_f64(&format!("{s}.{k}")).unwrap_or(f64::NAN);
        println!(
            "P = {:<13} min {:>8.4} +- {:.4}  origin {:>8.4} +- {:.4}  (oracle min {:>8.4}, origin {:>8.4})",
            p.to_string(),
            get("wigner.min"),
            get("wigner.min_se"),
            get("wigner.origin"),
            get("wigner.origin_se"),
            get("oracle.fbp.min"),
            get("oracle.fbp.origin"),
        );
    }
    println!(
        "dataset {}  total {:.1}s  output {}",
        out.report.get("dataset_sha256").unwrap_or("?"),
        out.timing.get_f64("total_seconds").unwrap_or(0.0),
        cfg.out_dir.display()
    );
    Ok(())
}
