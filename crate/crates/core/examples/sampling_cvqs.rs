//! Draws a seeded batch, writes it as a CVQS file and streams it back.

use cvpnd::gaussian::cvqs::{ingest, write_batch};
use cvpnd::gaussian::{build_covariance, sample_batch, ExperimentParams, SeedLineage};

fn main() -> cvpnd::Result<()> {
    let params = ExperimentParams::default();
    let theta = 0.3;
    let cov = build_covariance(&params, theta)?;
    let batch = sample_batch(&cov, theta, 200_000, SeedLineage::new(params.rng_seed, 0))?;

    let dir = std::env::temp_dir().join("cvpnd-sampling-example");
    std::fs::create_dir_all(&dir).map_err(|e| cvpnd::Error::io(&dir, e))?;
    let path = dir.join("batch.cvqs");
    write_batch(&path, &batch)?;
    let back = ingest(&path)?.into_batch()?;
    assert_eq!(back, batch);

    let n = back.triples.len() as f64;
    let mut emp = [[0.0; 3]; 3];
    for t in &back.triples {
        for (row, ti) in emp.iter_mut().zip(t) {
            for (cell, tj) in row.iter_mut().zip(t) {
                *cell += ti * tj / n;
            }
        }
    }
    println!(
        "{} triples round-tripped through {}",
        back.triples.len(),
        path.display()
    );
    for (i, row) in emp.iter().enumerate() {
        println!(
            "  empirical {:>8.4} {:>8.4} {:>8.4}   exact {:>8.4} {:>8.4} {:>8.4}",
            row[0],
            row[1],
            row[2],
            cov.get(i, 0),
            cov.get(i, 1),
            cov.get(i, 2)
        );
    }
    Ok(())
}
