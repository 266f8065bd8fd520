//! End-to-end orchestration: simulate, condition, reconstruct, compare
//! with the exact reference, and report.

mod config;
mod engine;
mod report;
mod stages;

pub use config::{RunConfig, RunMode};
pub use engine::{
    condition_all, lineage, sample_path, shard_count, simulate_to_files, with_pool, CellHistograms,
    ConditionedData, SampleSource,
};
pub use report::MetricsReport;
pub use stages::{
    condition, jackknife_se, oracle, oracle_states, reconstruct_from_files, run, simulate, verify,
    Check, Outcome,
};

/// Dispatches on `cfg.mode`. `verify` fails if any check fails.
pub fn execute(cfg: &RunConfig) -> crate::Result<Outcome> {
    match cfg.mode {
        RunMode::Simulate => simulate(cfg),
        RunMode::Condition => condition(cfg),
        RunMode::Reconstruct => reconstruct_from_files(cfg),
        RunMode::Oracle => oracle(cfg),
        RunMode::Run => run(cfg),
        RunMode::Verify => {
            let (checks, outcome) = verify(cfg)?;
            let failed: Vec<_> = checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            if failed.is_empty() {
                Ok(outcome)
            } else {
                Err(
                    crate::Error::InvalidParams(format!("failed checks: {}", failed.join(", ")))
                        .in_stage("verify", None),
                )
            }
        }
    }
}
