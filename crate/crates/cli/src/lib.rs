//! Experiment runner behind the `rescal` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::Path;

pub use config::{Experiment, ExperimentConfig, Overrides, Plan};
pub use error::CliError;
pub use experiments::{run_plan, Context, Outcome};
pub use output::{Check, ExperimentSummary, ResultRow, Summary};

/// Everything one `run` invocation produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

/// Run `plans` in order, sharing estimates between them. The seed of the
/// first plan is recorded in the summary.
pub fn run_plans(plans: &[Plan]) -> Result<RunResult, CliError> {
    let mut ctx = Context::default();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for plan in plans {
        let out = run_plan(plan, &mut ctx)?;
        rows.extend(out.rows);
        summaries.push(out.summary);
    }
    let seed = plans.first().map_or(config::DEFAULT_SEED, |p| p.seed);
    Ok(RunResult {
        rows,
        summary: Summary::new(seed, summaries),
    })
}

/// Run and write `results.csv` / `summary.json` into `dir`.
pub fn run_to_dir(plans: &[Plan], dir: &Path) -> Result<RunResult, CliError> {
    let r = run_plans(plans)?;
    output::write_outputs(dir, &r.rows, &r.summary)?;
    Ok(r)
}

/// Exit code for a finished run: 0 iff every verdict passed.
pub fn exit_code(r: &RunResult) -> i32 {
    if r.summary.all_passed {
        0
    } else {
        1
    }
}

/// Cap rayon's global pool from `RESCAL_THREADS`. Must run before any
/// parallel work.
pub fn configure_threads(var: Option<&str>) -> Result<(), CliError> {
    let Some(v) = var else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("RESCAL_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}
