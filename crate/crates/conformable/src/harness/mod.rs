//! Configuration-driven batch execution: deterministic sweeps over a grid of
//! parameters, randomized searching for bound violations, and report
//! emission in JSON and CSV.

mod config;
mod fuzz;
mod report;
mod sweep;

pub use config::{
    desk_suite, Check, ConstraintOverrides, CorpusSource, FunctionSource, OpName, SweepConfig,
    DESK_CORPUS_SEED,
};
pub use fuzz::{fuzz_search, BoundStat, FuzzSummary, IdentityStat, MvtStat, Violation};
pub use report::{emit_fuzz_report, emit_report, read_report, ReportFormat, SweepReport};
pub use sweep::{run_sweep, MvtOutcome, TrialRecord, MVT_RESOLVE_FACTOR};
