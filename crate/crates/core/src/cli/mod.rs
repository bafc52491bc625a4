//! Config-driven experiment runner and the acceptance suite.

mod config;
mod run;
pub mod suite;

pub use config::{
    BifurcationSpec, ConfigError, DomainSpec, ExperimentConfig, ExperimentKind, FieldSpec, OutputSpec, SweepRegion,
    Tolerances,
};
pub use run::{run_experiment, Artifact, Outcome, Timing, Verdict, VerificationReport, TOOL_VERSION};

/// Process exit statuses.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const VERDICT_FAILED: u8 = 1;
    pub const PARSE_ERROR: u8 = 2;
    pub const INTERNAL_ERROR: u8 = 3;
}

/// Worker count: 1 when sequential, else `HULL_LAB_THREADS` if set, else rayon's default.
pub fn worker_count(sequential: bool) -> Option<usize> {
    if sequential {
        return Some(1);
    }
    std::env::var("HULL_LAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` inside a rayon pool sized by [`worker_count`].
pub fn with_workers<T: Send>(sequential: bool, f: impl FnOnce() -> T + Send) -> T {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(sequential) {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
