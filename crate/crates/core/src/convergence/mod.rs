//! Finite, seeded diagnostics for the consistency of empirical transport
//! maps: hit and miss probes of the graph, uniform errors on compacts and on
//! receding sets, Hausdorff distances between images, range containment and
//! a Monte-Carlo runner.

mod diagnostics;
mod experiment;
mod oracle;

pub use diagnostics::{
    bounding_box, fell_check, fell_shell_check, global_sup_on_receding_set, image_hausdorff, inflated_grid,
    local_uniform_sup, range_containment_check, FellMode, HullTest, HORIZON_SAMPLES, RAY_PROBE_FACTORS,
};
pub use experiment::{
    median, replication_potential, replication_rng, replication_samples, run_consistency_experiment,
    run_consistency_experiment_with_threads, spearman, threads_from_env, Aggregates, ExperimentConfig,
    ExperimentReport, Family, FellProbe, RangeModel, RecedingSpec, ReportHeader, ReportRow, SizeSummary,
    Tolerances, RANGE_SAMPLES, RNG_NAME,
};
pub use oracle::MapOracle;
