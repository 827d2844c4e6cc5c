//! The quantum liquid: a randomly coupled qubit register driven by input
//! signals through transverse fields, read out as per-node `⟨Z⟩`.

mod certify;
mod filters;
mod graph;
mod liquid;
mod signal;

pub use certify::{
    check_pointwise_separation, estimate_fading_memory, separation_sweep, FadingMemoryReport,
    SeparationReport, SeparationSweep, SeparationWitness, DECAY_RATIO, MONOTONE_FRACTION,
};
pub use filters::{apply_filters, FilterBank, FilterDescriptor, DEFAULT_LAGS};
pub use graph::{build_reservoir, ReservoirGraph, DEFAULT_FIELD_SCALE, MAX_RESERVOIR_NODES};
pub use liquid::{
    run_liquid, run_liquid_detailed, write_trajectory_csv, InitialState, LiquidConfig, LiquidRun,
    LiquidState, DEFAULT_LEAK, DEFAULT_SUBSTEPS,
};
pub use signal::{
    random_walk, rewrite_prefix, validate_input, BoundViolation, InputSignal, LipschitzViolation,
    ValidityReport, DEFAULT_BOUND, DEFAULT_DT, DEFAULT_LIPSCHITZ,
};
