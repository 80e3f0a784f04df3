//! Replay analytics over trajectory artifacts. Every function here is a pure
//! function of its inputs.

mod ablation;
mod anatomy;
mod report;

pub use ablation::{
    ablate, ablate_validate, action_fidelity, cascade_extra_steps, certified_prefix_ratio, AblationError,
    AblationEstimate, AblationReport, CascadeCount, Mechanism, MechanismMean, PrefixRatio, StallSource,
    OPTIMISM_CAVEAT,
};
pub use anatomy::{anatomy, AnatomyError, AnatomyReport, Calibration, ProgressEntry, ReplanBucket};
pub use report::{ablation_csv, ablation_table, anatomy_csv, anatomy_table};
