//! Experiment harness: maximal-regularity ratios, Hörmander integrals,
//! weak-type behaviour, stationary averaging, and the verification suites
//! behind the command-line front end.

mod averaging;
mod hormander;
mod regularity;
mod report;
pub mod suites;
mod weak11;

pub use averaging::{averaging_experiment, random_stationary_source, AveragingConfig};
pub use hormander::{
    hormander_experiment, hormander_integral, kernel_difference_anisotropic, DifferenceControls, DifferenceEstimate,
    HormanderConfig, HormanderEstimate,
};
pub use regularity::{random_ensemble, regularity_ratio, RegularityConfig};
pub use report::{grid_label, Criterion, ExperimentReport, TrialRecord};
pub use weak11::{unit_bump, weak11_experiment, weak11_values, Weak11Config, Weak11Values, MIN_CELLS};
