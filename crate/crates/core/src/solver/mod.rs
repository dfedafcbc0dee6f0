//! Solvers for `Lu = f`: a spectral Duhamel solver on a periodic box, a
//! pointwise kernel quadrature on the whole space, the time-averaged
//! stationary construction, and a weak-form check.

mod lower_order;
mod pointwise;
pub mod source;
mod spectral;
mod stationary;
mod weak;

pub use lower_order::{lower_order_norms, LowerOrderNorms};
pub use pointwise::{eval_pointwise, PointwiseControls};
pub use source::{
    CallableSource, FeatureScale, GaussianBump, GaussianBumps, Propagated, SpatialBump, Source, StationaryBumps,
    StationarySource, SupportBox,
};
pub use spectral::{
    residual_l, solve_spectral, solve_spectral_with, Diagnostics, Method, Solution, SourceTerm, SpectralControls,
};
pub use stationary::{fit_slope, solve_stationary, Cutoff, StationaryControls, StationaryLevel, StationaryResult};
pub use weak::{pairings, random_test_bumps, weak_solution_check, Pairing, TestBump};
