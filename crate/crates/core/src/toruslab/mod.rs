//! Poincaré-map experiments on the extended phase space: iteration,
//! invariant-curve detection, rotation numbers, stability probing and
//! averaging closeness.

mod closeness;
pub mod curve;
mod detect;
mod probe;
mod rotation;
mod section;

pub use closeness::{averaging_closeness, ClosenessRow};
pub use curve::{
    fit_curve, hausdorff_curves, hausdorff_to_polyline, polyline_distance, ClosedCurve, CurveError, CurveFrame,
    FitOptions,
};
pub use detect::{
    detect_torus, estimate_from_runs, invariance_residual, run_seeds, DetectConfig, DetectError, SeedRun,
    TorusEstimate,
};
pub use probe::{classify, stability_probe, Classification, ProbeConfig, ProbeReport, Trial, TrialOutcome};
pub use rotation::{rotation_along, rotation_from_angles, rotation_number, RotationError, MIN_ITERATES, RotationEstimate};
pub use section::{
    poincare_iterate, FnMap, HyperplaneSection, IterateError, MapError, ReturnMap, StroboscopicMap,
};
