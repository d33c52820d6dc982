//! Limit cycles of autonomous guiding systems: shooting, monodromy,
//! multipliers, Liouville determinant and real Floquet logarithm.

mod cycle;
mod floquet;
pub mod linalg;

pub use cycle::{
    classify_stability, cycle_from_monodromy, find_cycle, liouville_det, CycleConfig, CycleError, FdJacobian,
    LimitCycle, Multiplier, Stability, UNIT_CIRCLE_BAND,
};
pub use floquet::{floquet_log, real_log, FloquetError, FloquetLog};
