//! Numerical engine: vector fields, RK integrators, variational and
//! ε-jet flows, adaptive quadrature.

mod field;
mod integrate;
mod jetflow;
pub mod quad;
mod variational;

pub use field::{FieldError, FnField, FullField, JacobianField, LinearField, PerturbedSystem, VectorField};
pub use integrate::{flow, IntegrationError, IntegratorConfig, Method, Rk4Workspace, BLOW_UP_THRESHOLD};
pub use jetflow::flow_jet;
pub use quad::{QuadConfig, QuadError};
pub use variational::{flow_variational, VariationalState};
