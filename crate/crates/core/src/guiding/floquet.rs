use nalgebra::DMatrix;
use thiserror::Error;

use super::cycle::LimitCycle;
use super::linalg::{eigenvalues, logm};

/// Real logarithm of the monodromy: `exp(ω' B) = M'` with
/// `(ω', M') = (2ω, M²)` when `doubled`, else `(ω, M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetLog {
    pub b: DMatrix<f64>,
    pub doubled: bool,
    pub omega: f64,
}

impl FloquetLog {
    /// `‖exp(ω' B) − M'‖ / ‖M'‖`.
    pub fn roundtrip_error(&self, monodromy: &DMatrix<f64>) -> f64 {
        let (target, span) = if self.doubled {
            (monodromy * monodromy, 2.0 * self.omega)
        } else {
            (monodromy.clone(), self.omega)
        };
        (&(&self.b * span).exp() - &target).norm() / target.norm()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FloquetError {
    #[error("cycle is not hyperbolic")]
    NotHyperbolic,
    #[error("monodromy is singular")]
    Singular,
    #[error("no real logarithm found (spectrum on the negative real axis after doubling)")]
    NoRealLog,
    #[error("eigenvalue iteration did not converge")]
    Eigen,
}

fn has_negative_real(m: &DMatrix<f64>) -> Result<bool, FloquetError> {
    Ok(eigenvalues(m)
        .ok_or(FloquetError::Eigen)?
        .iter()
        .any(|c| c.re < 0.0 && c.im.abs() <= 1e-10 * c.norm().max(1e-300)))
}

/// Real logarithm of an invertible matrix over period `omega`.
///
/// Squares the matrix and doubles the period whenever a negative real
/// eigenvalue is present.
pub fn real_log(m: &DMatrix<f64>, omega: f64) -> Result<FloquetLog, FloquetError> {
    if m.determinant() == 0.0 || m.clone().try_inverse().is_none() {
        return Err(FloquetError::Singular);
    }
    let doubled = has_negative_real(m)?;
    let (target, span) = if doubled { (m * m, 2.0 * omega) } else { (m.clone(), omega) };
    let log = logm(&target).ok_or(FloquetError::NoRealLog)?;
    Ok(FloquetLog {
        b: log / span,
        doubled,
        omega,
    })
}

pub fn floquet_log(cycle: &LimitCycle) -> Result<FloquetLog, FloquetError> {
    if !cycle.hyperbolic {
        return Err(FloquetError::NotHyperbolic);
    }
    real_log(&cycle.monodromy, cycle.omega)
}
