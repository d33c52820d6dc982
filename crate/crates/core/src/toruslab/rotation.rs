use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use super::curve::ClosedCurve;
use super::section::{poincare_iterate, IterateError, ReturnMap};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RotationError {
    #[error("need at least {min} iterates, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("angular lift is ambiguous: per-step increments spread over {spread:.3} turns; use more harmonics or a smaller eps")]
    Ambiguous { spread: f64 },
    #[error(transparent)]
    Iterate(#[from] IterateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationEstimate {
    /// Mean advance per iterate, in turns, reduced to `[0, 1)`.
    pub rho: f64,
    /// The same before reduction (signed).
    pub lifted: f64,
    /// Largest deviation of windowed estimates from `lifted`.
    pub error: f64,
    pub iterates: usize,
}

const WINDOWS: usize = 8;
/// Fewest iterates accepted by [`rotation_number`] and [`rotation_along`].
pub const MIN_ITERATES: usize = 1000;

fn bump(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        (-1.0 / (x * (1.0 - x))).exp()
    }
}

fn weighted_mean(incs: &[f64]) -> f64 {
    let n = incs.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, d) in incs.iter().enumerate() {
        let w = bump((i as f64 + 0.5) / n as f64);
        num += w * d;
        den += w;
    }
    num / den
}

/// Rotation number of a sequence of angles (radians) by a weighted
/// Birkhoff average of the unwrapped increments.
pub fn rotation_from_angles(angles: &[f64]) -> Result<RotationEstimate, RotationError> {
    let min = 2 * WINDOWS;
    if angles.len() < min + 1 {
        return Err(RotationError::TooFew {
            min: min + 1,
            got: angles.len(),
        });
    }
    let incs: Vec<f64> = angles
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]) / (2.0 * PI);
            d - d.round()
        })
        .collect();
    let (lo, hi) = incs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo > 0.5 {
        return Err(RotationError::Ambiguous { spread: hi - lo });
    }
    let lifted = weighted_mean(&incs);
    let chunk = incs.len() / WINDOWS;
    let error = (0..WINDOWS)
        .map(|w| (weighted_mean(&incs[w * chunk..(w + 1) * chunk]) - lifted).abs())
        .fold(0.0, f64::max);
    Ok(RotationEstimate {
        rho: lifted.rem_euclid(1.0),
        lifted,
        error,
        iterates: incs.len(),
    })
}

/// Rotation number on a fitted invariant curve: iterates `count` times from
/// the curve point at angle 0 and lifts each iterate to the curve angle.
pub fn rotation_number<M: ReturnMap + ?Sized>(
    map: &M,
    curve: &ClosedCurve,
    count: usize,
) -> Result<RotationEstimate, RotationError> {
    let start = curve.point(0.0);
    rotation_along(map, curve, &start, count)
}

/// As [`rotation_number`], from an arbitrary start point.
pub fn rotation_along<M: ReturnMap + ?Sized>(
    map: &M,
    curve: &ClosedCurve,
    start: &[f64],
    count: usize,
) -> Result<RotationEstimate, RotationError> {
    if count < MIN_ITERATES {
        return Err(RotationError::TooFew {
            min: MIN_ITERATES,
            got: count,
        });
    }
    let its = poincare_iterate(map, start, count)?;
    let angles: Vec<f64> = std::iter::once(start)
        .chain(its.iter().map(Vec::as_slice))
        .map(|p| curve.angle(p))
        .collect();
    rotation_from_angles(&angles)
}
