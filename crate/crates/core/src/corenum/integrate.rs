use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FieldError, VectorField};

/// Any state component above this magnitude aborts integration.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Classical RK4 with the span split into equal steps no longer than `step`.
    Rk4 { step: f64 },
    /// Dormand–Prince 5(4) with mixed absolute/relative error control.
    Rk45 { abs_tol: f64, rel_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::adaptive(1e-10, 1e-10)
    }
}

impl IntegratorConfig {
    pub fn adaptive(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            method: Method::Rk45 { abs_tol, rel_tol },
            max_steps: 5_000_000,
        }
    }

    pub fn fixed(step: f64) -> Self {
        Self {
            method: Method::Rk4 { step },
            max_steps: 50_000_000,
        }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let ok = match self.method {
            Method::Rk4 { step } => step > 0.0 && step.is_finite(),
            Method::Rk45 { abs_tol, rel_tol } => abs_tol > 0.0 && rel_tol > 0.0,
        };
        if !ok || self.max_steps == 0 {
            return Err(IntegrationError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }

    /// Bound used by [`IntegratorConfig::validate`] and error reporting.
    pub fn tolerance(&self) -> f64 {
        match self.method {
            Method::Rk4 { step } => step.powi(4),
            Method::Rk45 { abs_tol, rel_tol } => abs_tol.max(rel_tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
    #[error("trajectory blew up at t = {t}")]
    BlowUp { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("field evaluation failed at t = {t}: {source}")]
    Field { t: f64, source: FieldError },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
}

impl IntegrationError {
    /// True for failures that signal an escaping trajectory.
    pub fn is_escape(&self) -> bool {
        matches!(
            self,
            IntegrationError::BlowUp { .. } | IntegrationError::NonFinite { .. }
        )
    }
}

fn eval<F: VectorField + ?Sized>(f: &F, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), IntegrationError> {
    f.eval(t, y, out)
        .map_err(|source| IntegrationError::Field { t, source })
}

fn check_state(y: &[f64], monitored: usize, t: f64) -> Result<(), IntegrationError> {
    for v in y {
        if !v.is_finite() {
            return Err(IntegrationError::NonFinite { t });
        }
    }
    if y[..monitored].iter().any(|v| v.abs() > BLOW_UP_THRESHOLD) {
        return Err(IntegrationError::BlowUp { t });
    }
    Ok(())
}

/// Reusable RK4 stage buffers.
pub struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// One classical RK4 step of size `h` from `(t, y)`, written to `out`.
    pub fn step<F: VectorField + ?Sized>(
        &mut self,
        f: &F,
        t: f64,
        y: &[f64],
        h: f64,
        out: &mut [f64],
    ) -> Result<(), IntegrationError> {
        let n = y.len();
        eval(f, t, y, &mut self.k1)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        eval(f, t + 0.5 * h, &self.tmp, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        eval(f, t + 0.5 * h, &self.tmp, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        eval(f, t + h, &self.tmp, &mut self.k4)?;
        for i in 0..n {
            out[i] = y[i] + h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

fn rk4<F: VectorField + ?Sized>(
    f: &F,
    t0: f64,
    t1: f64,
    z0: &[f64],
    step: f64,
    max_steps: usize,
    monitored: usize,
) -> Result<Vec<f64>, IntegrationError> {
    let span = t1 - t0;
    let steps = (span.abs() / step).ceil().max(1.0) as usize;
    if steps > max_steps {
        return Err(IntegrationError::MaxSteps { t: t0 });
    }
    let h = span / steps as f64;
    let mut ws = Rk4Workspace::new(z0.len());
    let mut y = z0.to_vec();
    let mut next = vec![0.0; z0.len()];
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        ws.step(f, t, &y, h, &mut next)?;
        std::mem::swap(&mut y, &mut next);
        check_state(&y, monitored, t + h)?;
    }
    Ok(y)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[allow(clippy::too_many_arguments)]
fn rk45<F: VectorField + ?Sized>(
    f: &F,
    t0: f64,
    t1: f64,
    z0: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_steps: usize,
    monitored: usize,
) -> Result<Vec<f64>, IntegrationError> {
    let n = z0.len();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(z0.to_vec());
    }
    let dir = span.signum();
    let mut k = vec![vec![0.0; n]; 7];
    let mut y = z0.to_vec();
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut t = t0;

    eval(f, t, &y, &mut k[0])?;
    // Initial step from the derivative scale (Hairer–Nørsett–Wanner).
    let sc = |i: usize, y: &[f64]| abs_tol + rel_tol * y[i].abs();
    let d0 = (0..n).map(|i| (y[i] / sc(i, &y)).powi(2)).sum::<f64>().sqrt() / (n as f64).sqrt();
    let d1 = (0..n).map(|i| (k[0][i] / sc(i, &y)).powi(2)).sum::<f64>().sqrt() / (n as f64).sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span.abs()) * dir;

    let mut steps = 0usize;
    while (t1 - t) * dir > 0.0 {
        if steps >= max_steps {
            return Err(IntegrationError::MaxSteps { t });
        }
        steps += 1;
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                ytmp[i] = acc;
            }
            eval(f, t + C[s] * h, &ytmp, &mut k[s])?;
        }
        let mut err = 0.0;
        for i in 0..n {
            let mut y5 = y[i];
            let mut y4 = y[i];
            for s in 0..7 {
                y5 += h * B5[s] * k[s][i];
                y4 += h * B4[s] * k[s][i];
            }
            ynew[i] = y5;
            let scale = abs_tol + rel_tol * y[i].abs().max(y5.abs());
            err += ((y5 - y4) / scale).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(IntegrationError::NonFinite { t });
            }
            continue;
        }
        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut ynew);
            check_state(&y, monitored, t)?;
            // FSAL: the last stage is the derivative at the new point.
            k.swap(0, 6);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.1);
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(IntegrationError::StepUnderflow { t });
        }
    }
    Ok(y)
}

/// Integrates with the first `monitored` components checked for blow-up.
pub(crate) fn integrate_monitored<F: VectorField + ?Sized>(
    field: &F,
    t0: f64,
    t1: f64,
    z0: &[f64],
    cfg: &IntegratorConfig,
    monitored: usize,
) -> Result<Vec<f64>, IntegrationError> {
    cfg.validate()?;
    check_state(z0, monitored, t0)?;
    match cfg.method {
        Method::Rk4 { step } => rk4(field, t0, t1, z0, step, cfg.max_steps, monitored),
        Method::Rk45 { abs_tol, rel_tol } => {
            rk45(field, t0, t1, z0, abs_tol, rel_tol, cfg.max_steps, monitored)
        }
    }
}

/// `z(t1)` for the solution of `ż = f(t, z)` with `z(t0) = z0`.
///
/// `t1 < t0` integrates backward.
pub fn flow<F: VectorField + ?Sized>(
    field: &F,
    t0: f64,
    t1: f64,
    z0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, IntegrationError> {
    integrate_monitored(field, t0, t1, z0, cfg, z0.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corenum::FnField;

    #[test]
    fn zero_field_is_identity() {
        let f = FnField::new(3, |_t, _x, out: &mut [f64]| out.fill(0.0));
        let z0 = [1.0, -2.0, 0.5];
        for cfg in [IntegratorConfig::default(), IntegratorConfig::fixed(0.1)] {
            assert_eq!(flow(&f, 0.0, 7.0, &z0, &cfg).unwrap(), z0);
        }
    }

    #[test]
    fn exponential_growth() {
        let f = FnField::new(1, |_t, x, out: &mut [f64]| out[0] = x[0]);
        let z = flow(&f, 0.0, 1.0, &[1.0], &IntegratorConfig::default()).unwrap();
        assert!((z[0] - std::f64::consts::E).abs() < 1e-9);
        let z = flow(&f, 0.0, 1.0, &[1.0], &IntegratorConfig::fixed(1e-3)).unwrap();
        assert!((z[0] - std::f64::consts::E).abs() < 1e-11);
    }

    #[test]
    fn backward_forward() {
        let f = FnField::new(2, |t, x, out: &mut [f64]| {
            out[0] = -x[1] + 0.1 * t.sin();
            out[1] = x[0] - 0.2 * x[1] * x[1];
        });
        let cfg = IntegratorConfig::default();
        let z0 = [0.3, -0.7];
        let z1 = flow(&f, 0.0, 3.0, &z0, &cfg).unwrap();
        let back = flow(&f, 3.0, 0.0, &z1, &cfg).unwrap();
        for (a, b) in back.iter().zip(&z0) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn blow_up_detected() {
        let f = FnField::new(1, |_t, x, out: &mut [f64]| out[0] = x[0] * x[0]);
        let err = flow(&f, 0.0, 2.0, &[1.0], &IntegratorConfig::default()).unwrap_err();
        assert!(err.is_escape() || matches!(err, IntegrationError::StepUnderflow { .. }), "{err:?}");
        let err = flow(&f, 0.0, 2.0, &[1.0], &IntegratorConfig::fixed(1e-3)).unwrap_err();
        assert!(err.is_escape(), "{err:?}");
    }

    #[test]
    fn invalid_config() {
        let f = FnField::new(1, |_t, _x, out: &mut [f64]| out[0] = 0.0);
        assert!(matches!(
            flow(&f, 0.0, 1.0, &[0.0], &IntegratorConfig::fixed(-1.0)),
            Err(IntegrationError::InvalidConfig(_))
        ));
        let mut cfg = IntegratorConfig::default();
        cfg.max_steps = 3;
        let g = FnField::new(1, |t, _x, out: &mut [f64]| out[0] = (50.0 * t).sin());
        assert!(matches!(
            flow(&g, 0.0, 10.0, &[0.0], &cfg),
            Err(IntegrationError::MaxSteps { .. })
        ));
    }
}
