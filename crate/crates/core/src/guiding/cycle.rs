use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::linalg::eigenvalues;
use crate::corenum::{
    flow, flow_variational, FieldError, IntegrationError, IntegratorConfig, JacobianField, VectorField,
};

/// Largest factor by which one Newton step may lengthen the period.
pub const PERIOD_GROWTH: f64 = 4.0;

/// Newton gives up once the period falls below this fraction of the guess.
pub const PERIOD_FLOOR: f64 = 1e-6;

/// Band around the unit circle, in relative modulus, treated as neutral.
pub const UNIT_CIRCLE_BAND: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub re: f64,
    pub im: f64,
}

impl Multiplier {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycle {
    pub anchor: Vec<f64>,
    pub omega: f64,
    pub monodromy: DMatrix<f64>,
    pub multipliers: Vec<Multiplier>,
    pub trivial_index: usize,
    pub k: usize,
    pub hyperbolic: bool,
    /// `|φ_ω(z*) − z*|` at convergence.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleConfig {
    pub integrator: IntegratorConfig,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::adaptive(1e-13, 1e-13),
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CycleError {
    #[error("Newton iteration did not converge in {iterations} steps (residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },
    #[error("singular shooting Jacobian: cycle is not isolated")]
    Degenerate,
    #[error("converged to an equilibrium, not a cycle")]
    Equilibrium,
    #[error("invalid initial guess: {0}")]
    BadGuess(String),
    #[error("period collapsed to {0:e}: no cycle near the guess")]
    PeriodCollapse(f64),
    #[error("eigenvalue iteration did not converge")]
    Eigen,
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn residual<F: VectorField + ?Sized>(
    g: &F,
    z: &[f64],
    omega: f64,
    anchor: &[f64],
    normal: &[f64],
    cfg: &IntegratorConfig,
) -> Result<(Vec<f64>, Vec<f64>), CycleError> {
    let end = flow(g, 0.0, omega, z, cfg)?;
    let mut r: Vec<f64> = end.iter().zip(z).map(|(a, b)| a - b).collect();
    r.push(normal.iter().zip(z.iter().zip(anchor)).map(|(n, (a, b))| n * (a - b)).sum());
    Ok((r, end))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton shooting for a periodic orbit of the autonomous field `g`.
///
/// Unknowns are the anchor `z` and period `ω`; the anchor is pinned to the
/// hyperplane through `z_guess` orthogonal to `g(z_guess)`.
pub fn find_cycle<F: JacobianField + ?Sized>(
    g: &F,
    z_guess: &[f64],
    omega_guess: f64,
    cfg: &CycleConfig,
) -> Result<LimitCycle, CycleError> {
    let n = g.dim();
    if z_guess.len() != n {
        return Err(CycleError::BadGuess(format!("expected {n} components")));
    }
    if !(omega_guess.is_finite() && omega_guess > 0.0) {
        return Err(CycleError::BadGuess("period guess must be positive".into()));
    }
    cfg.integrator.validate()?;
    let mut normal = vec![0.0; n];
    g.eval(0.0, z_guess, &mut normal)?;
    let gn = norm(&normal);
    if gn < 1e-10 {
        return Err(CycleError::Equilibrium);
    }

    let mut z = z_guess.to_vec();
    let mut omega = omega_guess;
    let (mut r, _) = residual(g, &z, omega, z_guess, &normal, &cfg.integrator)?;
    let mut rn = norm(&r);
    let mut iterations = 0;
    while rn >= cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(CycleError::Diverged { iterations, residual: rn });
        }
        iterations += 1;
        let var = flow_variational(g, 0.0, omega, &z, &cfg.integrator)?;
        let mut g_end = vec![0.0; n];
        g.eval(0.0, &var.z, &mut g_end)?;
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = var.psi[(i, j)] - if i == j { 1.0 } else { 0.0 };
            }
            jac[(i, n)] = g_end[i];
            jac[(n, i)] = normal[i];
        }
        let rhs = DVector::from_iterator(n + 1, r.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs).ok_or(CycleError::Degenerate)?;
        if !step.iter().all(|v| v.is_finite()) {
            return Err(CycleError::Degenerate);
        }
        // Halve the step until the residual decreases.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let z_try: Vec<f64> = z.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            let omega_try = omega + lambda * step[n];
            if omega_try > 0.0 && omega_try <= PERIOD_GROWTH * omega {
                if let Ok((r_try, _)) = residual(g, &z_try, omega_try, z_guess, &normal, &cfg.integrator) {
                    let rn_try = norm(&r_try);
                    if rn_try < rn {
                        z = z_try;
                        omega = omega_try;
                        r = r_try;
                        rn = rn_try;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(CycleError::Diverged { iterations, residual: rn });
        }
        if omega < PERIOD_FLOOR * omega_guess {
            return Err(CycleError::PeriodCollapse(omega));
        }
    }

    let mut gz = vec![0.0; n];
    g.eval(0.0, &z, &mut gz)?;
    if norm(&gz) < 1e-10 {
        return Err(CycleError::Equilibrium);
    }
    let var = flow_variational(g, 0.0, omega, &z, &cfg.integrator)?;
    let residual = norm(&r[..n]);
    assemble(z, omega, var.psi, residual, iterations)
}

fn assemble(
    anchor: Vec<f64>,
    omega: f64,
    monodromy: DMatrix<f64>,
    residual: f64,
    iterations: usize,
) -> Result<LimitCycle, CycleError> {
    let multipliers: Vec<Multiplier> = eigenvalues(&monodromy)
        .ok_or(CycleError::Eigen)?
        .iter()
        .map(|c| Multiplier { re: c.re, im: c.im })
        .collect();
    let trivial_index = multipliers
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = (a.1.re - 1.0).hypot(a.1.im);
            let db = (b.1.re - 1.0).hypot(b.1.im);
            da.total_cmp(&db)
        })
        .map_or(0, |(i, _)| i);
    let near_unit = multipliers
        .iter()
        .filter(|m| (m.modulus() - 1.0).abs() <= UNIT_CIRCLE_BAND)
        .count();
    let k = multipliers
        .iter()
        .enumerate()
        .filter(|(i, m)| *i != trivial_index && m.modulus() < 1.0)
        .count();
    Ok(LimitCycle {
        anchor,
        omega,
        monodromy,
        multipliers,
        trivial_index,
        k,
        hyperbolic: near_unit == 1,
        residual,
        iterations,
    })
}

/// `exp ∫₀^ω div g(φ(s)) ds` along the cycle, integrated together with the orbit.
pub fn liouville_det<F: JacobianField + ?Sized>(
    g: &F,
    cycle: &LimitCycle,
    cfg: &IntegratorConfig,
) -> Result<f64, IntegrationError> {
    struct WithDivergence<'a, F: ?Sized>(&'a F);
    impl<F: JacobianField + ?Sized> VectorField for WithDivergence<'_, F> {
        fn dim(&self) -> usize {
            self.0.dim() + 1
        }
        fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
            let n = self.0.dim();
            self.0.eval(t, &x[..n], &mut out[..n])?;
            out[n] = self.0.divergence(t, &x[..n])?;
            Ok(())
        }
    }
    let mut start = cycle.anchor.clone();
    start.push(0.0);
    let end = flow(&WithDivergence(g), 0.0, cycle.omega, &start, cfg)?;
    Ok(end[g.dim()].exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stability {
    pub k: usize,
    pub attracting: bool,
    pub unstable_directions: usize,
}

pub fn classify_stability(cycle: &LimitCycle) -> Stability {
    let n = cycle.multipliers.len();
    Stability {
        k: cycle.k,
        attracting: cycle.k + 1 == n,
        unstable_directions: n - 1 - cycle.k,
    }
}

/// A cycle record from a known monodromy, bypassing the search.
pub fn cycle_from_monodromy(anchor: Vec<f64>, omega: f64, monodromy: DMatrix<f64>) -> Result<LimitCycle, CycleError> {
    assemble(anchor, omega, monodromy, 0.0, 0)
}

/// Central-difference Jacobian wrapper for fields without an analytic one.
pub struct FdJacobian<F> {
    pub field: F,
    pub step: f64,
}

impl<F: VectorField> FdJacobian<F> {
    pub fn new(field: F) -> Self {
        Self { field, step: 1e-6 }
    }
}

impl<F: VectorField> VectorField for FdJacobian<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        self.field.eval(t, x, out)
    }
}

impl<F: VectorField> JacobianField for FdJacobian<F> {
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut DMatrix<f64>) -> Result<(), FieldError> {
        let n = self.field.dim();
        let mut xp = x.to_vec();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for j in 0..n {
            let h = self.step * (1.0 + x[j].abs());
            xp[j] = x[j] + h;
            self.field.eval(t, &xp, &mut fp)?;
            xp[j] = x[j] - h;
            self.field.eval(t, &xp, &mut fm)?;
            xp[j] = x[j];
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(())
    }
}
