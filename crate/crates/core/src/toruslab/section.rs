use thiserror::Error;

use crate::corenum::{flow, IntegrationError, IntegratorConfig, Rk4Workspace, VectorField, BLOW_UP_THRESHOLD};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("trajectory escaped: {0}")]
    Escape(IntegrationError),
    #[error("no return to the section within time {0}")]
    NoReturn(f64),
    #[error("point has {got} components, map expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Integration(IntegrationError),
}

impl MapError {
    /// Escapes and blow-ups, as opposed to configuration problems.
    pub fn is_escape(&self) -> bool {
        matches!(self, MapError::Escape(_))
    }
}

impl From<IntegrationError> for MapError {
    fn from(e: IntegrationError) -> Self {
        if e.is_escape() {
            MapError::Escape(e)
        } else {
            MapError::Integration(e)
        }
    }
}

/// A first-return map on a section, in section coordinates.
pub trait ReturnMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, MapError>;

    /// Perturbation parameter, when the map has one.
    fn eps(&self) -> Option<f64> {
        None
    }
}

impl<M: ReturnMap + ?Sized> ReturnMap for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, MapError> {
        (**self).apply(x)
    }
    fn eps(&self) -> Option<f64> {
        (**self).eps()
    }
}

/// Map given by a closure, for synthetic experiments.
pub struct FnMap<F> {
    dim: usize,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> ReturnMap for FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, MapError> {
        let y = (self.f)(x);
        if y.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP_THRESHOLD) {
            return Err(MapError::Escape(IntegrationError::BlowUp { t: 0.0 }));
        }
        Ok(y)
    }
}

/// Time-`T` map `τ = t0 mod T` of a `T`-periodic field.
pub struct StroboscopicMap<F> {
    pub field: F,
    pub t0: f64,
    pub period: f64,
    pub cfg: IntegratorConfig,
    pub eps: Option<f64>,
}

impl<F: VectorField> ReturnMap for StroboscopicMap<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, MapError> {
        check_dim(self.dim(), x)?;
        Ok(flow(&self.field, self.t0, self.t0 + self.period, x, &self.cfg)?)
    }
    fn eps(&self) -> Option<f64> {
        self.eps
    }
}

/// First return of an autonomous field to `{z[coord] = 0, z[gate] > 0}`,
/// crossed with `z[coord]` increasing.
///
/// Section points drop the `coord` component. Trajectories are advanced by
/// fixed RK4 steps and each crossing is refined by bisection on the step
/// length down to `time_tol`.
pub struct HyperplaneSection<F> {
    pub field: F,
    pub coord: usize,
    pub gate: usize,
    pub step: f64,
    pub max_time: f64,
    pub time_tol: f64,
    pub eps: Option<f64>,
}

impl<F: VectorField> HyperplaneSection<F> {
    pub fn new(field: F, coord: usize, gate: usize, step: f64, max_time: f64) -> Self {
        Self {
            field,
            coord,
            gate,
            step,
            max_time,
            time_tol: 1e-12,
            eps: None,
        }
    }

    pub fn embed(&self, x: &[f64]) -> Vec<f64> {
        let mut z = x.to_vec();
        z.insert(self.coord, 0.0);
        z
    }

    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        let mut x = z.to_vec();
        x.remove(self.coord);
        x
    }

    /// The full state at the next crossing and the elapsed time.
    pub fn next_crossing(&self, z0: &[f64]) -> Result<(Vec<f64>, f64), MapError> {
        let n = self.field.dim();
        let mut ws = Rk4Workspace::new(n);
        let mut z = z0.to_vec();
        let mut next = vec![0.0; n];
        let mut t = 0.0;
        while t < self.max_time {
            ws.step(&self.field, t, &z, self.step, &mut next)?;
            check_escape(&next, t + self.step)?;
            let (a, b) = (z[self.coord], next[self.coord]);
            if a < 0.0 && b >= 0.0 && next[self.gate] > 0.0 {
                let mut lo = 0.0;
                let mut hi = self.step;
                let mut probe = vec![0.0; n];
                while hi - lo > self.time_tol {
                    let mid = 0.5 * (lo + hi);
                    ws.step(&self.field, t, &z, mid, &mut probe)?;
                    if probe[self.coord] < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                ws.step(&self.field, t, &z, hi, &mut probe)?;
                probe[self.coord] = 0.0;
                return Ok((probe, t + hi));
            }
            std::mem::swap(&mut z, &mut next);
            t += self.step;
        }
        Err(MapError::NoReturn(self.max_time))
    }
}

impl<F: VectorField> ReturnMap for HyperplaneSection<F> {
    fn dim(&self) -> usize {
        self.field.dim() - 1
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, MapError> {
        check_dim(self.dim(), x)?;
        let (z, _) = self.next_crossing(&self.embed(x))?;
        Ok(self.project(&z))
    }
    fn eps(&self) -> Option<f64> {
        self.eps
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<(), MapError> {
    if x.len() != expected {
        return Err(MapError::Dimension {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

fn check_escape(z: &[f64], t: f64) -> Result<(), MapError> {
    if z.iter().any(|v| !v.is_finite()) {
        return Err(MapError::Escape(IntegrationError::NonFinite { t }));
    }
    if z.iter().any(|v| v.abs() > BLOW_UP_THRESHOLD) {
        return Err(MapError::Escape(IntegrationError::BlowUp { t }));
    }
    Ok(())
}

/// Failure inside an iteration run, with the iterates produced before it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("iterate {index}: {source}")]
pub struct IterateError {
    pub index: usize,
    pub source: MapError,
    pub iterates: Vec<Vec<f64>>,
}

/// `count` successive returns starting from `x0` (which is not included).
pub fn poincare_iterate<M: ReturnMap + ?Sized>(map: &M, x0: &[f64], count: usize) -> Result<Vec<Vec<f64>>, IterateError> {
    let mut out = Vec::with_capacity(count);
    let mut x = x0.to_vec();
    for index in 1..=count {
        match map.apply(&x) {
            Ok(y) => {
                out.push(y.clone());
                x = y;
            }
            Err(source) => {
                return Err(IterateError {
                    index,
                    source,
                    iterates: out,
                })
            }
        }
    }
    Ok(out)
}
