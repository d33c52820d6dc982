//! Higher-order Melnikov (averaged) functions.
//!
//! For `ẋ = Σ εⁱ F_i(t,x)` the time-`T` map is `z + Σ εⁱ f_i(z) + O(ε^{N+1})`
//! with `f_i(z) = y_i(T,z)/i!`, where
//!
//! ```text
//! y_i(t,z) = ∫₀ᵗ i! F_i(s,z)
//!           + Σ_{j=1}^{i-1} Σ_{m=1}^{j} (i!/j!) ∂ₓᵐF_{i-j}(s,z) B_{j,m}(y_1, …, y_{j-m+1})(s,z) ds.
//! ```
//!
//! Lower-order `y_j(s)` are memoized per call. A value at `s` is obtained by
//! integrating from the closest cached abscissa between 0 and `s`, so the
//! nested quadratures stay local.

use std::cell::RefCell;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::bell::BellTable;
use crate::corenum::quad::{self, QuadConfig, QuadError};
use crate::corenum::{flow_jet, FieldError, IntegrationError, IntegratorConfig, PerturbedSystem, VectorField};

/// Default vanishing threshold for lower-order functions.
pub const VANISHING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MelnikovError {
    #[error("order {i} outside 1..={max}")]
    Order { i: usize, max: usize },
    #[error("state has {got} components, system dimension is {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("hypothesis violated: |f_{order}| = {value:e} at {at:?} exceeds {tol:e}")]
    Hypothesis {
        order: usize,
        value: f64,
        at: Vec<f64>,
        tol: f64,
    },
    #[error("invalid sample box: {0}")]
    SampleBox(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

// Order-preserving integer image of a float, so cached abscissae can be
// searched by range.
fn ord_key(s: f64) -> i64 {
    let b = s.to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

struct Recursion<'a, S: ?Sized> {
    sys: &'a S,
    z: &'a [f64],
    quad: QuadConfig,
    table: &'a BellTable,
    // y_j ≡ 0 when F_1..F_j all vanish identically
    zero_y: Vec<bool>,
    cache: RefCell<Vec<BTreeMap<i64, (f64, Vec<f64>)>>>,
}

impl<'a, S: PerturbedSystem + ?Sized> Recursion<'a, S> {
    fn new(sys: &'a S, z: &'a [f64], quad: QuadConfig) -> Result<Self, MelnikovError> {
        let big_n = sys.order();
        let table = BellTable::shared();
        if big_n > table.max_n() {
            return Err(MelnikovError::Order {
                i: big_n,
                max: table.max_n(),
            });
        }
        let mut zero_y = vec![true; big_n + 1];
        let mut acc = true;
        for (i, slot) in zero_y.iter_mut().enumerate().skip(1) {
            acc = acc && sys.term_is_zero(i);
            *slot = acc;
        }
        let mut caches = vec![BTreeMap::new(); big_n + 1];
        for c in caches.iter_mut() {
            c.insert(ord_key(0.0), (0.0, vec![0.0; z.len()]));
        }
        Ok(Self {
            sys,
            z,
            quad,
            table,
            zero_y,
            cache: RefCell::new(caches),
        })
    }

    fn integrand(&self, i: usize, s: f64) -> Result<Vec<f64>, FieldError> {
        let n = self.z.len();
        let fi = factorial(i);
        let mut out = vec![0.0; n];
        let mut buf = vec![0.0; n];
        if !self.sys.term_is_zero(i) {
            self.sys.term(i, s, self.z, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += fi * b;
            }
        }
        for j in 1..i {
            if self.sys.term_is_zero(i - j) {
                continue;
            }
            let ys: Vec<Option<Vec<f64>>> = (1..=j)
                .map(|k| if self.zero_y[k] { Ok(None) } else { self.y(k, s).map(Some) })
                .collect::<Result<_, _>>()?;
            let w = fi / factorial(j);
            for m in 1..=j {
                let mut failure = None;
                self.table
                    .for_each_term(j, m, |c, factors| {
                        if failure.is_some() {
                            return;
                        }
                        let dirs: Option<Vec<&[f64]>> =
                            factors.iter().map(|&f| ys[f - 1].as_deref()).collect();
                        let Some(dirs) = dirs else { return };
                        match self.sys.term_derivative(i - j, s, self.z, &dirs, &mut buf) {
                            Ok(()) => {
                                for (o, b) in out.iter_mut().zip(&buf) {
                                    *o += w * c * b;
                                }
                            }
                            Err(e) => failure = Some(e),
                        }
                    })
                    .map_err(|_| FieldError::DerivativeOrder {
                        requested: j,
                        max: self.table.max_n(),
                    })?;
                if let Some(e) = failure {
                    return Err(e);
                }
            }
        }
        Ok(out)
    }

    fn y(&self, j: usize, t: f64) -> Result<Vec<f64>, FieldError> {
        if self.zero_y[j] {
            return Ok(vec![0.0; self.z.len()]);
        }
        let key = ord_key(t);
        let (s0, base) = {
            let cache = self.cache.borrow();
            let map = &cache[j];
            if let Some((_, v)) = map.get(&key) {
                return Ok(v.clone());
            }
            let found = if t >= 0.0 {
                map.range(..key).next_back()
            } else {
                map.range(key..).next()
            };
            let (_, (s0, v)) = found.expect("origin is always cached");
            (*s0, v.clone())
        };
        let span = self.sys.period().max(t.abs());
        let cfg = QuadConfig {
            abs_tol: (self.quad.abs_tol * (t - s0).abs() / span).max(1e-15),
            ..self.quad
        };
        let part = match quad::integrate(|s| self.integrand(j, s), s0, t, self.z.len(), &cfg) {
            Ok(v) => v,
            Err(QuadError::Field(e)) => return Err(e),
            Err(QuadError::NoConvergence { .. }) => return Err(FieldError::Guard(format!("quadrature of y_{j} failed"))),
        };
        let value: Vec<f64> = base.iter().zip(&part).map(|(a, b)| a + b).collect();
        self.cache.borrow_mut()[j].insert(key, (t, value.clone()));
        Ok(value)
    }

    fn y_top(&self, i: usize, t: f64) -> Result<Vec<f64>, MelnikovError> {
        if self.zero_y[i] {
            return Ok(vec![0.0; self.z.len()]);
        }
        quad::integrate(|s| self.integrand(i, s), 0.0, t, self.z.len(), &self.quad).map_err(Into::into)
    }
}

fn check_args<S: PerturbedSystem + ?Sized>(sys: &S, i: usize, z: &[f64]) -> Result<(), MelnikovError> {
    if i == 0 || i > sys.order() {
        return Err(MelnikovError::Order { i, max: sys.order() });
    }
    if z.len() != sys.dim() {
        return Err(MelnikovError::Dimension {
            expected: sys.dim(),
            got: z.len(),
        });
    }
    Ok(())
}

/// `y_i(t, z)` by nested adaptive quadrature.
pub fn y_function<S: PerturbedSystem + ?Sized>(
    sys: &S,
    i: usize,
    t: f64,
    z: &[f64],
    quad: &QuadConfig,
) -> Result<Vec<f64>, MelnikovError> {
    check_args(sys, i, z)?;
    Recursion::new(sys, z, *quad)?.y_top(i, t)
}

/// `f_i(z) = y_i(T, z)/i!`.
pub fn melnikov_f<S: PerturbedSystem + ?Sized>(
    sys: &S,
    i: usize,
    z: &[f64],
    quad: &QuadConfig,
) -> Result<Vec<f64>, MelnikovError> {
    let y = y_function(sys, i, sys.period(), z, quad)?;
    let fi = factorial(i);
    Ok(y.into_iter().map(|v| v / fi).collect())
}

/// Coefficient `i` of the ε-jet of the time-`T` map, an independent route to `f_i`.
pub fn jet_oracle_f<S: PerturbedSystem + ?Sized>(
    sys: &S,
    i: usize,
    z: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, MelnikovError> {
    check_args(sys, i, z)?;
    let jet = flow_jet(sys, 0.0, sys.period(), z, cfg)?;
    Ok(jet.coeff(i).expect("i <= order").to_vec())
}

/// Grid on which lower-order functions must vanish before `g_ℓ = f_ℓ/T` is used.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub per_dim: usize,
    pub tol: f64,
}

impl SampleBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self {
            lo,
            hi,
            per_dim: 32,
            tol: VANISHING_TOL,
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let n = self.lo.len();
        let k = self.per_dim.max(1);
        let total = k.pow(n as u32);
        (0..total)
            .map(|mut flat| {
                (0..n)
                    .map(|d| {
                        let idx = flat % k;
                        flat /= k;
                        if k == 1 {
                            0.5 * (self.lo[d] + self.hi[d])
                        } else {
                            self.lo[d] + (self.hi[d] - self.lo[d]) * idx as f64 / (k - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn validate(&self, n: usize) -> Result<(), MelnikovError> {
        if self.lo.len() != n || self.hi.len() != n {
            return Err(MelnikovError::SampleBox(format!("expected {n} bounds per side")));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(MelnikovError::SampleBox("bounds must be finite with lo <= hi".into()));
        }
        if self.per_dim == 0 || !(self.tol > 0.0) {
            return Err(MelnikovError::SampleBox("need per_dim >= 1 and tol > 0".into()));
        }
        Ok(())
    }
}

/// `f_i` together with the vanishing status of `f_1..f_{i-1}` on a sample box.
#[derive(Debug, Clone, PartialEq)]
pub struct MelnikovResult {
    pub order: usize,
    pub period: f64,
    /// `vanishing[j-1]` for `j < order`.
    pub vanishing: Vec<bool>,
}

/// Checks `max |f_j| <= tol` over the sample grid for `j = 1..i-1`.
///
/// Orders whose terms `F_1..F_j` are identically zero vanish without sampling.
pub fn vanishing_flags<S: PerturbedSystem + ?Sized>(
    sys: &S,
    i: usize,
    quad: &QuadConfig,
    samples: &SampleBox,
) -> Result<(MelnikovResult, Option<MelnikovError>), MelnikovError> {
    if i == 0 || i > sys.order() {
        return Err(MelnikovError::Order { i, max: sys.order() });
    }
    samples.validate(sys.dim())?;
    let points = samples.points();
    let mut flags = Vec::with_capacity(i - 1);
    let mut first_violation = None;
    let mut structural = true;
    for j in 1..i {
        structural = structural && sys.term_is_zero(j);
        if structural {
            flags.push(true);
            continue;
        }
        let mut worst = (0.0f64, Vec::new());
        for p in &points {
            let f = melnikov_f(sys, j, p, quad)?;
            let m = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if m > worst.0 {
                worst = (m, p.clone());
            }
        }
        let ok = worst.0 <= samples.tol;
        if !ok && first_violation.is_none() {
            first_violation = Some(MelnikovError::Hypothesis {
                order: j,
                value: worst.0,
                at: worst.1,
                tol: samples.tol,
            });
        }
        flags.push(ok);
    }
    Ok((
        MelnikovResult {
            order: i,
            period: sys.period(),
            vanishing: flags,
        },
        first_violation,
    ))
}

/// The averaged field `g_ℓ = f_ℓ/T`, admitted only when `f_1..f_{ℓ-1}`
/// vanish on the sample box.
pub struct AveragedField<'a, S: ?Sized> {
    sys: &'a S,
    order: usize,
    quad: QuadConfig,
}

impl<'a, S: PerturbedSystem + ?Sized> AveragedField<'a, S> {
    pub fn new(sys: &'a S, order: usize, quad: &QuadConfig, samples: &SampleBox) -> Result<Self, MelnikovError> {
        let (_, violation) = vanishing_flags(sys, order, quad, samples)?;
        if let Some(e) = violation {
            return Err(e);
        }
        Ok(Self {
            sys,
            order,
            quad: *quad,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn g(&self, z: &[f64]) -> Result<Vec<f64>, MelnikovError> {
        let t = self.sys.period();
        Ok(melnikov_f(self.sys, self.order, z, &self.quad)?
            .into_iter()
            .map(|v| v / t)
            .collect())
    }
}

impl<S: PerturbedSystem + ?Sized> VectorField for AveragedField<'_, S> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn eval(&self, _t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        let g = self.g(x).map_err(|e| match e {
            MelnikovError::Field(f) => f,
            other => FieldError::Guard(other.to_string()),
        })?;
        out.copy_from_slice(&g);
        Ok(())
    }
}

/// `g_ℓ(z)` after the vanishing check.
pub fn averaged_g<S: PerturbedSystem + ?Sized>(
    sys: &S,
    order: usize,
    z: &[f64],
    quad: &QuadConfig,
    samples: &SampleBox,
) -> Result<Vec<f64>, MelnikovError> {
    check_args(sys, order, z)?;
    AveragedField::new(sys, order, quad, samples)?.g(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysdsl::{parse_expr, SystemSpec};
    use std::f64::consts::PI;

    fn spec(n: usize, terms: &[&[&str]]) -> SystemSpec {
        let terms = terms
            .iter()
            .map(|c| c.iter().map(|s| parse_expr(s, n).unwrap()).collect())
            .collect();
        SystemSpec::new("t", n, 2.0 * PI, terms).unwrap()
    }

    #[test]
    fn first_order_examples() {
        let q = QuadConfig::default();
        let s = spec(1, &[&["sin(t)"]]);
        assert!(y_function(&s, 1, 2.0 * PI, &[0.0], &q).unwrap()[0].abs() < 1e-12);
        let s = spec(1, &[&["sin(t)^2"]]);
        assert!((y_function(&s, 1, 2.0 * PI, &[0.0], &q).unwrap()[0] - PI).abs() < 1e-10);
    }

    #[test]
    fn second_order_linear() {
        // ẋ = ε a x: f_2 = (aT)²/2 · x
        let s = SystemSpec::new("lin", 1, 1.0, vec![vec![parse_expr("0.7*x1", 1).unwrap()], vec![parse_expr("0", 1).unwrap()]]).unwrap();
        let f2 = melnikov_f(&s, 2, &[2.0], &QuadConfig::default()).unwrap()[0];
        assert!((f2 - 0.49 / 2.0 * 2.0).abs() < 1e-10);
    }

    #[test]
    fn order_guards() {
        let s = spec(1, &[&["sin(t)"]]);
        let q = QuadConfig::default();
        assert!(matches!(melnikov_f(&s, 2, &[0.0], &q), Err(MelnikovError::Order { i: 2, max: 1 })));
        assert!(matches!(melnikov_f(&s, 1, &[0.0, 1.0], &q), Err(MelnikovError::Dimension { .. })));
    }

    #[test]
    fn hypothesis_guard() {
        let s = spec(1, &[&["1 + x1"], &["x1"]]);
        let q = QuadConfig::default();
        let mut b = SampleBox::new(vec![-1.0], vec![1.0]);
        b.per_dim = 5;
        assert!(matches!(averaged_g(&s, 2, &[0.0], &q, &b), Err(MelnikovError::Hypothesis { order: 1, .. })));
        let g1 = averaged_g(&s, 1, &[0.5], &q, &b).unwrap();
        assert!((g1[0] - 1.5).abs() < 1e-12);
    }
}
