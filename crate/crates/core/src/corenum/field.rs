use std::ops::Deref;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("non-finite field value")]
    NonFinite,
    #[error("validity guard tripped: {0}")]
    Guard(String),
    #[error("derivative of order {requested} unavailable (supported up to {max})")]
    DerivativeOrder { requested: usize, max: usize },
    #[error("term index {0} out of range")]
    TermIndex(usize),
}

/// A (possibly time-dependent) vector field `ż = f(t, z)`.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError>;
}

/// A vector field with an exact Jacobian `D_z f(t, z)`.
pub trait JacobianField: VectorField {
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut DMatrix<f64>) -> Result<(), FieldError>;

    fn divergence(&self, t: f64, x: &[f64]) -> Result<f64, FieldError> {
        let n = self.dim();
        let mut jac = DMatrix::zeros(n, n);
        self.jacobian(t, x, &mut jac)?;
        Ok(jac.trace())
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        (**self).eval(t, x, out)
    }
}

impl<T: JacobianField + ?Sized> JacobianField for &T {
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut DMatrix<f64>) -> Result<(), FieldError> {
        (**self).jacobian(t, x, jac)
    }
}

/// Adapter turning a closure into a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        (self.f)(t, x, out);
        Ok(())
    }
}

/// `ż = A z`.
#[derive(Debug, Clone)]
pub struct LinearField {
    pub a: DMatrix<f64>,
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn eval(&self, _t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..x.len()).map(|j| self.a[(i, j)] * x[j]).sum();
        }
        Ok(())
    }
}

impl JacobianField for LinearField {
    fn jacobian(&self, _t: f64, _x: &[f64], jac: &mut DMatrix<f64>) -> Result<(), FieldError> {
        jac.copy_from(&self.a);
        Ok(())
    }
}

/// A `T`-periodic perturbed system `ẋ = Σ_{i=1}^N εⁱ F_i(t,x) + ε^{N+1} F̃(t,x)`.
///
/// Terms are indexed from 1. `term_derivative` applies the symmetric
/// `m`-linear map `∂ₓᵐ F_i(t,x)` to `dirs.len() = m` direction vectors.
pub trait PerturbedSystem: Sync {
    fn dim(&self) -> usize;
    fn period(&self) -> f64;
    fn order(&self) -> usize;

    fn term(&self, i: usize, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError>;

    fn term_derivative(
        &self,
        i: usize,
        t: f64,
        x: &[f64],
        dirs: &[&[f64]],
        out: &mut [f64],
    ) -> Result<(), FieldError>;

    /// True when `F_i` is identically zero; lets the recursions skip work.
    fn term_is_zero(&self, _i: usize) -> bool {
        false
    }

    fn remainder(&self, _t: f64, _x: &[f64], _eps: f64, out: &mut [f64]) -> Result<(), FieldError> {
        out.fill(0.0);
        Ok(())
    }
}

/// The full field of a [`PerturbedSystem`] at a fixed ε.
pub struct FullField<S> {
    sys: S,
    eps: f64,
}

impl<S> FullField<S> {
    pub fn new(sys: S, eps: f64) -> Self {
        Self { sys, eps }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl<S> VectorField for FullField<S>
where
    S: Deref + Sync,
    S::Target: PerturbedSystem,
{
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        out.fill(0.0);
        if self.eps == 0.0 {
            return Ok(());
        }
        let n = self.sys.dim();
        let mut buf = vec![0.0; n];
        let mut pow = 1.0;
        for i in 1..=self.sys.order() {
            pow *= self.eps;
            if self.sys.term_is_zero(i) {
                continue;
            }
            self.sys.term(i, t, x, &mut buf)?;
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += pow * b;
            }
        }
        pow *= self.eps;
        self.sys.remainder(t, x, self.eps, &mut buf)?;
        for (o, b) in out.iter_mut().zip(&buf) {
            *o += pow * b;
        }
        Ok(())
    }
}

impl<S> JacobianField for FullField<S>
where
    S: Deref + Sync,
    S::Target: PerturbedSystem,
{
    // The remainder is not differentiated; variational flows of the full
    // system use the truncated expansion.
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut DMatrix<f64>) -> Result<(), FieldError> {
        let n = self.sys.dim();
        jac.fill(0.0);
        if self.eps == 0.0 {
            return Ok(());
        }
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        let mut pow = 1.0;
        for i in 1..=self.sys.order() {
            pow *= self.eps;
            if self.sys.term_is_zero(i) {
                continue;
            }
            for j in 0..n {
                e.fill(0.0);
                e[j] = 1.0;
                self.sys.term_derivative(i, t, x, &[&e], &mut col)?;
                for r in 0..n {
                    jac[(r, j)] += pow * col[r];
                }
            }
        }
        Ok(())
    }
}
