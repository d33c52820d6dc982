use nalgebra::DMatrix;

use super::integrate::{integrate_monitored, IntegrationError, IntegratorConfig};
use super::{FieldError, JacobianField, VectorField};

/// Base point together with the tangent matrix `Ψ` of the linearized flow.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalState {
    pub z: Vec<f64>,
    pub psi: DMatrix<f64>,
}

struct Augmented<'a, F: ?Sized> {
    field: &'a F,
    n: usize,
}

impl<F: JacobianField + ?Sized> VectorField for Augmented<'_, F> {
    fn dim(&self) -> usize {
        self.n + self.n * self.n
    }

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        let n = self.n;
        let (z, psi) = x.split_at(n);
        let (dz, dpsi) = out.split_at_mut(n);
        self.field.eval(t, z, dz)?;
        let mut jac = DMatrix::zeros(n, n);
        self.field.jacobian(t, z, &mut jac)?;
        // Ψ is stored column-major; dΨ = J Ψ column by column.
        for col in 0..n {
            let p = &psi[col * n..(col + 1) * n];
            for row in 0..n {
                dpsi[col * n + row] = (0..n).map(|k| jac[(row, k)] * p[k]).sum();
            }
        }
        Ok(())
    }
}

/// Integrates `ż = f(t,z)` together with `Ψ̇ = D f(t,z) Ψ`, `Ψ(t0) = I`.
pub fn flow_variational<F: JacobianField + ?Sized>(
    field: &F,
    t0: f64,
    t1: f64,
    z0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<VariationalState, IntegrationError> {
    let n = field.dim();
    let mut state = vec![0.0; n + n * n];
    state[..n].copy_from_slice(z0);
    for i in 0..n {
        state[n + i * n + i] = 1.0;
    }
    let aug = Augmented { field, n };
    let end = integrate_monitored(&aug, t0, t1, &state, cfg, n)?;
    Ok(VariationalState {
        z: end[..n].to_vec(),
        psi: DMatrix::from_column_slice(n, n, &end[n..]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corenum::{FnField, LinearField};

    struct Zero;
    impl VectorField for Zero {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, _t: f64, _x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
            out.fill(0.0);
            Ok(())
        }
    }
    impl JacobianField for Zero {
        fn jacobian(&self, _t: f64, _x: &[f64], jac: &mut DMatrix<f64>) -> Result<(), FieldError> {
            jac.fill(0.0);
            Ok(())
        }
    }

    #[test]
    fn zero_field_identity_tangent() {
        let s = flow_variational(&Zero, 0.0, 3.0, &[1.0, 2.0], &IntegratorConfig::default()).unwrap();
        assert_eq!(s.psi, DMatrix::identity(2, 2));
        assert_eq!(s.z, vec![1.0, 2.0]);
    }

    #[test]
    fn scalar_multiplier() {
        let f = LinearField {
            a: DMatrix::from_element(1, 1, -2.0),
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        let s = flow_variational(&f, 0.0, two_pi, &[1.0], &IntegratorConfig::adaptive(1e-14, 1e-12)).unwrap();
        let expect = (-4.0 * std::f64::consts::PI).exp();
        assert!((s.psi[(0, 0)] - expect).abs() < 1e-8 * expect);
        let _ = FnField::new(1, |_t, _x, _o: &mut [f64]| {});
    }
}
