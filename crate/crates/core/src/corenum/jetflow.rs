//! ε-jet of the flow of a perturbed system.
//!
//! Writing `z(t, ε) = z0 + Σ_{p≥1} ε^p c_p(t)` and expanding each
//! `F_i(t, z(t, ε))` by Faà di Bruno gives a closed hierarchy for the
//! coefficients,
//!
//! ```text
//! ċ_p = Σ_{i=1}^{p} [ε^{p-i}] F_i(t, z(t, ε)),
//! [ε^q] F_i = (1/q!) Σ_{m=1}^{q} ∂ₓᵐF_i(t, z0) · B_{q,m}(1!c_1, 2!c_2, …)   (q ≥ 1)
//! ```
//!
//! which is integrated as one ODE of dimension `n·N`.

use crate::bell::{BellTable, EpsJet};

use super::integrate::{flow, IntegrationError, IntegratorConfig};
use super::{FieldError, PerturbedSystem, VectorField};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

struct Hierarchy<'a, S: ?Sized> {
    sys: &'a S,
    z0: &'a [f64],
    table: &'a BellTable,
}

impl<S: PerturbedSystem + ?Sized> Hierarchy<'_, S> {
    /// Jet in ε of `F_i(t, z(t, ε))`, truncated at `order`.
    fn term_jet(&self, i: usize, t: f64, scaled: &[Vec<f64>], order: usize) -> Result<EpsJet, FieldError> {
        let n = self.z0.len();
        let mut coeffs = vec![vec![0.0; n]; order + 1];
        self.sys.term(i, t, self.z0, &mut coeffs[0])?;
        let mut buf = vec![0.0; n];
        for (q, coeff) in coeffs.iter_mut().enumerate().skip(1) {
            let inv = 1.0 / factorial(q);
            for m in 1..=q {
                let mut failure = None;
                self.table
                    .for_each_term(q, m, |c, factors| {
                        if failure.is_some() {
                            return;
                        }
                        let dirs: Vec<&[f64]> = factors.iter().map(|&f| scaled[f - 1].as_slice()).collect();
                        if dirs.iter().any(|d| d.iter().all(|v| *v == 0.0)) {
                            return;
                        }
                        match self.sys.term_derivative(i, t, self.z0, &dirs, &mut buf) {
                            Ok(()) => {
                                for (o, b) in coeff.iter_mut().zip(&buf) {
                                    *o += inv * c * b;
                                }
                            }
                            Err(e) => failure = Some(e),
                        }
                    })
                    .map_err(|_| FieldError::DerivativeOrder {
                        requested: q,
                        max: self.table.max_n(),
                    })?;
                if let Some(e) = failure {
                    return Err(e);
                }
            }
        }
        Ok(EpsJet::new(coeffs).expect("uniform coefficient length"))
    }
}

impl<S: PerturbedSystem + ?Sized> VectorField for Hierarchy<'_, S> {
    fn dim(&self) -> usize {
        self.z0.len() * self.sys.order()
    }

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        let n = self.z0.len();
        let big_n = self.sys.order();
        let scaled: Vec<Vec<f64>> = (1..=big_n)
            .map(|j| {
                let f = factorial(j);
                x[(j - 1) * n..j * n].iter().map(|v| f * v).collect()
            })
            .collect();
        let mut total = EpsJet::zero(big_n, n);
        for i in 1..=big_n {
            if self.sys.term_is_zero(i) {
                continue;
            }
            let partial = self.term_jet(i, t, &scaled, big_n - i)?;
            let mut padded = partial.coeffs().to_vec();
            padded.resize(big_n + 1, vec![0.0; n]);
            let padded = EpsJet::new(padded).expect("uniform coefficient length");
            let shifted = EpsJet::monomial(i, big_n).mul(&padded).expect("orders agree");
            total = total.try_add(&shifted).expect("orders agree");
        }
        for p in 1..=big_n {
            out[(p - 1) * n..p * n].copy_from_slice(total.coeff(p).expect("p <= order"));
        }
        Ok(())
    }
}

/// Jet `z0 + Σ ε^p c_p(t1)` of the solution starting at `z0` at time `t0`.
pub fn flow_jet<S: PerturbedSystem + ?Sized>(
    sys: &S,
    t0: f64,
    t1: f64,
    z0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<EpsJet, IntegrationError> {
    let n = sys.dim();
    let big_n = sys.order();
    let table = BellTable::shared();
    if big_n > table.max_n() {
        return Err(IntegrationError::InvalidConfig(format!(
            "jet order {big_n} exceeds {}",
            table.max_n()
        )));
    }
    let hierarchy = Hierarchy { sys, z0, table };
    let end = flow(&hierarchy, t0, t1, &vec![0.0; n * big_n], cfg)?;
    let mut coeffs = vec![z0.to_vec()];
    coeffs.extend(end.chunks(n).map(<[f64]>::to_vec));
    Ok(EpsJet::new(coeffs).expect("uniform coefficient length"))
}
