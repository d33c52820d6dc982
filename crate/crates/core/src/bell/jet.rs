use std::ops::Add;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("jet orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("jet value dimensions differ: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("coefficient index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("a jet needs at least one coefficient")]
    Empty,
}

/// Truncated Taylor polynomial `c_0 + c_1 ε + … + c_N ε^N` with vector
/// coefficients of a common dimension.
///
/// A jet of dimension 1 acts as a scalar in [`EpsJet::mul`].
#[derive(Debug, Clone, PartialEq)]
pub struct EpsJet {
    coeffs: Vec<Vec<f64>>,
}

impl EpsJet {
    pub fn new(coeffs: Vec<Vec<f64>>) -> Result<Self, JetError> {
        let dim = coeffs.first().ok_or(JetError::Empty)?.len();
        if let Some(bad) = coeffs.iter().find(|c| c.len() != dim) {
            return Err(JetError::DimMismatch(dim, bad.len()));
        }
        Ok(Self { coeffs })
    }

    /// Scalar jet from its coefficients.
    pub fn scalar(coeffs: &[f64]) -> Result<Self, JetError> {
        Self::new(coeffs.iter().map(|&c| vec![c]).collect())
    }

    pub fn zero(order: usize, dim: usize) -> Self {
        Self {
            coeffs: vec![vec![0.0; dim]; order + 1],
        }
    }

    pub fn constant(value: &[f64], order: usize) -> Self {
        let mut jet = Self::zero(order, value.len());
        jet.coeffs[0].copy_from_slice(value);
        jet
    }

    /// `ε^power` as a scalar jet (zero if the power exceeds the order).
    pub fn monomial(power: usize, order: usize) -> Self {
        let mut jet = Self::zero(order, 1);
        if power <= order {
            jet.coeffs[power][0] = 1.0;
        }
        jet
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Result<&[f64], JetError> {
        self.coeffs
            .get(i)
            .map(Vec::as_slice)
            .ok_or(JetError::IndexOutOfRange {
                index: i,
                order: self.order(),
            })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.iter().map(|v| v * s).collect())
                .collect(),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, JetError> {
        self.check_order(other)?;
        if self.dim() != other.dim() {
            return Err(JetError::DimMismatch(self.dim(), other.dim()));
        }
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        })
    }

    /// Componentwise Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Result<Self, JetError> {
        self.check_order(other)?;
        let (da, db) = (self.dim(), other.dim());
        let dim = match (da, db) {
            _ if da == db => da,
            (1, _) => db,
            (_, 1) => da,
            _ => return Err(JetError::DimMismatch(da, db)),
        };
        let pick = |c: &[f64], i: usize| if c.len() == 1 { c[0] } else { c[i] };
        let order = self.order();
        let mut out = Self::zero(order, dim);
        for p in 0..=order {
            for q in 0..=(order - p) {
                let (a, b) = (&self.coeffs[p], &other.coeffs[q]);
                for (i, slot) in out.coeffs[p + q].iter_mut().enumerate() {
                    *slot += pick(a, i) * pick(b, i);
                }
            }
        }
        Ok(out)
    }

    /// Horner evaluation at a concrete ε.
    pub fn evaluate(&self, eps: f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim()];
        for c in self.coeffs.iter().rev() {
            for (a, v) in acc.iter_mut().zip(c) {
                *a = *a * eps + v;
            }
        }
        acc
    }

    fn check_order(&self, other: &Self) -> Result<(), JetError> {
        if self.order() != other.order() {
            return Err(JetError::OrderMismatch(self.order(), other.order()));
        }
        Ok(())
    }
}

impl Add for &EpsJet {
    type Output = Result<EpsJet, JetError>;

    fn add(self, rhs: &EpsJet) -> Self::Output {
        self.try_add(rhs)
    }
}

pub fn jet_mul(a: &EpsJet, b: &EpsJet) -> Result<EpsJet, JetError> {
    a.mul(b)
}

pub fn jet_extract(a: &EpsJet, i: usize) -> Result<Vec<f64>, JetError> {
    a.coeff(i).map(<[f64]>::to_vec)
}
