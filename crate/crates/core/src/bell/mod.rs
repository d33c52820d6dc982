//! Exact partial Bell polynomials and truncated ε-jets.
//!
//! `B_{n,k}` is stored as a list of monomials with exact integer
//! coefficients, built once by the binomial recurrence
//!
//! ```text
//! B_{n,k} = Σ_{j=1}^{n-k+1} C(n-1, j-1) · x_j · B_{n-j,k-1}
//! ```
//!
//! Monomials carry the multiset of argument indices they multiply, so the
//! same table evaluates scalar arguments, integer arguments, and vector
//! arguments fed through a symmetric multilinear map.

mod jet;

pub use jet::{jet_extract, jet_mul, EpsJet, JetError};

use std::collections::BTreeMap;
use std::sync::OnceLock;

use thiserror::Error;

/// Largest `n` held by the shared table used by [`bell_eval`].
pub const SHARED_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BellError {
    #[error("B_{{{n},{k}}} requires 1 <= k <= n")]
    InvalidOrder { n: usize, k: usize },
    #[error("B_{{{n},{k}}} takes {expected} arguments, got {got}")]
    ArgumentCount {
        n: usize,
        k: usize,
        expected: usize,
        got: usize,
    },
    #[error("n = {n} exceeds table size {max_n}")]
    TooLarge { n: usize, max_n: usize },
}

/// One monomial `coeff · x_{f_1} · x_{f_2} ⋯ x_{f_k}`.
///
/// `factors` is sorted and 1-based: `[1, 1, 2]` stands for `x_1² x_2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: u64,
    pub factors: Vec<usize>,
}

/// Memoized coefficients of every `B_{n,k}` with `0 <= k <= n <= max_n`.
///
/// Immutable once built, so a table can be shared freely between threads.
#[derive(Debug, Clone)]
pub struct BellTable {
    max_n: usize,
    // polys[n][k]
    polys: Vec<Vec<Vec<Monomial>>>,
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

impl BellTable {
    pub fn new(max_n: usize) -> Self {
        let max_n = max_n.max(1);
        let mut polys: Vec<Vec<Vec<Monomial>>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let terms = if n == 0 && k == 0 {
                    vec![Monomial {
                        coeff: 1,
                        factors: Vec::new(),
                    }]
                } else if k == 0 {
                    Vec::new()
                } else {
                    let mut acc: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
                    for j in 1..=(n - k + 1) {
                        let c = binomial(n - 1, j - 1);
                        let lower: &Vec<Monomial> = &polys[n - j][k - 1];
                        for m in lower {
                            let mut factors = m.factors.clone();
                            let pos = factors.partition_point(|&f| f < j);
                            factors.insert(pos, j);
                            *acc.entry(factors).or_insert(0) += c * m.coeff;
                        }
                    }
                    acc.into_iter()
                        .map(|(factors, coeff)| Monomial { coeff, factors })
                        .collect()
                };
                row.push(terms);
            }
            polys.push(row);
        }
        Self { max_n, polys }
    }

    /// The table shared by the free functions, covering `n <= SHARED_MAX_N`.
    pub fn shared() -> &'static BellTable {
        static TABLE: OnceLock<BellTable> = OnceLock::new();
        TABLE.get_or_init(|| BellTable::new(SHARED_MAX_N))
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// Monomials of `B_{n,k}`; empty for the identically zero cases.
    pub fn terms(&self, n: usize, k: usize) -> Result<&[Monomial], BellError> {
        if n > self.max_n {
            return Err(BellError::TooLarge {
                n,
                max_n: self.max_n,
            });
        }
        if k > n {
            return Ok(&[]);
        }
        Ok(&self.polys[n][k])
    }

    fn checked_terms(&self, n: usize, k: usize, got: usize) -> Result<&[Monomial], BellError> {
        if k == 0 || k > n {
            return Err(BellError::InvalidOrder { n, k });
        }
        let expected = n - k + 1;
        if got != expected {
            return Err(BellError::ArgumentCount {
                n,
                k,
                expected,
                got,
            });
        }
        self.terms(n, k)
    }

    pub fn eval(&self, n: usize, k: usize, x: &[f64]) -> Result<f64, BellError> {
        let terms = self.checked_terms(n, k, x.len())?;
        Ok(terms
            .iter()
            .map(|m| m.coeff as f64 * m.factors.iter().map(|&f| x[f - 1]).product::<f64>())
            .sum())
    }

    pub fn eval_int(&self, n: usize, k: usize, x: &[i64]) -> Result<i128, BellError> {
        let terms = self.checked_terms(n, k, x.len())?;
        Ok(terms
            .iter()
            .map(|m| {
                m.coeff as i128
                    * m.factors
                        .iter()
                        .map(|&f| x[f - 1] as i128)
                        .product::<i128>()
            })
            .sum())
    }

    /// Visits every monomial of `B_{n,k}` with its coefficient.
    ///
    /// Vector arguments are handled by the caller: each monomial names the
    /// arguments a symmetric multilinear map must be applied to.
    pub fn for_each_term<F>(&self, n: usize, k: usize, mut visit: F) -> Result<(), BellError>
    where
        F: FnMut(f64, &[usize]),
    {
        for m in self.terms(n, k)? {
            visit(m.coeff as f64, &m.factors);
        }
        Ok(())
    }
}

/// `B_{n,k}(x_1, …, x_{n-k+1})` from the shared table.
pub fn bell_eval(n: usize, k: usize, x: &[f64]) -> Result<f64, BellError> {
    BellTable::shared().eval(n, k, x)
}

/// Exact integer evaluation from the shared table.
pub fn bell_eval_int(n: usize, k: usize, x: &[i64]) -> Result<i128, BellError> {
    BellTable::shared().eval_int(n, k, x)
}
