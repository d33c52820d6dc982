use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::compiled::Compiled;
use super::diff::diff_expr;
use super::expr::{EvalError, Expr, Var};
use crate::corenum::{FieldError, PerturbedSystem};

/// Native remainder `F̃(t, x, ε)`.
pub type RemainderFn = Arc<dyn Fn(f64, &[f64], f64, &mut [f64]) + Send + Sync>;

/// Absolute periodicity tolerance, scaled by `max(1, |F|)`.
pub const PERIODICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("dimension must be at least 1")]
    Dimension,
    #[error("period must be positive and finite, got {0}")]
    Period(f64),
    #[error("truncation order must be at least 1")]
    Order,
    #[error("order {order} has {got} components, expected {expected}")]
    ComponentCount { order: usize, expected: usize, got: usize },
    #[error("F{order}[{component}] references x{index} beyond dimension {n}")]
    VarOutOfRange {
        order: usize,
        component: usize,
        index: usize,
        n: usize,
    },
    #[error("F{order}[{component}] is not periodic: |F(t+T,x) - F(t,x)| = {gap:e} at t = {t}")]
    NotPeriodic {
        order: usize,
        component: usize,
        t: f64,
        gap: f64,
    },
}

#[derive(Clone)]
enum Remainder {
    Exprs(Vec<Compiled>),
    Native(RemainderFn),
}

/// Symbolic derivatives of one order of one term.
#[derive(Debug, Clone)]
struct DerivTable {
    // exprs[key][component] for sorted 0-based multi-indices
    exprs: Vec<Vec<Compiled>>,
    zero: Vec<bool>,
    // index of the sorted key for every ordered tuple, row-major in base n
    tuple_key: Vec<usize>,
}

/// A `T`-periodic perturbed system defined by expressions.
#[derive(Clone)]
pub struct SystemSpec {
    name: String,
    n: usize,
    period: f64,
    terms: Vec<Vec<Expr>>,
    compiled: Vec<Vec<Compiled>>,
    zero_terms: Vec<bool>,
    remainder: Option<Remainder>,
    // tables[i-1][m-1]
    tables: Vec<Vec<DerivTable>>,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("period", &self.period)
            .field("order", &self.terms.len())
            .field("remainder", &self.remainder.is_some())
            .finish()
    }
}

fn eval_err(_: EvalError) -> FieldError {
    FieldError::NonFinite
}

fn sorted_keys(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; m];
    loop {
        out.push(cur.clone());
        // next non-decreasing tuple
        let mut pos = m;
        while pos > 0 && cur[pos - 1] == n - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return out;
        }
        cur[pos - 1] += 1;
        let v = cur[pos - 1];
        for c in cur.iter_mut().skip(pos) {
            *c = v;
        }
    }
}

fn build_tables(term: &[Expr], n: usize, max_m: usize) -> Vec<DerivTable> {
    let mut tables: Vec<DerivTable> = Vec::with_capacity(max_m);
    let mut prev_index: HashMap<Vec<usize>, usize> = HashMap::new();
    prev_index.insert(Vec::new(), 0);
    let mut prev_exprs: Vec<Vec<Expr>> = vec![term.to_vec()];
    for m in 1..=max_m {
        let keys = sorted_keys(n, m);
        let mut index = HashMap::with_capacity(keys.len());
        let mut exprs = Vec::with_capacity(keys.len());
        for (k, key) in keys.iter().enumerate() {
            let parent = prev_index[&key[..m - 1]];
            let var = Var::X(key[m - 1] + 1);
            exprs.push(prev_exprs[parent].iter().map(|e| diff_expr(e, var)).collect::<Vec<_>>());
            index.insert(key.clone(), k);
        }
        let total = n.pow(m as u32);
        let mut tuple_key = Vec::with_capacity(total);
        let mut tuple = vec![0usize; m];
        for flat in 0..total {
            let mut rem = flat;
            for slot in tuple.iter_mut().rev() {
                *slot = rem % n;
                rem /= n;
            }
            let mut sorted = tuple.clone();
            sorted.sort_unstable();
            tuple_key.push(index[&sorted]);
        }
        let zero = exprs.iter().map(|c| c.iter().all(Expr::is_zero)).collect();
        tables.push(DerivTable {
            exprs: exprs.iter().map(|c| c.iter().map(Compiled::new).collect()).collect(),
            zero,
            tuple_key,
        });
        prev_index = index;
        prev_exprs = exprs;
    }
    tables
}

impl SystemSpec {
    /// Builds a system from `terms[i-1] = F_i` (each with `n` components).
    ///
    /// Derivative tensors are precomputed up to order `N`, and every
    /// component is spot-checked for `T`-periodicity.
    pub fn new(name: impl Into<String>, n: usize, period: f64, terms: Vec<Vec<Expr>>) -> Result<Self, SpecError> {
        if n == 0 {
            return Err(SpecError::Dimension);
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(SpecError::Period(period));
        }
        if terms.is_empty() {
            return Err(SpecError::Order);
        }
        for (i, term) in terms.iter().enumerate() {
            if term.len() != n {
                return Err(SpecError::ComponentCount {
                    order: i + 1,
                    expected: n,
                    got: term.len(),
                });
            }
            check_vars(term, n, i + 1)?;
        }
        let big_n = terms.len();
        let zero_terms = terms.iter().map(|c| c.iter().all(Expr::is_zero)).collect();
        let tables = terms.iter().map(|t| build_tables(t, n, big_n)).collect();
        let compiled = terms.iter().map(|c| c.iter().map(Compiled::new).collect()).collect();
        let spec = Self {
            name: name.into(),
            n,
            period,
            terms,
            compiled,
            zero_terms,
            remainder: None,
            tables,
        };
        for i in 1..=big_n {
            spec.check_periodic(i, &spec.terms[i - 1])?;
        }
        Ok(spec)
    }

    /// Attaches an ε-independent remainder `F̃(t, x)` given by expressions.
    pub fn with_remainder(mut self, remainder: Vec<Expr>) -> Result<Self, SpecError> {
        let order = self.order() + 1;
        if remainder.len() != self.n {
            return Err(SpecError::ComponentCount {
                order,
                expected: self.n,
                got: remainder.len(),
            });
        }
        check_vars(&remainder, self.n, order)?;
        self.check_periodic(order, &remainder)?;
        self.remainder = Some(Remainder::Exprs(remainder.iter().map(Compiled::new).collect()));
        Ok(self)
    }

    pub fn with_remainder_fn(mut self, f: RemainderFn) -> Self {
        self.remainder = Some(Remainder::Native(f));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self, i: usize) -> Option<&[Expr]> {
        i.checked_sub(1).and_then(|k| self.terms.get(k)).map(Vec::as_slice)
    }

    pub fn has_remainder(&self) -> bool {
        self.remainder.is_some()
    }

    fn check_periodic(&self, order: usize, comps: &[Expr]) -> Result<(), SpecError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let points: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..self.n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        for k in 0..8 {
            let t = 0.1 + k as f64 * self.period / 7.0;
            for x in &points {
                for (c, e) in comps.iter().enumerate() {
                    let (Ok(a), Ok(b)) = (e.eval(t, x), e.eval(t + self.period, x)) else {
                        continue;
                    };
                    let gap = (a - b).abs();
                    if gap > PERIODICITY_TOL * a.abs().max(1.0) {
                        return Err(SpecError::NotPeriodic {
                            order,
                            component: c + 1,
                            t,
                            gap,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn term_checked(&self, i: usize) -> Result<&[Expr], FieldError> {
        self.terms(i).ok_or(FieldError::TermIndex(i))
    }
}

fn check_vars(comps: &[Expr], n: usize, order: usize) -> Result<(), SpecError> {
    for (c, e) in comps.iter().enumerate() {
        let index = e.max_var();
        if index > n {
            return Err(SpecError::VarOutOfRange {
                order,
                component: c + 1,
                index,
                n,
            });
        }
    }
    Ok(())
}

impl PerturbedSystem for SystemSpec {
    fn dim(&self) -> usize {
        self.n
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn order(&self) -> usize {
        self.terms.len()
    }

    fn term(&self, i: usize, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        self.term_checked(i)?;
        for (o, e) in out.iter_mut().zip(&self.compiled[i - 1]) {
            *o = e.eval(t, x).map_err(eval_err)?;
        }
        Ok(())
    }

    fn term_derivative(
        &self,
        i: usize,
        t: f64,
        x: &[f64],
        dirs: &[&[f64]],
        out: &mut [f64],
    ) -> Result<(), FieldError> {
        let m = dirs.len();
        if m == 0 {
            return self.term(i, t, x, out);
        }
        self.term_checked(i)?;
        let table = self.tables[i - 1].get(m - 1).ok_or(FieldError::DerivativeOrder {
            requested: m,
            max: self.order(),
        })?;
        out.fill(0.0);
        if self.zero_terms[i - 1] {
            return Ok(());
        }
        let n = self.n;
        let mut values: Vec<Option<Vec<f64>>> = vec![None; table.exprs.len()];
        let mut tuple = vec![0usize; m];
        for (flat, &key) in table.tuple_key.iter().enumerate() {
            if table.zero[key] {
                continue;
            }
            let mut rem = flat;
            for slot in tuple.iter_mut().rev() {
                *slot = rem % n;
                rem /= n;
            }
            let w: f64 = tuple.iter().zip(dirs).map(|(&j, d)| d[j]).product();
            if w == 0.0 {
                continue;
            }
            if values[key].is_none() {
                let v = table.exprs[key]
                    .iter()
                    .map(|e| e.eval(t, x))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(eval_err)?;
                values[key] = Some(v);
            }
            let v = values[key].as_ref().expect("filled above");
            for (o, d) in out.iter_mut().zip(v) {
                *o += w * d;
            }
        }
        Ok(())
    }

    fn term_is_zero(&self, i: usize) -> bool {
        self.zero_terms.get(i.wrapping_sub(1)).copied().unwrap_or(false)
    }

    fn remainder(&self, t: f64, x: &[f64], eps: f64, out: &mut [f64]) -> Result<(), FieldError> {
        match &self.remainder {
            None => {
                out.fill(0.0);
                Ok(())
            }
            Some(Remainder::Native(f)) => {
                f(t, x, eps, out);
                if out.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(FieldError::NonFinite)
                }
            }
            Some(Remainder::Exprs(comps)) => {
                for (o, e) in out.iter_mut().zip(comps) {
                    *o = e.eval(t, x).map_err(eval_err)?;
                }
                Ok(())
            }
        }
    }
}

/// `∂ₓᵐ F_i(t, x)` applied to `m = dirs.len()` directions.
pub fn derivative_tensor<S: PerturbedSystem + ?Sized>(
    spec: &S,
    i: usize,
    t: f64,
    x: &[f64],
    dirs: &[&[f64]],
) -> Result<Vec<f64>, FieldError> {
    let mut out = vec![0.0; spec.dim()];
    spec.term_derivative(i, t, x, dirs, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysdsl::parse_expr;

    fn spec(n: usize, srcs: &[&[&str]]) -> SystemSpec {
        let terms = srcs
            .iter()
            .map(|c| c.iter().map(|s| parse_expr(s, n).unwrap()).collect())
            .collect();
        SystemSpec::new("test", n, 2.0 * std::f64::consts::PI, terms).unwrap()
    }

    #[test]
    fn tensor_examples() {
        let s = spec(2, &[&["x1", "x2"], &["x1^2", "0"]]);
        let d = [0.3, -0.7];
        assert_eq!(derivative_tensor(&s, 1, 0.0, &[1.0, 2.0], &[&d]).unwrap(), d.to_vec());
        let e = [1.0, 0.0];
        assert_eq!(derivative_tensor(&s, 1, 0.0, &[1.0, 2.0], &[&d, &e]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(derivative_tensor(&s, 2, 0.0, &[1.0, 2.0], &[&e, &e]).unwrap(), vec![2.0, 0.0]);
        assert!(matches!(
            derivative_tensor(&s, 2, 0.0, &[1.0, 2.0], &[&e, &e, &e]),
            Err(FieldError::DerivativeOrder { requested: 3, max: 2 })
        ));
        assert!(matches!(derivative_tensor(&s, 3, 0.0, &[1.0, 2.0], &[]), Err(FieldError::TermIndex(3))));
    }

    #[test]
    fn key_enumeration() {
        assert_eq!(sorted_keys(3, 2).len(), 6);
        assert_eq!(sorted_keys(2, 3), vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 1], vec![1, 1, 1]]);
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = vec![vec![parse_expr("t*x1", 1).unwrap()]];
        assert!(matches!(SystemSpec::new("p", 1, 1.0, bad), Err(SpecError::NotPeriodic { .. })));
        let wide = vec![vec![parse_expr("x2", 2).unwrap()]];
        assert!(matches!(SystemSpec::new("w", 1, 1.0, wide), Err(SpecError::VarOutOfRange { index: 2, .. })));
        assert_eq!(SystemSpec::new("z", 1, 0.0, vec![]).unwrap_err(), SpecError::Period(0.0));
        assert_eq!(SystemSpec::new("z", 1, 1.0, vec![]).unwrap_err(), SpecError::Order);
    }

    #[test]
    fn zero_terms_flagged() {
        let s = spec(2, &[&["0", "0"], &["sin(t)", "x1"]]);
        assert!(s.term_is_zero(1));
        assert!(!s.term_is_zero(2));
    }
}
