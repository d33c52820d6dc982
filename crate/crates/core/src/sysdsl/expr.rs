use std::fmt;

use thiserror::Error;

/// A variable: time `t` or a state component `x1..xn` (stored 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X(k) => write!(f, "x{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
    #[error("variable x{index} not supplied (state has {len} components)")]
    MissingVar { index: usize, len: usize },
}

impl Expr {
    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    pub fn x(k: usize) -> Self {
        Expr::Var(Var::X(k))
    }

    pub fn lit(v: f64) -> Self {
        Expr::Lit(v)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Lit(v) if *v == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Lit(v) if *v == 1.0)
    }

    fn as_lit(&self) -> Option<f64> {
        match self {
            Expr::Lit(v) => Some(*v),
            _ => None,
        }
    }

    // Simplifying constructors. Only trivial identities and literal folding.

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_lit(), b.as_lit()) {
            (Some(x), Some(y)) => Expr::Lit(x + y),
            _ if a.is_zero() => b,
            _ if b.is_zero() => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_lit(), b.as_lit()) {
            (Some(x), Some(y)) => Expr::Lit(x - y),
            _ if b.is_zero() => a,
            _ if a.is_zero() => Expr::neg(b),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_lit(), b.as_lit()) {
            (Some(x), Some(y)) => Expr::Lit(x * y),
            _ if a.is_zero() || b.is_zero() => Expr::Lit(0.0),
            _ if a.is_one() => b,
            _ if b.is_one() => a,
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return Expr::Lit(0.0);
        }
        if b.is_one() {
            return a;
        }
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Lit(v) => Expr::Lit(-v),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn pow(a: Expr, k: i32) -> Expr {
        match k {
            0 => Expr::Lit(1.0),
            1 => a,
            _ => match a.as_lit() {
                Some(v) => Expr::Lit(v.powi(k)),
                None => Expr::Pow(Box::new(a), k),
            },
        }
    }

    pub fn sin(a: Expr) -> Expr {
        match a.as_lit() {
            Some(v) => Expr::Lit(v.sin()),
            None => Expr::Sin(Box::new(a)),
        }
    }

    pub fn cos(a: Expr) -> Expr {
        match a.as_lit() {
            Some(v) => Expr::Lit(v.cos()),
            None => Expr::Cos(Box::new(a)),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match a.as_lit() {
            Some(v) => Expr::Lit(v.exp()),
            None => Expr::Exp(Box::new(a)),
        }
    }

    /// Evaluates with `x[k-1]` bound to `xk`.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_raw(t, x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_raw(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Lit(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::X(k)) => *x.get(k - 1).ok_or(EvalError::MissingVar {
                index: *k,
                len: x.len(),
            })?,
            Expr::Neg(a) => -a.eval_raw(t, x)?,
            Expr::Add(a, b) => a.eval_raw(t, x)? + b.eval_raw(t, x)?,
            Expr::Sub(a, b) => a.eval_raw(t, x)? - b.eval_raw(t, x)?,
            Expr::Mul(a, b) => a.eval_raw(t, x)? * b.eval_raw(t, x)?,
            Expr::Div(a, b) => {
                let den = b.eval_raw(t, x)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval_raw(t, x)? / den
            }
            Expr::Pow(a, k) => {
                let base = a.eval_raw(t, x)?;
                if base == 0.0 && *k < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                base.powi(*k)
            }
            Expr::Sin(a) => a.eval_raw(t, x)?.sin(),
            Expr::Cos(a) => a.eval_raw(t, x)?.cos(),
            Expr::Exp(a) => a.eval_raw(t, x)?.exp(),
        })
    }

    /// Largest state index referenced, 0 if none.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Var(Var::X(k)) => *k,
            Expr::Lit(_) | Expr::Pi | Expr::Var(Var::T) => 0,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// True when `v` occurs anywhere in the expression.
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Var(w) => *w == v,
            Expr::Lit(_) | Expr::Pi => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.depends_on(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    /// Replaces every variable through `f`, rebuilding with the simplifying
    /// constructors.
    pub fn substitute(&self, f: &impl Fn(Var) -> Expr) -> Expr {
        match self {
            Expr::Var(v) => f(*v),
            Expr::Lit(_) | Expr::Pi => self.clone(),
            Expr::Neg(a) => Expr::neg(a.substitute(f)),
            Expr::Add(a, b) => Expr::add(a.substitute(f), b.substitute(f)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(f), b.substitute(f)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(f), b.substitute(f)),
            Expr::Div(a, b) => Expr::div(a.substitute(f), b.substitute(f)),
            Expr::Pow(a, k) => Expr::pow(a.substitute(f), *k),
            Expr::Sin(a) => Expr::sin(a.substitute(f)),
            Expr::Cos(a) => Expr::cos(a.substitute(f)),
            Expr::Exp(a) => Expr::exp(a.substitute(f)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Lit(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Lit(v) if *v < 0.0 => write!(f, "-{}", -v),
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_at(f, 3)
            }
            Expr::Add(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " + ")?;
                b.fmt_at(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " - ")?;
                b.fmt_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "*")?;
                b.fmt_at(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "/")?;
                b.fmt_at(f, 3)
            }
            Expr::Pow(a, k) => {
                a.fmt_at(f, 5)?;
                write!(f, "^{k}")
            }
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_simplify() {
        let x = Expr::x(1);
        assert_eq!(Expr::mul(Expr::lit(0.0), x.clone()), Expr::lit(0.0));
        assert_eq!(Expr::mul(Expr::lit(1.0), x.clone()), x);
        assert_eq!(Expr::add(x.clone(), Expr::lit(0.0)), x);
        assert_eq!(Expr::neg(Expr::neg(x.clone())), x);
        assert_eq!(Expr::pow(x.clone(), 0), Expr::lit(1.0));
        assert_eq!(Expr::add(Expr::lit(2.0), Expr::lit(3.0)), Expr::lit(5.0));
    }

    #[test]
    fn display() {
        let e = Expr::add(
            Expr::mul(Expr::x(1), Expr::cos(Expr::var(Var::T))),
            Expr::lit(2.0),
        );
        assert_eq!(e.to_string(), "x1*cos(t) + 2");
        let e = Expr::Sub(
            Box::new(Expr::x(1)),
            Box::new(Expr::Sub(Box::new(Expr::x(2)), Box::new(Expr::x(3)))),
        );
        assert_eq!(e.to_string(), "x1 - (x2 - x3)");
        let e = Expr::Pow(Box::new(Expr::Neg(Box::new(Expr::x(1)))), 2);
        assert_eq!(e.to_string(), "(-x1)^2");
    }

    #[test]
    fn eval_errors() {
        let e = Expr::div(Expr::lit(1.0), Expr::x(1));
        assert_eq!(e.eval(0.0, &[0.0]), Err(EvalError::DivisionByZero));
        let e = Expr::exp(Expr::x(1));
        assert_eq!(e.eval(0.0, &[1e4]), Err(EvalError::NonFinite));
        assert!(matches!(Expr::x(3).eval(0.0, &[1.0]), Err(EvalError::MissingVar { .. })));
    }
}
