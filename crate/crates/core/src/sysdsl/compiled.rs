use super::expr::{EvalError, Expr, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Lit(f64),
    T,
    X(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(i32),
    Sin,
    Cos,
    Exp,
}

/// An [`Expr`] flattened to postfix form for fast repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    ops: Vec<Op>,
    depth: usize,
    max_var: usize,
}

const INLINE: usize = 16;

impl Compiled {
    pub fn new(e: &Expr) -> Self {
        let mut ops = Vec::new();
        emit(e, &mut ops);
        let mut depth = 0usize;
        let mut cur = 0usize;
        for op in &ops {
            match op {
                Op::Lit(_) | Op::T | Op::X(_) => cur += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div => cur -= 1,
                _ => {}
            }
            depth = depth.max(cur);
        }
        Self {
            ops,
            depth,
            max_var: e.max_var(),
        }
    }

    /// Same result and errors as [`Expr::eval`].
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        if let [Op::Lit(v)] = self.ops[..] {
            return Ok(v);
        }
        if self.max_var > x.len() {
            return Err(EvalError::MissingVar {
                index: self.max_var,
                len: x.len(),
            });
        }
        let v = if self.depth <= INLINE {
            run(&self.ops, t, x, &mut [0.0; INLINE])?
        } else {
            run(&self.ops, t, x, &mut vec![0.0; self.depth])?
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    let bin = |a: &Expr, b: &Expr, op: Op, ops: &mut Vec<Op>| {
        emit(a, ops);
        emit(b, ops);
        ops.push(op);
    };
    match e {
        Expr::Lit(v) => ops.push(Op::Lit(*v)),
        Expr::Pi => ops.push(Op::Lit(std::f64::consts::PI)),
        Expr::Var(Var::T) => ops.push(Op::T),
        Expr::Var(Var::X(k)) => ops.push(Op::X(k - 1)),
        Expr::Add(a, b) => bin(a, b, Op::Add, ops),
        Expr::Sub(a, b) => bin(a, b, Op::Sub, ops),
        Expr::Mul(a, b) => bin(a, b, Op::Mul, ops),
        Expr::Div(a, b) => bin(a, b, Op::Div, ops),
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => {
            emit(a, ops);
            ops.push(match e {
                Expr::Neg(_) => Op::Neg,
                Expr::Pow(_, k) => Op::Pow(*k),
                Expr::Sin(_) => Op::Sin,
                Expr::Cos(_) => Op::Cos,
                _ => Op::Exp,
            });
        }
    }
}

fn run(ops: &[Op], t: f64, x: &[f64], stack: &mut [f64]) -> Result<f64, EvalError> {
    let mut sp = 0usize;
    for op in ops {
        match *op {
            Op::Lit(v) => {
                stack[sp] = v;
                sp += 1;
            }
            Op::T => {
                stack[sp] = t;
                sp += 1;
            }
            Op::X(k) => {
                stack[sp] = x[k];
                sp += 1;
            }
            Op::Neg => stack[sp - 1] = -stack[sp - 1],
            Op::Sin => stack[sp - 1] = stack[sp - 1].sin(),
            Op::Cos => stack[sp - 1] = stack[sp - 1].cos(),
            Op::Exp => stack[sp - 1] = stack[sp - 1].exp(),
            Op::Pow(k) => {
                let b = stack[sp - 1];
                if b == 0.0 && k < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                stack[sp - 1] = match k {
                    2 => b * b,
                    3 => b * b * b,
                    4 => (b * b) * (b * b),
                    _ => b.powi(k),
                };
            }
            Op::Add | Op::Sub | Op::Mul | Op::Div => {
                sp -= 1;
                let (a, b) = (stack[sp - 1], stack[sp]);
                stack[sp - 1] = match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    _ => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                };
            }
        }
    }
    Ok(stack[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysdsl::parse_expr;

    #[test]
    fn agrees_with_tree() {
        for src in ["x1*cos(t) + 2", "-(x2 - x1)^3/(1 + x1^2)", "exp(sin(x1*t))*pi", "x1/(x2 - x2)", "0^-1"] {
            let e = parse_expr(src, 2).unwrap();
            let c = Compiled::new(&e);
            for &(t, a, b) in &[(0.3, 1.2, -0.7), (2.0, -0.1, 0.4)] {
                assert_eq!(c.eval(t, &[a, b]), e.eval(t, &[a, b]), "{src}");
            }
        }
        let e = parse_expr("x2", 2).unwrap();
        assert!(matches!(Compiled::new(&e).eval(0.0, &[1.0]), Err(EvalError::MissingVar { .. })));
    }

    #[test]
    fn small_powers() {
        for k in -3..=6 {
            let e = Expr::Pow(Box::new(Expr::x(1)), k);
            let v = Compiled::new(&e).eval(0.0, &[1.7]).unwrap();
            assert!((v - 1.7f64.powi(k)).abs() < 1e-14 * v.abs());
        }
    }

    #[test]
    fn deep_expression() {
        let mut e = Expr::x(1);
        for _ in 0..50 {
            e = Expr::Add(Box::new(Expr::x(1)), Box::new(e));
        }
        assert_eq!(Compiled::new(&e).eval(0.0, &[1.0]), Ok(51.0));
    }
}
