use super::expr::{Expr, Var};

/// Exact symbolic derivative `∂e/∂v`.
pub fn diff_expr(e: &Expr, v: Var) -> Expr {
    if !e.depends_on(v) {
        return Expr::lit(0.0);
    }
    match e {
        Expr::Lit(_) | Expr::Pi => Expr::lit(0.0),
        Expr::Var(w) => Expr::lit(if *w == v { 1.0 } else { 0.0 }),
        Expr::Neg(a) => Expr::neg(diff_expr(a, v)),
        Expr::Add(a, b) => Expr::add(diff_expr(a, v), diff_expr(b, v)),
        Expr::Sub(a, b) => Expr::sub(diff_expr(a, v), diff_expr(b, v)),
        Expr::Mul(a, b) => Expr::add(
            Expr::mul(diff_expr(a, v), (**b).clone()),
            Expr::mul((**a).clone(), diff_expr(b, v)),
        ),
        Expr::Div(a, b) => {
            let da = diff_expr(a, v);
            let db = diff_expr(b, v);
            if db.is_zero() {
                return Expr::div(da, (**b).clone());
            }
            Expr::div(
                Expr::sub(Expr::mul(da, (**b).clone()), Expr::mul((**a).clone(), db)),
                Expr::pow((**b).clone(), 2),
            )
        }
        Expr::Pow(a, k) => Expr::mul(
            Expr::mul(Expr::lit(*k as f64), Expr::pow((**a).clone(), k - 1)),
            diff_expr(a, v),
        ),
        Expr::Sin(a) => Expr::mul(Expr::cos((**a).clone()), diff_expr(a, v)),
        Expr::Cos(a) => Expr::neg(Expr::mul(Expr::sin((**a).clone()), diff_expr(a, v))),
        Expr::Exp(a) => Expr::mul(Expr::exp((**a).clone()), diff_expr(a, v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysdsl::parse_expr;

    #[test]
    fn examples() {
        let e = parse_expr("x1^2", 2).unwrap();
        assert_eq!(diff_expr(&e, Var::X(1)).to_string(), "2*x1");
        let e = parse_expr("sin(x1)", 2).unwrap();
        assert_eq!(diff_expr(&e, Var::X(2)).to_string(), "0");
        let e = parse_expr("x1*cos(t)", 2).unwrap();
        let d = diff_expr(&e, Var::X(1));
        assert_eq!(d.eval(0.0, &[0.3, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn quotient_and_chain() {
        let e = parse_expr("exp(x1*x2)/(1 + x1^2)", 2).unwrap();
        let d = diff_expr(&e, Var::X(1));
        let (a, b) = (0.7, -0.4);
        let den: f64 = 1.0 + a * a;
        let expect = (b * (a * b).exp() * den - (a * b).exp() * 2.0 * a) / den.powi(2);
        assert!((d.eval(0.0, &[a, b]).unwrap() - expect).abs() < 1e-14);
        let dt = diff_expr(&parse_expr("cos(2*t)", 0).unwrap(), Var::T);
        assert!((dt.eval(0.3, &[]).unwrap() + 2.0 * 0.6f64.sin()).abs() < 1e-15);
    }
}
