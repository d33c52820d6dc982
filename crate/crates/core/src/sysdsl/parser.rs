//! Recursive-descent parser.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' '-'? integer)?
//! atom  := number | 't' | 'pi' | 'x'k | func '(' expr ')' | '(' expr ')'
//! func  := 'sin' | 'cos' | 'exp'
//! ```

use thiserror::Error;

use super::expr::{Expr, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token '{0}'")]
    UnexpectedToken(String),
    #[error("malformed number '{0}'")]
    BadNumber(String),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("variable index out of range: x{index} (dimension {n})")]
    VarOutOfRange { index: usize, n: usize },
    #[error("exponent must be an integer literal")]
    BadExponent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, String),
    Ident(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value = text.parse::<f64>().map_err(|_| ParseError {
                kind: ParseErrorKind::BadNumber(text.to_string()),
                offset: start,
            })?;
            out.push((Tok::Num(value, text.to_string()), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or(c);
            return Err(ParseError {
                kind: ParseErrorKind::UnexpectedChar(ch),
                offset: i,
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            offset: self.offset(),
        }
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            None => self.err(ParseErrorKind::UnexpectedEnd),
            Some(Tok::Num(_, s)) | Some(Tok::Ident(s)) => self.err(ParseErrorKind::UnexpectedToken(s.clone())),
            Some(Tok::Sym(c)) => self.err(ParseErrorKind::UnexpectedToken(c.to_string())),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let negative = self.eat('-');
        let k = match self.peek() {
            Some(Tok::Num(v, text)) if !text.contains(['.', 'e', 'E']) && *v <= i32::MAX as f64 => *v as i32,
            None => return Err(self.err(ParseErrorKind::UnexpectedEnd)),
            _ => return Err(self.err(ParseErrorKind::BadExponent)),
        };
        self.pos += 1;
        Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        let tok = self.peek().cloned().ok_or_else(|| self.err(ParseErrorKind::UnexpectedEnd))?;
        match tok {
            Tok::Num(v, _) => {
                self.pos += 1;
                Ok(Expr::Lit(v))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Sym(_) => Err(self.unexpected()),
            Tok::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "t" => Ok(Expr::Var(Var::T)),
                    "pi" => Ok(Expr::Pi),
                    "sin" | "cos" | "exp" => {
                        self.expect('(')?;
                        let arg = Box::new(self.expr()?);
                        self.expect(')')?;
                        Ok(match name.as_str() {
                            "sin" => Expr::Sin(arg),
                            "cos" => Expr::Cos(arg),
                            _ => Expr::Exp(arg),
                        })
                    }
                    _ => self.variable(&name, offset),
                }
            }
        }
    }

    fn variable(&self, name: &str, offset: usize) -> Result<Expr, ParseError> {
        let digits = name.strip_prefix('x').filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()));
        let Some(digits) = digits else {
            return Err(ParseError {
                kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
                offset,
            });
        };
        let index = digits.parse::<usize>().unwrap_or(usize::MAX);
        if index == 0 || index > self.n {
            return Err(ParseError {
                kind: ParseErrorKind::VarOutOfRange { index, n: self.n },
                offset,
            });
        }
        Ok(Expr::Var(Var::X(index)))
    }
}

/// Parses `src` over the variables `t, x1..xn`.
pub fn parse_expr(src: &str, n: usize) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Empty,
            offset: 0,
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.len(),
        n,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.unexpected());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn structure() {
        let e = parse_expr("x1*cos(t) + 2", 2).unwrap();
        assert_eq!(
            e,
            Expr::Add(
                b(Expr::Mul(b(Expr::x(1)), b(Expr::Cos(b(Expr::Var(Var::T)))))),
                b(Expr::Lit(2.0))
            )
        );
        let e = parse_expr("-x1^2", 1).unwrap();
        assert_eq!(e, Expr::Neg(b(Expr::Pow(b(Expr::x(1)), 2))));
        assert_eq!(e.eval(0.0, &[2.0]).unwrap(), -4.0);
    }

    #[test]
    fn associativity_and_whitespace() {
        let e = parse_expr("8/4/2", 0).unwrap();
        assert_eq!(e.eval(0.0, &[]).unwrap(), 1.0);
        let e = parse_expr("  1-2 -   3", 0).unwrap();
        assert_eq!(e.eval(0.0, &[]).unwrap(), -4.0);
        assert_eq!(parse_expr("x1^-2", 1).unwrap(), Expr::Pow(b(Expr::x(1)), -2));
        assert_eq!(parse_expr("2*-x1", 1).unwrap().eval(0.0, &[3.0]).unwrap(), -6.0);
        assert_eq!(parse_expr("1.5e-3", 0).unwrap(), Expr::Lit(1.5e-3));
    }

    #[test]
    fn errors_have_offsets() {
        let e = parse_expr("x3", 2).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::VarOutOfRange { index: 3, n: 2 });
        assert_eq!(e.offset, 0);
        let e = parse_expr("1 + foo", 2).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        assert_eq!(e.offset, 4);
        let e = parse_expr("x1 + ", 2).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(e.offset, 5);
        assert_eq!(parse_expr("x0", 2).unwrap_err().kind, ParseErrorKind::VarOutOfRange { index: 0, n: 2 });
        assert_eq!(parse_expr("x1^1.5", 2).unwrap_err().kind, ParseErrorKind::BadExponent);
        assert_eq!(parse_expr("(x1", 2).unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(parse_expr("x1 x2", 2).unwrap_err().offset, 3);
        assert_eq!(parse_expr("x1 $", 2).unwrap_err().kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!(parse_expr("   ", 2).unwrap_err().kind, ParseErrorKind::Empty);
    }

    #[test]
    fn evaluation_examples() {
        let pi = std::f64::consts::PI;
        assert_eq!(parse_expr("sin(t)", 1).unwrap().eval(0.0, &[0.0]).unwrap(), 0.0);
        assert_eq!(parse_expr("x1^3", 1).unwrap().eval(0.0, &[2.0]).unwrap(), 8.0);
        let v = parse_expr("x1*cos(t)+x2", 2).unwrap().eval(pi, &[3.0, 1.0]).unwrap();
        assert!((v + 2.0).abs() < 1e-15);
    }

    #[test]
    fn print_parse_fixed_point() {
        for src in ["x1*cos(t) + 2", "-(x1 - x2)^3/exp(-t)", "1 - (2 - 3)", "--x1", "x1/(x2*x3)", "0.125*pi^2"] {
            let a = parse_expr(src, 3).unwrap();
            let b = parse_expr(&a.to_string(), 3).unwrap();
            assert_eq!(a, b, "{src} -> {a}");
        }
    }
}
