//! Expression language for user-defined periodic vector fields.

mod compiled;
mod diff;
mod expr;
mod file;
mod parser;
mod system;

pub use compiled::Compiled;
pub use diff::diff_expr;
pub use expr::{EvalError, Expr, Var};
pub use file::{load_system, parse_system, FileError};
pub use parser::{parse_expr, ParseError, ParseErrorKind};
pub use system::{derivative_tensor, RemainderFn, SpecError, SystemSpec, PERIODICITY_TOL};

/// Evaluates `e` at `(t, x)`.
pub fn eval_expr(e: &Expr, t: f64, x: &[f64]) -> Result<f64, EvalError> {
    e.eval(t, x)
}
