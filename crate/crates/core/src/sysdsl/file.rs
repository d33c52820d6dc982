//! TOML system definitions.
//!
//! ```toml
//! name = "forced oscillator"   # optional
//! n = 2                        # dimension
//! T = "2*pi"                   # period: number or constant expression
//! N = 2                        # truncation order
//! F1 = ["x2", "-x1 + cos(t)"]  # n expressions per order; missing orders are zero
//! F2 = ["0", "x1^2"]
//! remainder = ["0", "0"]       # optional, independent of eps
//! ```
//!
//! Any other key is rejected.

use std::path::Path;

use thiserror::Error;

use super::expr::Expr;
use super::parser::{parse_expr, ParseError};
use super::system::{SpecError, SystemSpec};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid TOML: {0}")]
    Toml(String),
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("missing key '{0}'")]
    MissingKey(&'static str),
    #[error("key '{key}': {msg}")]
    BadValue { key: String, msg: String },
    #[error("{key}[{index}]: {source}")]
    Expr {
        key: String,
        index: usize,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

fn bad(key: &str, msg: impl Into<String>) -> FileError {
    FileError::BadValue {
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn positive_int(table: &toml::Table, key: &'static str) -> Result<usize, FileError> {
    let v = table.get(key).ok_or(FileError::MissingKey(key))?;
    match v.as_integer() {
        Some(k) if k >= 1 => Ok(k as usize),
        _ => Err(bad(key, "expected a positive integer")),
    }
}

fn expr_list(table: &toml::Table, key: &str, n: usize) -> Result<Vec<Expr>, FileError> {
    let arr = table[key].as_array().ok_or_else(|| bad(key, "expected an array of strings"))?;
    if arr.len() != n {
        return Err(bad(key, format!("expected {n} expressions, got {}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            let src = v.as_str().ok_or_else(|| bad(key, "expected an array of strings"))?;
            parse_expr(src, n).map_err(|source| FileError::Expr {
                key: key.to_string(),
                index: i,
                source,
            })
        })
        .collect()
}

/// Parses a system definition from TOML text.
pub fn parse_system(text: &str) -> Result<SystemSpec, FileError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| FileError::Toml(e.to_string()))?;
    let n = positive_int(&table, "n")?;
    let big_n = positive_int(&table, "N")?;
    for key in table.keys() {
        let known = matches!(key.as_str(), "name" | "n" | "T" | "N" | "remainder")
            || key
                .strip_prefix('F')
                .and_then(|d| d.parse::<usize>().ok())
                .is_some_and(|i| (1..=big_n).contains(&i) && key == &format!("F{i}"));
        if !known {
            return Err(FileError::UnknownKey(key.clone()));
        }
    }
    let name = match table.get("name") {
        None => "system".to_string(),
        Some(v) => v.as_str().ok_or_else(|| bad("name", "expected a string"))?.to_string(),
    };
    let period = match table.get("T").ok_or(FileError::MissingKey("T"))? {
        toml::Value::Float(v) => *v,
        toml::Value::Integer(v) => *v as f64,
        toml::Value::String(s) => parse_expr(s, 0)
            .map_err(|source| FileError::Expr {
                key: "T".into(),
                index: 0,
                source,
            })?
            .eval(0.0, &[])
            .map_err(|e| bad("T", e.to_string()))?,
        _ => return Err(bad("T", "expected a number or expression string")),
    };
    let mut terms = Vec::with_capacity(big_n);
    for i in 1..=big_n {
        let key = format!("F{i}");
        if table.contains_key(&key) {
            terms.push(expr_list(&table, &key, n)?);
        } else {
            terms.push(vec![Expr::lit(0.0); n]);
        }
    }
    let spec = SystemSpec::new(name, n, period, terms)?;
    if table.contains_key("remainder") {
        Ok(spec.with_remainder(expr_list(&table, "remainder", n)?)?)
    } else {
        Ok(spec)
    }
}

pub fn load_system(path: &Path) -> Result<SystemSpec, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_system(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corenum::PerturbedSystem;

    const GOOD: &str = r#"
name = "demo"
n = 2
T = "2*pi"
N = 2
F1 = ["x2", "-x1 + cos(t)"]
"#;

    #[test]
    fn loads() {
        let s = parse_system(GOOD).unwrap();
        assert_eq!(s.name(), "demo");
        assert_eq!(s.order(), 2);
        assert!((s.period() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!(s.term_is_zero(2));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let extra = format!("{GOOD}\ncolour = 3\n");
        assert!(matches!(parse_system(&extra), Err(FileError::UnknownKey(k)) if k == "colour"));
        let beyond = format!("{GOOD}\nF3 = [\"0\", \"0\"]\n");
        assert!(matches!(parse_system(&beyond), Err(FileError::UnknownKey(k)) if k == "F3"));
        let padded = format!("{GOOD}\nF01 = [\"0\", \"0\"]\n");
        assert!(matches!(parse_system(&padded), Err(FileError::UnknownKey(_))));
        let short = GOOD.replace("\"-x1 + cos(t)\"", "");
        assert!(matches!(parse_system(&short), Err(FileError::BadValue { .. })));
        let bad_var = GOOD.replace("x2", "x5");
        assert!(matches!(parse_system(&bad_var), Err(FileError::Expr { .. })));
        assert!(matches!(parse_system("n = 1\nN = 1\n"), Err(FileError::MissingKey("T"))));
    }
}
