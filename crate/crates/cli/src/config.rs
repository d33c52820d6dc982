//! `--config FILE` expansion and config fingerprints.
//!
//! A config file is a flat TOML table whose keys are long flag names
//! (`eps-grid` or `eps_grid`). It may name the subcommand with
//! `command = "torus"`. Its entries are spliced into the argument list ahead of
//! the flags given on the command line. A flag given on the command line
//! replaces the file's entry for it, repeatable flags included.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::Value;

use avtorus_core::sysdsl::{parse_expr, Var};

use crate::error::CliError;

const SUBCOMMANDS: [&str; 5] = ["bell", "melnikov", "cycle", "torus", "fig1"];

fn positional(cmd: &str) -> &'static [&'static str] {
    match cmd {
        "bell" => &["n", "k", "args"],
        _ => &[],
    }
}

fn scalar(key: &str, v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(f.to_string()),
        Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(CliError::usage(format!("config key '{key}': expected a scalar"))),
    }
}

fn joined(key: &str, items: &[Value]) -> Result<String, CliError> {
    Ok(items.iter().map(|v| scalar(key, v)).collect::<Result<Vec<_>, _>>()?.join(","))
}

fn overridden(flag: &str, given: &[String]) -> bool {
    given
        .iter()
        .any(|a| a == flag || a.strip_prefix(flag).is_some_and(|r| r.starts_with('=')))
}

fn tokens(cmd: &str, table: toml::Table, given: &[String]) -> Result<Vec<String>, CliError> {
    let mut flags = Vec::new();
    let mut tail = Vec::new();
    for name in positional(cmd) {
        match table.get(*name) {
            Some(Value::Array(a)) => {
                for v in a {
                    tail.push(scalar(name, v)?);
                }
            }
            Some(v) => tail.push(scalar(name, v)?),
            None => {}
        }
    }
    for (key, value) in table {
        if positional(cmd).contains(&key.as_str()) {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if overridden(&flag, given) {
            continue;
        }
        match value {
            Value::Boolean(true) => flags.push(flag),
            Value::Boolean(false) => {}
            Value::Array(items) if items.iter().all(|v| matches!(v, Value::Array(_))) && !items.is_empty() => {
                for item in items {
                    let Value::Array(inner) = item else { unreachable!() };
                    flags.push(flag.clone());
                    flags.push(joined(&key, &inner)?);
                }
            }
            Value::Array(items) => {
                flags.push(flag);
                flags.push(joined(&key, &items)?);
            }
            Value::Table(_) | Value::Datetime(_) => {
                return Err(CliError::usage(format!("config key '{key}': unsupported value")));
            }
            v => {
                flags.push(flag);
                flags.push(scalar(&key, &v)?);
            }
        }
    }
    if !tail.is_empty() {
        flags.push("--".into());
        flags.extend(tail);
    }
    Ok(flags)
}

/// Replaces `--config FILE` in `args` by the flags it stands for.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    rest.extend(it.next());
    while let Some(a) = it.next() {
        if a == "--" {
            rest.push(a);
            rest.extend(it.by_ref());
            break;
        }
        let value = if a == "--config" {
            Some(it.next().ok_or_else(|| CliError::usage("--config needs a file"))?)
        } else {
            a.strip_prefix("--config=").map(str::to_owned)
        };
        match value {
            Some(_) if path.is_some() => return Err(CliError::usage("--config given twice")),
            Some(v) => path = Some(v),
            None => rest.push(a),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::usage(format!("cannot read {path}: {e}")))?;
    let mut table: toml::Table = text.parse().map_err(|e| CliError::usage(format!("{path}: {e}")))?;
    let named = match table.remove("command") {
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(CliError::usage("config key 'command' must be a string")),
        None => None,
    };
    let given = rest.get(1).filter(|a| SUBCOMMANDS.contains(&a.as_str())).cloned();
    let cmd = match (given, named) {
        (Some(g), Some(n)) if g != n => {
            return Err(CliError::usage(format!("config is for '{n}', command line says '{g}'")));
        }
        (Some(g), _) => {
            rest.remove(1);
            g
        }
        (None, Some(n)) => n,
        (None, None) => return Err(CliError::usage("no subcommand on the command line or in the config")),
    };
    let mut extra = tokens(&cmd, table, &rest[1..])?;
    // positional values from the file go last, after any flags from the command line
    let split = extra.iter().position(|t| t == "--").unwrap_or(extra.len());
    let tail = extra.split_off(split);
    let mut out = vec![rest.remove(0), cmd];
    out.extend(extra);
    out.extend(rest);
    out.extend(tail);
    Ok(out)
}

/// Hex SHA-256 of the canonical JSON form of a resolved config.
pub fn fingerprint<T: Serialize>(command: &str, config: &T) -> Result<String, CliError> {
    let value = serde_json::json!({ "command": command, "config": config });
    let canonical = serde_json::to_string(&sort_keys(value))?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

fn sort_keys(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value as J;
    match v {
        J::Object(m) => {
            let mut entries: Vec<_> = m.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            J::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        J::Array(a) => J::Array(a.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// A number or a constant expression such as `1/15` or `4*pi`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.parse::<f64>() {
        Ok(v) => v,
        Err(_) => {
            let e = parse_expr(s, 0).map_err(|e| format!("bad number '{s}': {e}"))?;
            if e.depends_on(Var::T) {
                return Err(format!("'{s}' is not a constant"));
            }
            e.eval(0.0, &[]).map_err(|e| format!("'{s}': {e}"))?
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_number).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_number("1/4"), Ok(0.25));
        assert_eq!(parse_number(" 2.5 "), Ok(2.5));
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("x").is_err());
        assert!(parse_number("t").is_err());
        assert_eq!(parse_number("4*pi"), Ok(4.0 * std::f64::consts::PI));
        assert_eq!(parse_list("1/2,3"), Ok(vec![0.5, 3.0]));
    }

    #[test]
    fn expansion() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "command = \"torus\"\neps_grid = [\"1/60\", \"1/30\"]\nprobe = true\nseeds = 4\n").unwrap();
        let args = expand(strings(&["avtorus", "--config", path.to_str().unwrap(), "--seeds", "2"])).unwrap();
        assert_eq!(args, strings(&["avtorus", "torus", "--eps-grid", "1/60,1/30", "--probe", "--seeds", "2"]));
        std::fs::write(&path, "n = 3\nk = 2\nargs = [1, 1]\n").unwrap();
        let args = expand(strings(&["avtorus", "bell", "--config", path.to_str().unwrap()])).unwrap();
        assert_eq!(args, strings(&["avtorus", "bell", "--", "3", "2", "1", "1"]));
        assert!(expand(strings(&["avtorus", "cycle", "--config", path.to_str().unwrap()])).is_ok());
        std::fs::write(&path, "command = \"fig1\"\n").unwrap();
        assert!(expand(strings(&["avtorus", "torus", "--config", path.to_str().unwrap()])).is_err());
    }

    #[test]
    fn fingerprint_ignores_key_order() {
        let a = serde_json::json!({"a": 1, "b": [1.5, 2.0]});
        let b = serde_json::json!({"b": [1.5, 2.0], "a": 1});
        assert_eq!(fingerprint("x", &a).unwrap(), fingerprint("x", &b).unwrap());
        assert_ne!(fingerprint("x", &a).unwrap(), fingerprint("y", &a).unwrap());
    }
}
