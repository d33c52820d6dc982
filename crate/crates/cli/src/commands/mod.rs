pub mod cycle;
pub mod fig1;
pub mod melnikov;
pub mod torus;

use avtorus_core::bell::{bell_eval, bell_eval_int, BellTable, SHARED_MAX_N};
use avtorus_core::example4d::{cylindrical_system, Example4DConfig};
use avtorus_core::sysdsl::{load_system, SystemSpec};

use crate::config::parse_number;
use crate::error::CliError;
use crate::{BellArgs, Source};

/// Largest `n` accepted by `bell`.
pub const BELL_MAX_N: usize = 40;

pub fn bell(a: BellArgs) -> Result<(), CliError> {
    if a.n > BELL_MAX_N {
        return Err(CliError::usage(format!("n = {} exceeds {BELL_MAX_N}", a.n)));
    }
    let ints: Option<Vec<i64>> = a.args.iter().map(|s| s.parse().ok()).collect();
    let text = match ints {
        Some(x) if a.n <= SHARED_MAX_N => bell_eval_int(a.n, a.k, &x).map_err(CliError::usage)?.to_string(),
        Some(x) => BellTable::new(a.n).eval_int(a.n, a.k, &x).map_err(CliError::usage)?.to_string(),
        None => {
            let x = a.args.iter().map(|s| parse_number(s)).collect::<Result<Vec<_>, _>>().map_err(CliError::usage)?;
            let v = if a.n <= SHARED_MAX_N {
                bell_eval(a.n, a.k, &x)
            } else {
                BellTable::new(a.n).eval(a.n, a.k, &x)
            };
            v.map_err(CliError::usage)?.to_string()
        }
    };
    println!("{text}");
    Ok(())
}

pub const BUILTIN_EXAMPLE: &str = "example4d";

/// Loads the system named by `--system` or `--builtin example4d`, recording
/// the file digest in `source`.
pub fn load(source: &mut Source) -> Result<SystemSpec, CliError> {
    match (&source.system, source.builtin.as_deref()) {
        (Some(path), _) => {
            source.system_sha256 = Some(crate::config::file_digest(path)?);
            Ok(load_system(path)?)
        }
        (None, Some(BUILTIN_EXAMPLE)) => Ok(cylindrical_system(&example(source)?)?),
        (None, Some(other)) => Err(CliError::usage(format!("unknown builtin '{other}' (known: {BUILTIN_EXAMPLE})"))),
        (None, None) => Err(CliError::usage("need --system FILE or --builtin NAME")),
    }
}

pub fn example(source: &Source) -> Result<Example4DConfig, CliError> {
    let cfg = Example4DConfig::new(source.big_n, source.mu);
    cfg.validate()?;
    Ok(cfg)
}
