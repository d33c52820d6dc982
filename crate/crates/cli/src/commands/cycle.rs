use nalgebra::DMatrix;
use serde::Serialize;

use avtorus_core::corenum::{IntegratorConfig, JacobianField, PerturbedSystem, QuadConfig};
use avtorus_core::example4d::{GuidingField, GUIDING_PERIOD};
use avtorus_core::guiding::{classify_stability, find_cycle, floquet_log, liouville_det, CycleConfig, FdJacobian, LimitCycle, Stability};
use avtorus_core::melnikov::{AveragedField, SampleBox};

use super::{example, BUILTIN_EXAMPLE};
use crate::config::fingerprint;
use crate::error::CliError;
use crate::output::{json, sink};
use crate::CycleArgs;

#[derive(Serialize)]
struct MultiplierRow {
    re: f64,
    im: f64,
    modulus: f64,
}

#[derive(Serialize)]
struct FloquetRow {
    doubled: bool,
    omega: f64,
    b: Vec<Vec<f64>>,
    roundtrip_error: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    schema: &'static str,
    fingerprint: String,
    config: &'a CycleArgs,
    omega: f64,
    anchor: Vec<f64>,
    multipliers: Vec<MultiplierRow>,
    trivial_index: usize,
    stability: Stability,
    hyperbolic: bool,
    residual: f64,
    iterations: usize,
    monodromy: Vec<Vec<f64>>,
    monodromy_det: f64,
    liouville_det: f64,
    floquet: Option<FloquetRow>,
    floquet_error: Option<String>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn solve<F: JacobianField>(g: &F, guess: &[f64], period: f64, cfg: &CycleConfig) -> Result<(LimitCycle, f64), CliError> {
    let cycle = find_cycle(g, guess, period, cfg)?;
    let det = liouville_det(g, &cycle, &cfg.integrator).map_err(|e| CliError::from(avtorus_core::guiding::CycleError::from(e)))?;
    Ok((cycle, det))
}

pub fn run(mut a: CycleArgs) -> Result<(), CliError> {
    let cfg = CycleConfig {
        integrator: IntegratorConfig::adaptive(a.tol_ode, a.tol_ode),
        tol: a.tol_newton,
        max_iter: a.max_iter,
    };
    let (cycle, liouville) = match (&a.source.system, a.source.builtin.as_deref()) {
        (None, Some(BUILTIN_EXAMPLE)) | (None, None) => {
            let ex = example(&a.source)?;
            a.source.builtin = Some(BUILTIN_EXAMPLE.into());
            let guess = a.guess.as_ref().map_or(vec![1.0, 1.0, 0.0], |g| g.0.clone());
            solve(&GuidingField::new(ex.mu), &guess, a.period.unwrap_or(GUIDING_PERIOD), &cfg)?
        }
        (Some(_), _) => {
            let sys = super::load(&mut a.source)?;
            let order = a.order.ok_or_else(|| CliError::usage("--system needs --order"))?;
            let guess = a.guess.as_ref().ok_or_else(|| CliError::usage("--system needs --guess"))?.0.clone();
            let period = a.period.ok_or_else(|| CliError::usage("--system needs --period"))?;
            if guess.len() != sys.dim() {
                return Err(CliError::usage(format!("--guess needs {} components", sys.dim())));
            }
            let (lo, hi) = match &a.check_box {
                Some(b) if b.0.len() != sys.dim() => return Err(CliError::usage("--check-box has the wrong dimension")),
                Some(b) => b.0.iter().copied().unzip(),
                None => guess.iter().map(|v| (v - 1.0, v + 1.0)).unzip(),
            };
            let mut samples = SampleBox::new(lo, hi);
            samples.per_dim = a.check_points;
            samples.tol = a.tol_vanish;
            let g = AveragedField::new(&sys, order, &QuadConfig::default(), &samples)?;
            solve(&FdJacobian::new(g), &guess, period, &cfg)?
        }
        (None, Some(other)) => return Err(CliError::usage(format!("unknown builtin '{other}'"))),
    };
    let (floquet, floquet_error) = match floquet_log(&cycle) {
        Ok(f) => (
            Some(FloquetRow {
                doubled: f.doubled,
                omega: f.omega,
                roundtrip_error: f.roundtrip_error(&cycle.monodromy),
                b: rows(&f.b),
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = Report {
        schema: "avtorus.cycle.v1",
        fingerprint: fingerprint("cycle", &a)?,
        config: &a,
        omega: cycle.omega,
        anchor: cycle.anchor.clone(),
        multipliers: cycle
            .multipliers
            .iter()
            .map(|m| MultiplierRow {
                re: m.re,
                im: m.im,
                modulus: m.modulus(),
            })
            .collect(),
        trivial_index: cycle.trivial_index,
        stability: classify_stability(&cycle),
        hyperbolic: cycle.hyperbolic,
        residual: cycle.residual,
        iterations: cycle.iterations,
        monodromy: rows(&cycle.monodromy),
        monodromy_det: cycle.monodromy.determinant(),
        liouville_det: liouville,
        floquet,
        floquet_error,
    };
    json(sink(a.out.as_deref())?, &report)
}
