use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use avtorus_core::corenum::{FullField, IntegratorConfig, PerturbedSystem};
use avtorus_core::example4d::{
    cycle_trace, guiding_frame, theta_map, torus_at, Example4DConfig, Example4DError, TorusRunConfig,
};
use avtorus_core::toruslab::{
    detect_torus, fit_curve, rotation_number, stability_probe, ClosedCurve, DetectConfig, DetectError, FitOptions,
    ProbeConfig, ProbeReport, RotationEstimate, StroboscopicMap, TorusEstimate, MIN_ITERATES,
};

use super::{load, BUILTIN_EXAMPLE};
use crate::config::fingerprint;
use crate::error::{CliError, Kind};
use crate::output::{csv_head, json, num, out_dir, sink};
use crate::TorusArgs;

#[derive(Serialize)]
struct Row {
    eps: f64,
    status: String,
    invariance_residual: Option<f64>,
    distance_to_unperturbed: Option<f64>,
    rotation_number: Option<f64>,
    rotation_lifted: Option<f64>,
    rotation_error: Option<f64>,
    rotation_iterates: Option<usize>,
    iterates_used: Option<usize>,
    surviving_seeds: Option<usize>,
    /// Slope of log harmonic amplitude of the fitted curve, a smoothness diagnostic.
    harmonic_decay: Option<f64>,
    transient: usize,
    keep: usize,
    probe: Option<ProbeReport>,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: &'static str,
    fingerprint: String,
    rng_seed: u64,
    config: &'a TorusArgs,
    /// Least-squares slope of log(distance) against log(eps).
    distance_slope: Option<f64>,
    rows: Vec<Row>,
}

/// Harmonics below this amplitude are left out of the decay fit.
const DECAY_FLOOR: f64 = 1e-13;

const HEADER: [&str; 16] = [
    "eps",
    "status",
    "invariance_residual",
    "distance_to_unperturbed",
    "rotation_number",
    "rotation_lifted",
    "rotation_error",
    "rotation_iterates",
    "iterates_used",
    "surviving_seeds",
    "transient",
    "keep",
    "probe_attracted",
    "probe_escaped",
    "probe_approached",
    "probe_class",
];

fn cell<T: std::fmt::Debug>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| format!("{v:?}"))
}

impl Row {
    fn new(eps: f64, transient: usize, keep: usize) -> Self {
        Self {
            eps,
            status: String::new(),
            invariance_residual: None,
            distance_to_unperturbed: None,
            rotation_number: None,
            rotation_lifted: None,
            rotation_error: None,
            rotation_iterates: None,
            iterates_used: None,
            surviving_seeds: None,
            harmonic_decay: None,
            transient,
            keep,
            probe: None,
        }
    }

    fn fill(&mut self, e: &TorusEstimate, r: &RotationEstimate) {
        self.status = "ok".into();
        self.invariance_residual = Some(e.invariance_residual);
        self.distance_to_unperturbed = e.distance_to_unperturbed;
        self.rotation_number = Some(r.rho);
        self.rotation_lifted = Some(r.lifted);
        self.rotation_error = Some(r.error);
        self.rotation_iterates = Some(r.iterates);
        self.iterates_used = Some(e.iterates_used);
        self.surviving_seeds = Some(e.surviving_seeds);
        self.harmonic_decay = e.curve.harmonic_decay(DECAY_FLOOR);
    }

    fn csv(&self) -> String {
        let p = self.probe.as_ref();
        let class = p.map(|p| serde_json::to_value(p.classification).ok().and_then(|v| v.as_str().map(str::to_owned)));
        [
            num(self.eps),
            self.status.clone(),
            cell(self.invariance_residual),
            cell(self.distance_to_unperturbed),
            cell(self.rotation_number),
            cell(self.rotation_lifted),
            cell(self.rotation_error),
            cell(self.rotation_iterates),
            cell(self.iterates_used),
            cell(self.surviving_seeds),
            self.transient.to_string(),
            self.keep.to_string(),
            cell(p.map(|p| p.fraction_attracted)),
            cell(p.map(|p| p.fraction_escaped)),
            cell(p.map(|p| p.fraction_approached)),
            class.flatten().unwrap_or_default(),
        ]
        .join(",")
    }
}

/// Status for a failed detection, or the error when the failure must abort
/// the sweep.
fn status(e: CliError) -> Result<String, CliError> {
    match e.kind {
        Kind::Solver => Ok(format!("failed: {}", e.msg.replace(',', ";"))),
        _ => Err(e),
    }
}

fn probe_cfg(a: &TorusArgs) -> ProbeConfig {
    ProbeConfig {
        radius: a.radius,
        trials: a.trials,
        horizon: a.horizon,
        rng_seed: a.rng_seed,
        ..ProbeConfig::default()
    }
}

fn slope(rows: &[Row]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.distance_to_unperturbed.filter(|d| *d > 0.0 && r.eps > 0.0).map(|d| (r.eps.ln(), d.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

// Iterate counts become slow-time budgets that round back to the same count.
fn slow_time(count: usize, ex: &Example4DConfig, eps: f64) -> f64 {
    (count as f64 - 0.5) * 2.0 * PI * eps.powi(ex.big_n as i32 + 1)
}

fn builtin_row(a: &TorusArgs, ex: &Example4DConfig, eps: f64, trace: &ClosedCurve) -> Result<Row, CliError> {
    let mut run = TorusRunConfig {
        steps: a.steps,
        seeds: a.seeds,
        transient_time: a.transient_time,
        keep_time: a.keep_time,
        rotation_time: a.rotation_time,
        fit: FitOptions::default(),
    };
    if let Some(t) = a.transient {
        run.transient_time = slow_time(t, ex, eps);
    }
    if let Some(k) = a.iters {
        run.keep_time = slow_time(k.max(1), ex, eps);
    }
    let mut row = Row::new(eps, run.iterates(ex, eps, run.transient_time), run.iterates(ex, eps, run.keep_time).max(1));
    let curve = match torus_at(ex, eps, &run) {
        Ok(r) => {
            row.fill(&r.estimate, &r.rotation);
            Some(r.estimate.curve)
        }
        Err(e @ Example4DError::Field(_)) => return Err(e.into()),
        Err(e) => {
            row.status = status(e.into())?;
            None
        }
    };
    if a.probe {
        let map = theta_map(ex, eps, a.steps);
        let around = if a.probe_trace { Some(trace) } else { curve.as_ref() };
        row.probe = around.map(|c| stability_probe(&map, c, &probe_cfg(a)));
    }
    Ok(row)
}

fn system_row<S: PerturbedSystem>(a: &TorusArgs, sys: &S, eps: f64) -> Result<Row, CliError> {
    let period = sys.period();
    let map = StroboscopicMap {
        field: FullField::new(sys, eps),
        t0: 0.0,
        period,
        cfg: IntegratorConfig::fixed(period / a.steps.max(1) as f64),
        eps: Some(eps),
    };
    let seeds: Vec<Vec<f64>> = a.seed_point.iter().map(|p| p.0.clone()).collect();
    let cfg = DetectConfig {
        transient: a.transient.unwrap_or(DetectConfig::default().transient),
        keep: a.iters.unwrap_or(DetectConfig::default().keep),
        ..DetectConfig::default()
    };
    let mut row = Row::new(eps, cfg.transient, cfg.keep);
    let detected = detect_torus(&map, &seeds, &cfg).map_err(CliError::from).and_then(|e| {
        let r = rotation_number(&map, &e.curve, a.rotation_iters.max(MIN_ITERATES))?;
        Ok((e, r))
    });
    match detected {
        Ok((e, r)) => {
            row.fill(&e, &r);
            if a.probe {
                row.probe = Some(stability_probe(&map, &e.curve, &probe_cfg(a)));
            }
        }
        Err(e) => row.status = status(e)?,
    }
    Ok(row)
}

pub fn run(mut a: TorusArgs) -> Result<(), CliError> {
    if a.eps_grid.0.iter().any(|e| *e <= 0.0) {
        return Err(CliError::usage("eps values must be positive"));
    }
    let builtin = a.source.system.is_none();
    let rows = if builtin {
        if a.source.builtin.as_deref().is_some_and(|b| b != BUILTIN_EXAMPLE) {
            return Err(CliError::usage(format!("unknown builtin (known: {BUILTIN_EXAMPLE})")));
        }
        a.source.builtin = Some(BUILTIN_EXAMPLE.into());
        if !a.seed_point.is_empty() {
            return Err(CliError::usage("--seed-point is for --system runs; use --seeds"));
        }
        let ex = super::example(&a.source)?;
        let trace = fit_curve(&cycle_trace(256), Some(&guiding_frame()), &FitOptions::default())
            .map_err(|e| CliError::new(Kind::Internal, e))?;
        a.eps_grid.0.iter().map(|&eps| builtin_row(&a, &ex, eps, &trace)).collect::<Result<Vec<_>, _>>()?
    } else {
        if a.probe_trace {
            return Err(CliError::usage("--probe-trace needs the built-in example"));
        }
        let sys = load(&mut a.source)?;
        if a.seed_point.is_empty() {
            return Err(DetectError::NoSeeds.into());
        }
        if let Some(p) = a.seed_point.iter().find(|p| p.0.len() != sys.dim()) {
            return Err(CliError::usage(format!("seed {:?} needs {} components", p.0, sys.dim())));
        }
        a.eps_grid.0.iter().map(|&eps| system_row(&a, &sys, eps)).collect::<Result<Vec<_>, _>>()?
    };
    let fp = fingerprint("torus", &a)?;
    out_dir(&a.out)?;
    let mut w = sink(Some(&a.out.join("torus.csv")))?;
    csv_head(&mut w, &fp, &HEADER.map(String::from))?;
    for r in &rows {
        writeln!(w, "{}", r.csv())?;
    }
    w.flush()?;
    let all_failed = rows.iter().all(|r| r.status != "ok");
    let summary = Summary {
        schema: "avtorus.torus.v1",
        fingerprint: fp,
        rng_seed: a.rng_seed,
        config: &a,
        distance_slope: slope(&rows),
        rows,
    };
    json(sink(Some(&a.out.join("torus.json")))?, &summary)?;
    if all_failed {
        return Err(CliError::new(Kind::Solver, "no eps value produced a torus"));
    }
    Ok(())
}
