use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use avtorus_core::example4d::{reproduce_fig1, Fig1Config, Fig1Verdict, FIG1_SEEDS};

use crate::config::fingerprint;
use crate::error::CliError;
use crate::output::{csv_head, json, out_dir, sink};
use crate::Fig1Args;

/// Points of the fitted curve written to `curve.csv`.
const CURVE_SAMPLES: usize = 512;

#[derive(Serialize)]
struct Report<'a> {
    schema: &'static str,
    fingerprint: String,
    config: &'a Fig1Args,
    seeds: [[f64; 3]; 4],
    files: Vec<String>,
    verdict: Fig1Verdict,
    tube: f64,
    hausdorff_bound: f64,
    passed: bool,
}

pub fn run(a: Fig1Args) -> Result<(), CliError> {
    if a.steps == 0 || a.iters == 0 || a.transient >= a.iters {
        return Err(CliError::usage("need steps > 0 and 0 <= transient < iters"));
    }
    let cfg = Fig1Config {
        eps: a.eps,
        iterates: a.iters,
        step: 2.0 * PI / a.steps as f64,
        transient: a.transient,
        tail: a.tail,
        ..Fig1Config::default()
    };
    let run = reproduce_fig1(&cfg)?;
    let fp = fingerprint("fig1", &a)?;
    out_dir(&a.out)?;
    let header = ["seed", "iter", "x", "u", "v"].map(String::from);
    let mut files = Vec::new();
    for (s, its) in run.iterates.iter().enumerate() {
        let name = format!("seed{}.csv", s + 1);
        let mut w = sink(Some(&a.out.join(&name)))?;
        csv_head(&mut w, &fp, &header)?;
        for (i, p) in its.iter().enumerate() {
            writeln!(w, "{},{},{:.12},{:.12},{:.12}", s + 1, i + 1, p[0], p[1], p[2])?;
        }
        w.flush()?;
        files.push(name);
    }
    let mut w = sink(Some(&a.out.join("curve.csv")))?;
    csv_head(&mut w, &fp, &["x", "u", "v"].map(String::from))?;
    for p in run.curve.sample(CURVE_SAMPLES) {
        writeln!(w, "{:.12},{:.12},{:.12}", p[0], p[1], p[2])?;
    }
    w.flush()?;
    files.push("curve.csv".into());
    let report = Report {
        schema: "avtorus.fig1.v1",
        fingerprint: fp,
        config: &a,
        seeds: FIG1_SEEDS,
        files,
        verdict: run.verdict,
        tube: Fig1Verdict::TUBE,
        hausdorff_bound: Fig1Verdict::HAUSDORFF,
        passed: run.verdict.passed(),
    };
    json(sink(Some(&a.out.join("verdict.json")))?, &report)?;
    eprintln!(
        "fig1: residual {:.3e}, uv distance {:.3e}, x distance {:.3e}, {}",
        run.verdict.residual,
        run.verdict.hausdorff_uv,
        run.verdict.hausdorff_x,
        if report.passed { "passed" } else { "FAILED" }
    );
    Ok(())
}
