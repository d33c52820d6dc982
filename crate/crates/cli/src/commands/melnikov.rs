use avtorus_core::corenum::{PerturbedSystem, QuadConfig};
use avtorus_core::melnikov::{melnikov_f, AveragedField, SampleBox};

use super::load;
use crate::config::fingerprint;
use crate::error::CliError;
use crate::output::{csv_head, csv_row, sink};
use crate::MelnikovArgs;

fn points(a: &MelnikovArgs, n: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut pts: Vec<Vec<f64>> = a.point.iter().map(|p| p.0.clone()).collect();
    if let Some(g) = &a.grid {
        if g.0.len() != n {
            return Err(CliError::usage(format!("--grid needs {n} ranges, got {}", g.0.len())));
        }
        let total: usize = g.0.iter().map(|r| r.2).product();
        for mut flat in 0..total {
            pts.push(
                g.0.iter()
                    .map(|&(lo, hi, k)| {
                        let i = flat % k;
                        flat /= k;
                        if k == 1 {
                            lo
                        } else {
                            lo + (hi - lo) * i as f64 / (k - 1) as f64
                        }
                    })
                    .collect(),
            );
        }
    }
    if pts.is_empty() {
        return Err(CliError::usage("give --point or --grid"));
    }
    if let Some(p) = pts.iter().find(|p| p.len() != n) {
        return Err(CliError::usage(format!("point {p:?} needs {n} components")));
    }
    Ok(pts)
}

fn check_box(a: &MelnikovArgs, pts: &[Vec<f64>], n: usize) -> Result<SampleBox, CliError> {
    let (lo, hi): (Vec<f64>, Vec<f64>) = match &a.check_box {
        Some(b) if b.0.len() != n => return Err(CliError::usage(format!("--check-box needs {n} ranges"))),
        Some(b) => b.0.iter().copied().unzip(),
        None => (0..n)
            .map(|d| {
                let it = pts.iter().map(|p| p[d]);
                (it.clone().fold(f64::INFINITY, f64::min), it.fold(f64::NEG_INFINITY, f64::max))
            })
            .unzip(),
    };
    let mut samples = SampleBox::new(lo, hi);
    samples.per_dim = a.check_points;
    samples.tol = a.tol_vanish;
    Ok(samples)
}

pub fn run(mut a: MelnikovArgs) -> Result<(), CliError> {
    let sys = load(&mut a.source)?;
    let n = sys.dim();
    let pts = points(&a, n)?;
    let quad = QuadConfig {
        abs_tol: a.tol_quad_abs,
        rel_tol: a.tol_quad_rel,
        ..QuadConfig::default()
    };
    let fp = fingerprint("melnikov", &a)?;
    let (label, rows) = if a.averaged {
        let samples = check_box(&a, &pts, n)?;
        let g = AveragedField::new(&sys, a.order, &quad, &samples)?;
        ("g", pts.iter().map(|p| g.g(p)).collect::<Result<Vec<_>, _>>()?)
    } else {
        let rows = pts.iter().map(|p| melnikov_f(&sys, a.order, p, &quad)).collect::<Result<Vec<_>, _>>()?;
        ("f", rows)
    };
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    header.extend((1..=n).map(|i| format!("{label}{i}")));
    let mut w = sink(a.out.as_deref())?;
    csv_head(&mut w, &fp, &header)?;
    for (p, v) in pts.iter().zip(&rows) {
        let row: Vec<f64> = p.iter().chain(v).copied().collect();
        csv_row(&mut w, &row)?;
    }
    w.flush()?;
    Ok(())
}
