use rayon::prelude::*;
use thiserror::Error;

use super::curve::{fit_curve, hausdorff_to_polyline, ClosedCurve, CurveError, CurveFrame, FitOptions};
use super::section::{poincare_iterate, MapError, ReturnMap};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectConfig {
    pub transient: usize,
    pub keep: usize,
    pub fit: FitOptions,
    /// Fitting frame; principal components of the pooled iterates when `None`.
    pub frame: Option<CurveFrame>,
    /// Closed polyline of the unperturbed section trace.
    pub reference: Option<Vec<Vec<f64>>>,
    /// Curve samples mapped forward for the invariance residual.
    pub residual_samples: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            transient: 2000,
            keep: 4000,
            fit: FitOptions::default(),
            frame: None,
            reference: None,
            residual_samples: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("no seeds given")]
    NoSeeds,
    #[error("all {0} seeds escaped")]
    AllEscaped(usize),
    #[error("curve fit failed: {source}")]
    Fit {
        #[source]
        source: CurveError,
        pooled: usize,
    },
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: Vec<f64>,
    /// Kept iterates, or the failure that ended the run.
    pub outcome: Result<Vec<Vec<f64>>, MapError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusEstimate {
    pub eps: Option<f64>,
    pub curve: ClosedCurve,
    pub samples: Vec<Vec<f64>>,
    /// `max dist(P(p), curve)` over `samples`; infinite if a sample escaped.
    pub invariance_residual: f64,
    pub distance_to_unperturbed: Option<f64>,
    pub iterates_used: usize,
    pub surviving_seeds: usize,
    pub runs: Vec<SeedRun>,
}

/// Iterates every seed `transient + keep` times and returns the kept tails.
pub fn run_seeds<M: ReturnMap + ?Sized>(map: &M, seeds: &[Vec<f64>], transient: usize, keep: usize) -> Vec<SeedRun> {
    seeds
        .par_iter()
        .map(|seed| {
            let outcome = poincare_iterate(map, seed, transient + keep)
                .map(|mut its| its.split_off(transient))
                .map_err(|e| e.source);
            SeedRun {
                seed: seed.clone(),
                outcome,
            }
        })
        .collect()
}

/// `max dist(P(p), curve)` over `samples`.
pub fn invariance_residual<M: ReturnMap + ?Sized>(map: &M, curve: &ClosedCurve, samples: &[Vec<f64>]) -> f64 {
    samples
        .par_iter()
        .map(|p| match map.apply(p) {
            Ok(q) => curve.distance(&q),
            Err(_) => f64::INFINITY,
        })
        .reduce(|| 0.0, f64::max)
}

/// Fits an invariant closed curve to the pooled post-transient iterates.
pub fn detect_torus<M: ReturnMap + ?Sized>(
    map: &M,
    seeds: &[Vec<f64>],
    cfg: &DetectConfig,
) -> Result<TorusEstimate, DetectError> {
    if seeds.is_empty() {
        return Err(DetectError::NoSeeds);
    }
    let runs = run_seeds(map, seeds, cfg.transient, cfg.keep);
    estimate_from_runs(map, runs, cfg)
}

/// The fitting half of [`detect_torus`], for runs computed elsewhere.
pub fn estimate_from_runs<M: ReturnMap + ?Sized>(
    map: &M,
    runs: Vec<SeedRun>,
    cfg: &DetectConfig,
) -> Result<TorusEstimate, DetectError> {
    let pooled: Vec<Vec<f64>> = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .flatten()
        .cloned()
        .collect();
    let surviving = runs.iter().filter(|r| r.outcome.is_ok()).count();
    if surviving == 0 {
        return Err(DetectError::AllEscaped(runs.len()));
    }
    let curve = fit_curve(&pooled, cfg.frame.as_ref(), &cfg.fit).map_err(|source| DetectError::Fit {
        source,
        pooled: pooled.len(),
    })?;
    let samples = curve.sample(cfg.residual_samples.max(1));
    let invariance_residual = invariance_residual(map, &curve, &samples);
    let distance_to_unperturbed = cfg.reference.as_ref().map(|r| hausdorff_to_polyline(&curve, r));
    Ok(TorusEstimate {
        eps: map.eps(),
        curve,
        samples,
        invariance_residual,
        distance_to_unperturbed,
        iterates_used: pooled.len(),
        surviving_seeds: surviving,
        runs,
    })
}
