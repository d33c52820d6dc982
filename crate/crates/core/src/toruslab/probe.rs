use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::Serialize;

use super::curve::ClosedCurve;
use super::section::ReturnMap;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub radius: f64,
    pub trials: usize,
    pub horizon: usize,
    /// Iterates between distance checks.
    pub check_every: usize,
    pub rng_seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            radius: 0.1,
            trials: 200,
            horizon: 4000,
            check_every: 50,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Attracting,
    SaddleLike,
    Repelling,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Attracted,
    Escaped,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub outcome: TrialOutcome,
    /// Smallest distance seen at a checkpoint.
    pub min_distance: f64,
    pub final_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub fraction_attracted: f64,
    pub fraction_escaped: f64,
    /// Trials whose squared distance halved at some checkpoint.
    pub fraction_approached: f64,
    pub classification: Classification,
    #[serde(skip)]
    pub trials: Vec<Trial>,
}

/// Share of outcomes required for a verdict.
pub const MAJORITY: f64 = 0.95;
pub const MINORITY: f64 = 0.05;

pub fn classify(attracted: f64, escaped: f64, approached: f64) -> Classification {
    if attracted >= MAJORITY {
        Classification::Attracting
    } else if escaped >= MINORITY && (attracted >= MINORITY || approached >= MINORITY) {
        Classification::SaddleLike
    } else if escaped >= MAJORITY {
        Classification::Repelling
    } else {
        Classification::Undecided
    }
}

fn start_point(curve: &ClosedCurve, radius: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let phi = Uniform::new(0.0, 2.0 * std::f64::consts::PI).sample(rng);
    let p = curve.point(phi);
    let h = 1e-6;
    let (a, b) = (curve.point(phi + h), curve.point(phi - h));
    let mut tangent: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let tn = tangent.iter().map(|v| v * v).sum::<f64>().sqrt();
    tangent.iter_mut().for_each(|v| *v /= tn);
    loop {
        let mut d: Vec<f64> = (0..p.len()).map(|_| StandardNormal.sample(rng)).collect();
        let c: f64 = d.iter().zip(&tangent).map(|(x, y)| x * y).sum();
        d.iter_mut().zip(&tangent).for_each(|(x, t)| *x -= c * t);
        let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > 1e-8 {
            return p.iter().zip(&d).map(|(x, v)| x + radius * v / len).collect();
        }
    }
}

fn run_trial<M: ReturnMap + ?Sized>(map: &M, curve: &ClosedCurve, cfg: &ProbeConfig, index: usize) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(index as u64);
    let mut x = start_point(curve, cfg.radius, &mut rng);
    let mut min_distance = curve.distance(&x);
    let escaped = |min_distance: f64, d: f64| Trial {
        outcome: TrialOutcome::Escaped,
        min_distance: min_distance.min(d),
        final_distance: d,
    };
    let every = cfg.check_every.max(1);
    for n in 1..=cfg.horizon {
        x = match map.apply(&x) {
            Ok(y) => y,
            Err(_) => return escaped(min_distance, f64::INFINITY),
        };
        if n % every == 0 || n == cfg.horizon {
            let d = curve.distance(&x);
            if d > 10.0 * cfg.radius {
                return escaped(min_distance, d);
            }
            min_distance = min_distance.min(d);
        }
    }
    let d = curve.distance(&x);
    Trial {
        outcome: if d < cfg.radius / 10.0 {
            TrialOutcome::Attracted
        } else {
            TrialOutcome::Undecided
        },
        min_distance,
        final_distance: d,
    }
}

/// Perturbs random curve points by `radius` in random normal directions and
/// records where `horizon` iterates take them.
pub fn stability_probe<M: ReturnMap + ?Sized>(map: &M, curve: &ClosedCurve, cfg: &ProbeConfig) -> ProbeReport {
    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(map, curve, cfg, i))
        .collect();
    let total = cfg.trials.max(1) as f64;
    let count = |o: TrialOutcome| trials.iter().filter(|t| t.outcome == o).count() as f64 / total;
    let fraction_attracted = count(TrialOutcome::Attracted);
    let fraction_escaped = count(TrialOutcome::Escaped);
    let fraction_approached = trials
        .iter()
        .filter(|t| t.min_distance <= cfg.radius / std::f64::consts::SQRT_2)
        .count() as f64
        / total;
    ProbeReport {
        fraction_attracted,
        fraction_escaped,
        fraction_approached,
        classification: classify(fraction_attracted, fraction_escaped, fraction_approached),
        trials,
    }
}
