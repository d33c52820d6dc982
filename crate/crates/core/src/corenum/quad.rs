//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

use thiserror::Error;

use super::FieldError;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    NoConvergence { a: f64, b: f64, estimate: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize) -> Result<(Vec<f64>, f64), QuadError>
where
    F: FnMut(f64) -> Result<Vec<f64>, FieldError>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let centre = f(c)?;
    for d in 0..dim {
        kron[d] = WGK[7] * centre[d];
        gauss[d] = WG[3] * centre[d];
    }
    for (j, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let lo = f(c - h * x)?;
        let hi = f(c + h * x)?;
        for d in 0..dim {
            let s = lo[d] + hi[d];
            kron[d] += w * s;
            if j % 2 == 1 {
                gauss[d] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0f64;
    for d in 0..dim {
        kron[d] *= h;
        gauss[d] *= h;
        err = err.max((kron[d] - gauss[d]).abs());
    }
    Ok((kron, err))
}

/// `∫_a^b f(s) ds` for a vector-valued `f` of output length `dim`.
///
/// Intervals are bisected until each one's Kronrod–Gauss discrepancy is
/// below its share of `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, cfg: &QuadConfig) -> Result<Vec<f64>, QuadError>
where
    F: FnMut(f64) -> Result<Vec<f64>, FieldError>,
{
    let mut total = vec![0.0; dim];
    if a == b {
        return Ok(total);
    }
    let span = (b - a).abs();
    let mut stack = vec![(a, b)];
    let mut intervals = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        intervals += 1;
        let (val, err) = gk15(&mut f, lo, hi, dim)?;
        let mag = val.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let share = (hi - lo).abs() / span;
        let tol = (cfg.abs_tol * share).max(cfg.rel_tol * mag);
        if err <= tol || (hi - lo).abs() < 1e-12 * span {
            for (t, v) in total.iter_mut().zip(&val) {
                *t += v;
            }
            continue;
        }
        if intervals >= cfg.max_intervals {
            return Err(QuadError::NoConvergence {
                a: lo,
                b: hi,
                estimate: err,
            });
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi));
        stack.push((lo, mid));
    }
    Ok(total)
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64, QuadError>
where
    F: FnMut(f64) -> f64,
{
    integrate(|s| Ok(vec![f(s)]), a, b, 1, cfg).map(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_exact() {
        let cfg = QuadConfig::default();
        let v = integrate_scalar(|s| s.powi(5) - 3.0 * s * s, 0.0, 2.0, &cfg).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn trig_over_period() {
        let cfg = QuadConfig::default();
        let v = integrate(|s| Ok(vec![s.sin(), s.sin().powi(2)]), 0.0, 2.0 * PI, 2, &cfg).unwrap();
        assert!(v[0].abs() < 1e-12);
        assert!((v[1] - PI).abs() < 1e-12);
    }

    #[test]
    fn reversed_and_empty() {
        let cfg = QuadConfig::default();
        assert_eq!(integrate_scalar(|s| s, 1.0, 1.0, &cfg).unwrap(), 0.0);
        let v = integrate_scalar(|s| s.exp(), 1.0, 0.0, &cfg).unwrap();
        assert!((v + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn refuses_singular() {
        let cfg = QuadConfig {
            max_intervals: 50,
            ..QuadConfig::default()
        };
        let r = integrate_scalar(|s| 1.0 / s.sqrt().max(1e-300), 0.0, 1.0, &cfg);
        assert!(matches!(r, Err(QuadError::NoConvergence { .. })));
    }
}
