use serde::Serialize;

use crate::corenum::{flow, FieldError, FullField, IntegratorConfig, PerturbedSystem, QuadConfig, VectorField};
use crate::melnikov::{AveragedField, MelnikovError, SampleBox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosenessRow {
    pub eps: f64,
    pub horizon: f64,
    pub deviation: f64,
}

struct Scaled<F> {
    field: F,
    factor: f64,
}

impl<F: VectorField> VectorField for Scaled<F> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        self.field.eval(t, x, out)?;
        out.iter_mut().for_each(|v| *v *= self.factor);
        Ok(())
    }
}

/// Largest gap between the full system and the truncated averaged system
/// `ż = ε^ℓ g_ℓ(z)` from the same start, over `[0, c/ε]`, sampled every `T/32`.
#[allow(clippy::too_many_arguments)]
pub fn averaging_closeness<S: PerturbedSystem + ?Sized>(
    sys: &S,
    ell: usize,
    z0: &[f64],
    eps_list: &[f64],
    c: f64,
    quad: &QuadConfig,
    cfg: &IntegratorConfig,
    samples: &SampleBox,
) -> Result<Vec<ClosenessRow>, MelnikovError> {
    let g = AveragedField::new(sys, ell, quad, samples)?;
    let period = sys.period();
    let dt = period / 32.0;
    eps_list
        .iter()
        .map(|&eps| {
            let horizon = if eps == 0.0 { period } else { c / eps.abs() };
            let full = FullField::new(sys, eps);
            let avg = Scaled {
                field: &g,
                factor: eps.powi(ell as i32),
            };
            let mut x = z0.to_vec();
            let mut z = z0.to_vec();
            let mut t = 0.0;
            let mut deviation = 0.0f64;
            let steps = (horizon / dt).ceil() as usize;
            for k in 1..=steps {
                let t1 = (k as f64 * dt).min(horizon);
                x = flow(&full, t, t1, &x, cfg)?;
                z = flow(&avg, t, t1, &z, cfg)?;
                t = t1;
                let d = x.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                deviation = deviation.max(d);
            }
            Ok(ClosenessRow {
                eps,
                horizon,
                deviation,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysdsl::parse_system;

    #[test]
    fn gap_shrinks_with_eps() {
        let sys = parse_system(
            "n = 2\nT = \"2*pi\"\nN = 1\nF1 = [\"sin(t)*x2 - 0.5*x1 + 0.25*cos(2*t)\", \"cos(t)^2*x1 - 0.5*x2 + sin(t)\"]\n",
        )
        .unwrap();
        let samples = SampleBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]);
        let rows = averaging_closeness(
            &sys,
            1,
            &[1.0, 0.5],
            &[0.0, 0.1, 0.05],
            1.0,
            &QuadConfig::default(),
            &IntegratorConfig::default(),
            &samples,
        )
        .unwrap();
        assert_eq!(rows[0].deviation, 0.0);
        let ratio = rows[2].deviation / rows[1].deviation;
        assert!((0.3..0.7).contains(&ratio), "{ratio}");
    }
}
