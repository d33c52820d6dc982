//! The 4D torus example: a planar rotation in `(x, y)` coupled to `(u, v)`,
//! perturbed at orders `ε^N` (free terms `f`), `ε^{N+1}` (fixed terms `g`)
//! and `ε^{N+2}` (free terms `h`).
//!
//! Polar coordinates around the rotation, with the angle as the new time,
//! give a `2π`-periodic system in `(r, u, v)` whose guiding system has the
//! hyperbolic cycle `r = 1, u² + v² = 1`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corenum::quad::{integrate_scalar, QuadConfig};
use crate::corenum::{FieldError, IntegrationError, IntegratorConfig, JacobianField, VectorField};
use crate::guiding::{find_cycle, CycleConfig, CycleError, LimitCycle};
use crate::sysdsl::{parse_expr, Compiled, Expr, SpecError, SystemSpec, Var};
use crate::toruslab::{
    detect_torus, fit_curve, rotation_number, ClosedCurve, CurveError, CurveFrame, DetectConfig, DetectError,
    FitOptions, HyperplaneSection, MapError, ReturnMap, RotationError, RotationEstimate, StroboscopicMap, TorusEstimate, MIN_ITERATES,
};

/// Largest tolerated `|θ̇ − 1|` before the angle stops being a valid time.
pub const THETA_GUARD: f64 = 0.5;
/// Bound on the θ-averages of the free terms.
pub const AVERAGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Example4DError {
    #[error("N must be at least 2, got {0}")]
    Order(usize),
    #[error("mu must be -1 or +1, got {0}")]
    Mu(i32),
    #[error("{what} needs 4 components, got {got}")]
    Components { what: &'static str, got: usize },
    #[error("{what} may only use x1..x4 and no t")]
    Vars { what: &'static str },
    #[error("theta-average {which} is {value:e} at (r,u,v) = {at:?}")]
    Average { which: usize, value: f64, at: [f64; 3] },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("seed {seed} blew up at iterate {index}")]
    BlowUp { seed: usize, index: usize },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Rotation(#[from] RotationError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example4DConfig {
    pub big_n: usize,
    pub mu: i32,
    /// `f₁..f₄` in `x1..x4 = (x, y, u, v)`.
    pub f: Vec<Expr>,
    /// `h₁..h₄`, ε-independent.
    pub h: Vec<Expr>,
}

fn px(src: &str) -> Expr {
    parse_expr(src, 4).expect("built-in expression")
}

impl Default for Example4DConfig {
    fn default() -> Self {
        Self {
            big_n: 2,
            mu: 1,
            f: ["x2*x3", "-x1*x4", "x1^3", "x2^3"].map(px).to_vec(),
            h: vec![Expr::lit(0.0); 4],
        }
    }
}

impl Example4DConfig {
    pub fn new(big_n: usize, mu: i32) -> Self {
        Self {
            big_n,
            mu,
            ..Self::default()
        }
    }

    /// Checks `N`, `μ`, the term shapes and the vanishing θ-averages.
    pub fn validate(&self) -> Result<(), Example4DError> {
        if self.big_n < 2 {
            return Err(Example4DError::Order(self.big_n));
        }
        if self.mu != 1 && self.mu != -1 {
            return Err(Example4DError::Mu(self.mu));
        }
        for (what, terms) in [("f", &self.f), ("h", &self.h)] {
            if terms.len() != 4 {
                return Err(Example4DError::Components { what, got: terms.len() });
            }
            if terms.iter().any(|e| e.max_var() > 4 || e.depends_on(Var::T)) {
                return Err(Example4DError::Vars { what });
            }
        }
        self.check_averages()
    }

    fn check_averages(&self) -> Result<(), Example4DError> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let quad = QuadConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            ..QuadConfig::default()
        };
        for _ in 0..10 {
            let at = [rng.gen_range(0.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let [r, u, v] = at;
            for which in 0..3 {
                let mut failed = None;
                let avg = integrate_scalar(
                    |th| {
                        let p = [r * th.cos(), r * th.sin(), u, v];
                        let mut val = |k: usize| match self.f[k].eval(0.0, &p) {
                            Ok(y) => y,
                            Err(e) => {
                                failed = Some(e);
                                0.0
                            }
                        };
                        match which {
                            0 => th.cos() * val(0) + th.sin() * val(1),
                            1 => val(2),
                            _ => val(3),
                        }
                    },
                    0.0,
                    2.0 * PI,
                    &quad,
                )
                .map_err(|_| FieldError::NonFinite)?
                    / (2.0 * PI);
                if failed.is_some() {
                    return Err(FieldError::NonFinite.into());
                }
                if avg.abs() > AVERAGE_TOL {
                    return Err(Example4DError::Average {
                        which: which + 1,
                        value: avg,
                        at,
                    });
                }
            }
        }
        Ok(())
    }

    /// The fixed `ε^{N+1}` terms.
    pub fn g_terms(&self) -> Vec<Expr> {
        let mu = Expr::lit(self.mu as f64);
        vec![
            Expr::mul(mu.clone(), px("x1*(x1^2 + x2^2)")),
            Expr::neg(Expr::mul(mu, px("x2*(x1^2 + x2^2)^2"))),
            px("x1^2*(x3*(1 - x3^2 - x4^2) + x4)"),
            px("x2^2*(x4*(1 - x3^2 - x4^2) - x3)"),
        ]
    }
}

enum Terms {
    Zero,
    DefaultF,
    Custom(Vec<Compiled>),
}

impl Terms {
    fn new(terms: &[Expr], default: Option<&[Expr]>) -> Self {
        if terms.iter().all(Expr::is_zero) {
            Terms::Zero
        } else if default == Some(terms) {
            Terms::DefaultF
        } else {
            Terms::Custom(terms.iter().map(Compiled::new).collect())
        }
    }

    fn eval(&self, p: &[f64], out: &mut [f64; 4]) -> Result<(), FieldError> {
        match self {
            Terms::Zero => *out = [0.0; 4],
            Terms::DefaultF => *out = [p[1] * p[2], -p[0] * p[3], p[0] * p[0] * p[0], p[1] * p[1] * p[1]],
            Terms::Custom(c) => {
                for (o, e) in out.iter_mut().zip(c) {
                    *o = e.eval(0.0, p).map_err(|_| FieldError::NonFinite)?;
                }
            }
        }
        Ok(())
    }
}

fn g_native(mu: f64, p: &[f64]) -> [f64; 4] {
    let (x, y, u, v) = (p[0], p[1], p[2], p[3]);
    let r2 = x * x + y * y;
    let w = 1.0 - u * u - v * v;
    [mu * x * r2, -mu * y * r2 * r2, x * x * (u * w + v), y * y * (v * w - u)]
}

/// The autonomous field in `(x, y, u, v)` at a fixed ε.
pub struct CartesianField {
    f: Terms,
    h: Terms,
    mu: f64,
    pub eps: f64,
    big_n: i32,
}

impl CartesianField {
    pub fn new(cfg: &Example4DConfig, eps: f64) -> Self {
        let default = Example4DConfig::default().f;
        Self {
            f: Terms::new(&cfg.f, Some(&default)),
            h: Terms::new(&cfg.h, None),
            mu: cfg.mu as f64,
            eps,
            big_n: cfg.big_n as i32,
        }
    }

    fn eval_at(&self, eps: f64, p: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        let mut f = [0.0; 4];
        let mut g = [0.0; 4];
        let mut h = [0.0; 4];
        let en = eps.powi(self.big_n);
        if en != 0.0 {
            self.f.eval(p, &mut f)?;
            g = g_native(self.mu, p);
            self.h.eval(p, &mut h)?;
        }
        for i in 0..4 {
            out[i] = en * (f[i] + eps * (g[i] + eps * h[i]));
        }
        out[0] -= p[1];
        out[1] += p[0];
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(FieldError::NonFinite)
        }
    }
}

impl VectorField for CartesianField {
    fn dim(&self) -> usize {
        4
    }
    fn eval(&self, _t: f64, p: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        self.eval_at(self.eps, p, out)
    }
}

/// The field in `(r, u, v)` with the polar angle as independent variable.
pub struct CylindricalField {
    cart: CartesianField,
}

impl CylindricalField {
    pub fn new(cfg: &Example4DConfig, eps: f64) -> Self {
        Self {
            cart: CartesianField::new(cfg, eps),
        }
    }

    pub fn eps(&self) -> f64 {
        self.cart.eps
    }
}

impl CylindricalField {
    fn eval_at(&self, eps: f64, th: f64, z: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        let r = z[0];
        if !(r > 0.0) {
            return Err(FieldError::Guard(format!("r = {r} is not positive")));
        }
        let (s, c) = th.sin_cos();
        let p = [r * c, r * s, z[1], z[2]];
        let mut d = [0.0; 4];
        self.cart.eval_at(eps, &p, &mut d)?;
        let dr = c * d[0] + s * d[1];
        let dth = (c * d[1] - s * d[0]) / r;
        if !((dth - 1.0).abs() < THETA_GUARD) {
            return Err(FieldError::Guard(format!(
                "angular speed {dth:.3} too far from 1; reduce eps"
            )));
        }
        out[0] = dr / dth;
        out[1] = d[2] / dth;
        out[2] = d[3] / dth;
        Ok(())
    }
}

impl VectorField for CylindricalField {
    fn dim(&self) -> usize {
        3
    }
    fn eval(&self, th: f64, z: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        self.eval_at(self.cart.eps, th, z, out)
    }
}

fn to_polar(e: &Expr) -> Expr {
    e.substitute(&|v| match v {
        Var::X(1) => Expr::mul(Expr::x(1), Expr::cos(Expr::var(Var::T))),
        Var::X(2) => Expr::mul(Expr::x(1), Expr::sin(Expr::var(Var::T))),
        Var::X(k) => Expr::x(k - 1),
        Var::T => Expr::var(Var::T),
    })
}

fn polar_terms(terms: &[Expr]) -> Vec<Expr> {
    let t = Expr::var(Var::T);
    let radial = Expr::add(
        Expr::mul(Expr::cos(t.clone()), to_polar(&terms[0])),
        Expr::mul(Expr::sin(t), to_polar(&terms[1])),
    );
    vec![radial, to_polar(&terms[2]), to_polar(&terms[3])]
}

/// The polar system as a `2π`-periodic perturbed system of order `N + 1`
/// in `x1..x3 = (r, u, v)` and `t = θ`.
///
/// Only `F_N` and `F_{N+1}` are nonzero; everything of order `ε^{N+2}` and
/// above goes into the remainder, so the full field is exact.
pub fn cylindrical_system(cfg: &Example4DConfig) -> Result<SystemSpec, Example4DError> {
    cfg.validate()?;
    let n = cfg.big_n;
    let mut terms = vec![vec![Expr::lit(0.0); 3]; n - 1];
    terms.push(polar_terms(&cfg.f));
    terms.push(polar_terms(&cfg.g_terms()));
    let spec = SystemSpec::new(format!("example4d-N{n}-mu{}", cfg.mu), 3, 2.0 * PI, terms.clone())?;
    let exact = CylindricalField::new(cfg, 0.0);
    let (fn_, fn1) = (terms[n - 1].clone(), terms[n].clone());
    let remainder = Arc::new(move |th: f64, z: &[f64], eps: f64, out: &mut [f64]| {
        if eps == 0.0 {
            out.fill(0.0);
            return;
        }
        let mut full = [0.0; 3];
        if exact.eval_at(eps, th, z, &mut full).is_err() {
            out.fill(f64::NAN);
            return;
        }
        let en = eps.powi(n as i32);
        for k in 0..3 {
            let a = fn_[k].eval(th, z).unwrap_or(f64::NAN);
            let b = fn1[k].eval(th, z).unwrap_or(f64::NAN);
            out[k] = (full[k] - en * (a + eps * b)) / (en * eps * eps);
        }
    });
    Ok(spec.with_remainder_fn(remainder))
}

/// `(1/2π)` times the θ-average of `F_{N+1}`, in `(r, u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidingField {
    pub mu: f64,
}

const GUIDE: f64 = 1.0 / (4.0 * PI);

impl GuidingField {
    pub fn new(mu: i32) -> Self {
        Self { mu: mu as f64 }
    }
}

impl VectorField for GuidingField {
    fn dim(&self) -> usize {
        3
    }
    fn eval(&self, _t: f64, z: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        let (r, u, v) = (z[0], z[1], z[2]);
        let r2 = r * r;
        out[0] = GUIDE * self.mu * (r2 * r - r2 * r2 * r);
        out[1] = GUIDE * r2 * (-u * u * u - u * v * v + u + v);
        out[2] = -GUIDE * r2 * (u * u * v + u + v * v * v - v);
        Ok(())
    }
}

impl JacobianField for GuidingField {
    fn jacobian(&self, _t: f64, z: &[f64], jac: &mut DMatrix<f64>) -> Result<(), FieldError> {
        let (r, u, v) = (z[0], z[1], z[2]);
        let r2 = r * r;
        jac.fill(0.0);
        jac[(0, 0)] = GUIDE * self.mu * (3.0 * r2 - 5.0 * r2 * r2);
        jac[(1, 0)] = 2.0 * GUIDE * r * (-u * u * u - u * v * v + u + v);
        jac[(1, 1)] = GUIDE * r2 * (1.0 - 3.0 * u * u - v * v);
        jac[(1, 2)] = GUIDE * r2 * (1.0 - 2.0 * u * v);
        jac[(2, 0)] = -2.0 * GUIDE * r * (u * u * v + u + v * v * v - v);
        jac[(2, 1)] = -GUIDE * r2 * (2.0 * u * v + 1.0);
        jac[(2, 2)] = -GUIDE * r2 * (u * u + 3.0 * v * v - 1.0);
        Ok(())
    }
}

/// Period of the guiding cycle `r = 1, u² + v² = 1`.
pub const GUIDING_PERIOD: f64 = 8.0 * PI * PI;

/// The guiding cycle, found by shooting from `(1, 1, 0)`.
pub fn guiding_cycle(mu: i32, cfg: &CycleConfig) -> Result<LimitCycle, CycleError> {
    find_cycle(&GuidingField::new(mu), &[1.0, 1.0, 0.0], GUIDING_PERIOD, cfg)
}

/// `k` points of the unperturbed section trace `(1, cos s, −sin s)`,
/// valid in both `(x, u, v)` and `(r, u, v)` coordinates.
pub fn cycle_trace(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let s = 2.0 * PI * i as f64 / k as f64;
            vec![1.0, s.cos(), -s.sin()]
        })
        .collect()
}

/// Frame around the cycle trace, oriented with the guiding flow.
pub fn guiding_frame() -> CurveFrame {
    CurveFrame::new(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, -1.0])
        .expect("orthonormal frame")
}

/// Return map to `{y = 0, x > 0}` in section coordinates `(x, u, v)`.
pub fn section_map(cfg: &Example4DConfig, eps: f64, step: f64) -> HyperplaneSection<CartesianField> {
    let mut map = HyperplaneSection::new(CartesianField::new(cfg, eps), 1, 0, step, 40.0 * PI);
    map.eps = Some(eps);
    map
}

/// Time-`2π` map of the polar system in `(r, u, v)`, by `steps` RK4 steps.
pub fn theta_map(cfg: &Example4DConfig, eps: f64, steps: usize) -> StroboscopicMap<CylindricalField> {
    StroboscopicMap {
        field: CylindricalField::new(cfg, eps),
        t0: 0.0,
        period: 2.0 * PI,
        cfg: IntegratorConfig::fixed(2.0 * PI / steps.max(1) as f64),
        eps: Some(eps),
    }
}

/// Iteration budget for torus runs on [`theta_map`], in slow time
/// `τ = ε^{N+1} θ` so that runs at different ε see the same dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusRunConfig {
    /// RK4 steps per `2π`.
    pub steps: usize,
    /// Seeds spread evenly along the unperturbed trace.
    pub seeds: usize,
    pub transient_time: f64,
    /// Kept stretch per seed.
    pub keep_time: f64,
    /// Length of the rotation-number run.
    pub rotation_time: f64,
    pub fit: FitOptions,
}

impl Default for TorusRunConfig {
    fn default() -> Self {
        Self {
            steps: 32,
            seeds: 8,
            transient_time: 4.0,
            keep_time: 2.0,
            rotation_time: 4.0 * PI,
            fit: FitOptions::default(),
        }
    }
}

impl TorusRunConfig {
    /// Number of `θ`-map iterates spanning slow time `time`.
    pub fn iterates(&self, cfg: &Example4DConfig, eps: f64, time: f64) -> usize {
        (time / (2.0 * PI * eps.powi(cfg.big_n as i32 + 1))).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusReport {
    pub estimate: TorusEstimate,
    pub rotation: RotationEstimate,
    pub transient: usize,
    pub keep: usize,
}

/// Detects the invariant curve of the `θ`-map at `eps` and measures its
/// rotation number.
pub fn torus_at(cfg: &Example4DConfig, eps: f64, run: &TorusRunConfig) -> Result<TorusReport, Example4DError> {
    cfg.validate()?;
    let map = theta_map(cfg, eps, run.steps);
    let transient = run.iterates(cfg, eps, run.transient_time);
    let keep = run.iterates(cfg, eps, run.keep_time).max(1);
    let seeds = cycle_trace(run.seeds.max(1));
    if let Err(MapError::Integration(IntegrationError::Field { source, .. })) = map.apply(&seeds[0]) {
        return Err(source.into());
    }
    let detect = DetectConfig {
        transient,
        keep,
        fit: run.fit.clone(),
        frame: Some(guiding_frame()),
        reference: Some(cycle_trace(1024)),
        ..DetectConfig::default()
    };
    let estimate = detect_torus(&map, &seeds, &detect)?;
    let count = run.iterates(cfg, eps, run.rotation_time).max(MIN_ITERATES);
    let rotation = rotation_number(&map, &estimate.curve, count)?;
    Ok(TorusReport {
        estimate,
        rotation,
        transient,
        keep,
    })
}

/// Initial values `(x, u, v)` on the section.
pub const FIG1_SEEDS: [[f64; 3]; 4] = [[1.01, 2.0, 0.0], [0.99, 2.0, 0.0], [1.01, 0.5, 0.0], [0.99, 0.5, 0.0]];

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Config {
    pub eps: f64,
    pub iterates: usize,
    /// RK4 step of the section map.
    pub step: f64,
    /// Iterates dropped before fitting.
    pub transient: usize,
    /// Iterates per seed checked against the tube.
    pub tail: usize,
    pub fit: FitOptions,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Self {
            eps: 1.0 / 15.0,
            iterates: 10345,
            step: 2.0 * PI / 2000.0,
            transient: 3000,
            tail: 500,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig1Verdict {
    pub bounded: bool,
    /// Largest distance from a tail iterate to the fitted curve.
    pub residual: f64,
    /// Hausdorff distance from the curve's `(u, v)` trace to the unit circle.
    pub hausdorff_uv: f64,
    /// `max |x − 1|` along the curve.
    pub hausdorff_x: f64,
}

impl Fig1Verdict {
    pub const TUBE: f64 = 0.05;
    pub const HAUSDORFF: f64 = 0.2;

    pub fn passed(&self) -> bool {
        self.bounded && self.residual <= Self::TUBE && self.hausdorff_uv <= Self::HAUSDORFF && self.hausdorff_x <= Self::HAUSDORFF
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Run {
    pub iterates: Vec<Vec<Vec<f64>>>,
    pub curve: ClosedCurve,
    pub verdict: Fig1Verdict,
}

impl Fig1Run {
    /// CSV dump with header `seed,iter,x,u,v`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "seed,iter,x,u,v")?;
        for (s, its) in self.iterates.iter().enumerate() {
            for (i, p) in its.iter().enumerate() {
                writeln!(w, "{s},{},{:.12},{:.12},{:.12}", i + 1, p[0], p[1], p[2])?;
            }
        }
        Ok(())
    }
}

fn hausdorff_uv_circle(curve: &ClosedCurve) -> f64 {
    let trace: Vec<[f64; 2]> = curve.sample(512).iter().map(|p| [p[1], p[2]]).collect();
    let forward = trace.iter().map(|p| (p[0].hypot(p[1]) - 1.0).abs()).fold(0.0, f64::max);
    let seg = |q: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
        };
        (q[0] - a[0] - t * d[0]).hypot(q[1] - a[1] - t * d[1])
    };
    let backward = (0..512)
        .map(|i| {
            let s = 2.0 * PI * i as f64 / 512.0;
            let q = [s.cos(), s.sin()];
            (0..trace.len())
                .map(|j| seg(q, trace[j], trace[(j + 1) % trace.len()]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    forward.max(backward)
}

/// Iterates the section map of the default example from the four seeds and
/// fits the attracting curve.
pub fn reproduce_fig1(cfg: &Fig1Config) -> Result<Fig1Run, Example4DError> {
    let ex = Example4DConfig::new(2, 1);
    ex.validate()?;
    let map = section_map(&ex, cfg.eps, cfg.step);
    let iterates = FIG1_SEEDS
        .par_iter()
        .enumerate()
        .map(|(seed, x0)| {
            crate::toruslab::poincare_iterate(&map, x0, cfg.iterates)
                .map_err(|e| Example4DError::BlowUp { seed, index: e.index })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pooled: Vec<Vec<f64>> = iterates
        .iter()
        .flat_map(|its| its[cfg.transient.min(its.len())..].iter().cloned())
        .collect();
    let curve = fit_curve(&pooled, Some(&guiding_frame()), &cfg.fit)?;
    let residual = iterates
        .iter()
        .flat_map(|its| its[its.len().saturating_sub(cfg.tail)..].iter())
        .map(|p| curve.distance(p))
        .fold(0.0, f64::max);
    let hausdorff_x = curve.sample(512).iter().map(|p| (p[0] - 1.0).abs()).fold(0.0, f64::max);
    let verdict = Fig1Verdict {
        bounded: true,
        residual,
        hausdorff_uv: hausdorff_uv_circle(&curve),
        hausdorff_x,
    };
    Ok(Fig1Run {
        iterates,
        curve,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corenum::{flow, FullField, PerturbedSystem};
    use crate::toruslab::ReturnMap;

    fn eval<F: VectorField>(f: &F, t: f64, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.dim()];
        f.eval(t, z, &mut out).unwrap();
        out
    }

    #[test]
    fn cartesian_examples() {
        let cfg = Example4DConfig::default();
        let f0 = CartesianField::new(&cfg, 0.0);
        assert_eq!(eval(&f0, 0.0, &[1.0, 0.0, 0.0, 0.0]), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(eval(&f0, 0.0, &[0.0, 1.0, 0.5, 0.5]), vec![-1.0, 0.0, 0.0, 0.0]);
        for mu in [-1, 1] {
            let bare = Example4DConfig {
                f: vec![Expr::lit(0.0); 4],
                ..Example4DConfig::new(2, mu)
            };
            let d = eval(&CartesianField::new(&bare, 1.0), 0.0, &[1.0, 0.0, 1.0, 0.0]);
            assert_eq!(d[0], mu as f64);
        }
    }

    #[test]
    fn native_terms_match_expressions() {
        for mu in [-1, 1] {
            let cfg = Example4DConfig::new(3, mu);
            let p = [0.7, -1.2, 0.4, 1.9];
            let g = g_native(mu as f64, &p);
            let mut f = [0.0; 4];
            Terms::DefaultF.eval(&p, &mut f).unwrap();
            for k in 0..4 {
                assert!((g[k] - cfg.g_terms()[k].eval(0.0, &p).unwrap()).abs() < 1e-14);
                assert!((f[k] - cfg.f[k].eval(0.0, &p).unwrap()).abs() < 1e-14);
            }
            let custom = Example4DConfig {
                f: ["x2*x3", "-x1*x4", "x1^3", "x2^3 + 0"].map(px).to_vec(),
                ..cfg.clone()
            };
            let z = [0.3, 0.2, -0.5, 0.8];
            let a = eval(&CartesianField::new(&cfg, 0.2), 0.0, &z);
            let b = eval(&CartesianField::new(&custom, 0.2), 0.0, &z);
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-15));
        }
    }

    #[test]
    fn validation() {
        assert!(Example4DConfig::default().validate().is_ok());
        assert!(matches!(Example4DConfig::new(1, 1).validate(), Err(Example4DError::Order(1))));
        assert!(matches!(Example4DConfig::new(2, 0).validate(), Err(Example4DError::Mu(0))));
        let mut bad = Example4DConfig::default();
        bad.f[2] = px("x1^2");
        assert!(matches!(bad.validate(), Err(Example4DError::Average { which: 2, .. })));
    }

    #[test]
    fn polar_terms_match_closed_form() {
        let sys = cylindrical_system(&Example4DConfig::new(2, -1)).unwrap();
        assert_eq!(sys.order(), 3);
        assert!(sys.term_is_zero(1));
        let mut out = [0.0; 3];
        sys.term(3, 0.0, &[1.0, 0.3, 0.2], &mut out).unwrap();
        assert!((out[0] + 1.0).abs() < 1e-14);
        for &(th, r, u, v) in &[(0.4, 1.3, 0.2, -0.7), (2.5, 0.8, 1.1, 0.4)] {
            sys.term(3, th, &[r, u, v], &mut out).unwrap();
            let closed = -0.5 * r.powi(3) * ((r * r + 1.0) * (2.0 * th).cos() - r * r + 1.0);
            assert!((out[0] - closed).abs() < 1e-13);
            let c2 = (r * th.cos()).powi(2);
            assert!((out[1] - c2 * (u * (1.0 - u * u - v * v) + v)).abs() < 1e-13);
        }
    }

    #[test]
    fn full_system_is_exact() {
        let cfg = Example4DConfig::default();
        let sys = cylindrical_system(&cfg).unwrap();
        let eps = 0.1;
        let z = [1.1, 0.4, -0.3];
        let full = eval(&FullField::new(&sys, eps), 0.7, &z);
        let exact = eval(&CylindricalField::new(&cfg, eps), 0.7, &z);
        for k in 0..3 {
            assert!((full[k] - exact[k]).abs() < 1e-12, "{full:?} {exact:?}");
        }
    }

    #[test]
    fn guard_trips_for_large_eps() {
        let f = CylindricalField::new(&Example4DConfig::default(), 3.0);
        let mut out = [0.0; 3];
        assert!(matches!(f.eval(0.3, &[1.0, 2.0, 2.0], &mut out), Err(FieldError::Guard(_))));
        assert!(matches!(f.eval(0.3, &[0.0, 0.0, 0.0], &mut out), Err(FieldError::Guard(_))));
        let f = CylindricalField::new(&Example4DConfig::default(), 0.0);
        assert_eq!(eval(&f, 1.0, &[1.0, 0.5, 0.5]), vec![0.0; 3]);
    }

    #[test]
    fn guiding_examples() {
        let g = GuidingField::new(1);
        let d = eval(&g, 0.0, &[1.0, 1.0, 0.0]);
        assert!(d[0].abs() < 1e-16 && d[1].abs() < 1e-16);
        assert!((d[2] + 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(eval(&g, 0.0, &[0.0, 0.3, 0.4]), vec![0.0; 3]);
        assert_eq!(eval(&g, 0.0, &[1.0, 0.0, 0.0]), vec![0.0; 3]);
        for s in [0.1, 1.0, 2.0] {
            let d = eval(&GuidingField::new(-1), 0.0, &[1.0, s, 0.7]);
            assert_eq!(d[0], 0.0);
        }
    }

    #[test]
    fn guiding_jacobian_matches_differences() {
        let g = GuidingField::new(-1);
        let z = [1.2, 0.3, -0.8];
        let mut jac = DMatrix::zeros(3, 3);
        g.jacobian(0.0, &z, &mut jac).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let (mut a, mut b) = (z, z);
            a[j] += h;
            b[j] -= h;
            let (fa, fb) = (eval(&g, 0.0, &a), eval(&g, 0.0, &b));
            for i in 0..3 {
                assert!((jac[(i, j)] - (fa[i] - fb[i]) / (2.0 * h)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn guiding_cycle_has_expected_period() {
        let c = guiding_cycle(1, &CycleConfig::default()).unwrap();
        assert!((c.omega - GUIDING_PERIOD).abs() < 1e-6 * GUIDING_PERIOD);
        assert!((c.anchor[0] - 1.0).abs() < 1e-8);
        assert!((c.anchor[1].hypot(c.anchor[2]) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn cartesian_and_polar_agree_after_one_return() {
        let cfg = Example4DConfig::default();
        let eps = 1.0 / 15.0;
        let x0 = [1.05, 0.6, -0.4];
        let sec = section_map(&cfg, eps, 2.0 * PI / 4000.0);
        let a = sec.apply(&x0).unwrap();
        let b = flow(
            &CylindricalField::new(&cfg, eps),
            0.0,
            2.0 * PI,
            &x0,
            &IntegratorConfig::adaptive(1e-12, 1e-12),
        )
        .unwrap();
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-6, "{a:?} {b:?}");
        }
    }

    #[test]
    fn trace_lies_on_guiding_cycle() {
        let g = GuidingField::new(1);
        let frame = guiding_frame();
        let trace = cycle_trace(8);
        for w in trace.windows(2) {
            let d = eval(&g, 0.0, &w[0]);
            assert!(d[0].abs() < 1e-15);
            assert!(frame.angle(&w[1]) > frame.angle(&w[0]) || frame.angle(&w[0]) > 3.0);
        }
    }
}
