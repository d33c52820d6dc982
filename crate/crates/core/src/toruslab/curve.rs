//! Closed curves on a section, written in polar form around a frame:
//!
//! ```text
//! p(φ) = c + R(φ) (cos φ e₁ + sin φ e₂) + Σ_k A_k(φ) n_k
//! ```
//!
//! with `R` and each `A_k` a trigonometric polynomial of degree `H`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

const DENSE: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("need points in at least 2 dimensions")]
    Dimension,
    #[error("too few angular bins populated ({0})")]
    TooFewPoints(usize),
    #[error("degenerate frame: {0}")]
    Frame(String),
    #[error("least-squares system is singular")]
    Singular,
    #[error("fitted radius is not positive (min {0:e}); angular ordering fails")]
    SelfIntersecting(f64),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Orthonormal frame: a center, the curve plane `(e₁, e₂)` and its complement.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFrame {
    pub center: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub normals: Vec<Vec<f64>>,
}

impl CurveFrame {
    /// Gram–Schmidt on `e1, e2`, completed with coordinate directions.
    pub fn new(center: Vec<f64>, e1: Vec<f64>, e2: Vec<f64>) -> Result<Self, CurveError> {
        let d = center.len();
        if d < 2 || e1.len() != d || e2.len() != d {
            return Err(CurveError::Dimension);
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
        let candidates = [e1, e2].into_iter().chain((0..d).map(|i| {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            v
        }));
        for (idx, mut v) in candidates.enumerate() {
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let len = norm(&v);
            if len < 1e-10 {
                if idx < 2 {
                    return Err(CurveError::Frame("plane vectors are parallel or zero".into()));
                }
                continue;
            }
            basis.push(v.into_iter().map(|x| x / len).collect());
            if basis.len() == d {
                break;
            }
        }
        let mut it = basis.into_iter();
        let e1 = it.next().expect("two plane vectors");
        let e2 = it.next().expect("two plane vectors");
        Ok(Self {
            center,
            e1,
            e2,
            normals: it.collect(),
        })
    }

    /// Principal-component frame of a point cloud; in 2D the orientation
    /// is the standard one.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, CurveError> {
        let d = points.first().map_or(0, Vec::len);
        if d < 2 {
            return Err(CurveError::Dimension);
        }
        let m = points.len() as f64;
        let mut center = vec![0.0; d];
        for p in points {
            center.iter_mut().zip(p).for_each(|(c, x)| *c += x / m);
        }
        let mut cov = DMatrix::zeros(d, d);
        for p in points {
            let v = DVector::from_iterator(d, p.iter().zip(&center).map(|(x, c)| x - c));
            cov += &v * v.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let col = |i: usize| eig.eigenvectors.column(order[i]).iter().copied().collect::<Vec<f64>>();
        let e1 = col(0);
        let mut e2 = col(1);
        if d == 2 && e1[0] * e2[1] - e1[1] * e2[0] < 0.0 {
            e2.iter_mut().for_each(|x| *x = -*x);
        }
        Self::new(center, e1, e2)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Plane coordinates and normal offsets of `p`.
    pub fn coords(&self, p: &[f64]) -> (f64, f64, Vec<f64>) {
        let v: Vec<f64> = p.iter().zip(&self.center).map(|(x, c)| x - c).collect();
        (
            dot(&v, &self.e1),
            dot(&v, &self.e2),
            self.normals.iter().map(|n| dot(&v, n)).collect(),
        )
    }

    /// Angle of `p` in the curve plane, in `(-π, π]`.
    pub fn angle(&self, p: &[f64]) -> f64 {
        let (a, b, _) = self.coords(p);
        b.atan2(a)
    }
}

/// A closed curve fitted in polar form.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    pub frame: CurveFrame,
    pub harmonics: usize,
    /// `[a₀, a₁, b₁, …, a_H, b_H]` for `R(φ)`.
    pub radial: Vec<f64>,
    /// Same layout for each normal offset `A_k(φ)`.
    pub axial: Vec<Vec<f64>>,
}

fn series(c: &[f64], phi: f64) -> f64 {
    let mut v = c[0];
    for k in 1..=(c.len() - 1) / 2 {
        let kf = k as f64 * phi;
        v += c[2 * k - 1] * kf.cos() + c[2 * k] * kf.sin();
    }
    v
}

impl ClosedCurve {
    pub fn radius(&self, phi: f64) -> f64 {
        series(&self.radial, phi)
    }

    pub fn point(&self, phi: f64) -> Vec<f64> {
        let f = &self.frame;
        let r = self.radius(phi);
        let (c, s) = (phi.cos(), phi.sin());
        let mut p: Vec<f64> = (0..f.dim())
            .map(|i| f.center[i] + r * (c * f.e1[i] + s * f.e2[i]))
            .collect();
        for (n, coef) in f.normals.iter().zip(&self.axial) {
            let a = series(coef, phi);
            p.iter_mut().zip(n).for_each(|(x, y)| *x += a * y);
        }
        p
    }

    /// `k` points at equally spaced angles starting from 0.
    pub fn sample(&self, k: usize) -> Vec<Vec<f64>> {
        (0..k).map(|i| self.point(2.0 * PI * i as f64 / k as f64)).collect()
    }

    /// Amplitude of harmonic `k`, pooled over the radial and axial series.
    pub fn harmonic_amplitude(&self, k: usize) -> f64 {
        if k == 0 || k > self.harmonics {
            return 0.0;
        }
        std::iter::once(&self.radial)
            .chain(&self.axial)
            .map(|c| c[2 * k - 1].hypot(c[2 * k]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Smoothness diagnostic: least-squares slope of `ln amplitude` against
    /// `k` over harmonics above `floor`. More negative means smoother;
    /// `None` with fewer than two such harmonics.
    pub fn harmonic_decay(&self, floor: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = (1..=self.harmonics)
            .map(|k| (k as f64, self.harmonic_amplitude(k)))
            .filter(|p| p.1 > floor)
            .map(|(k, a)| (k, a.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        Some(sxy / sxx)
    }

    pub fn min_radius(&self) -> f64 {
        (0..4 * DENSE)
            .map(|i| self.radius(2.0 * PI * i as f64 / (4 * DENSE) as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn angle(&self, p: &[f64]) -> f64 {
        self.frame.angle(p)
    }

    /// Distance from `p` to the curve: dense scan then golden-section refinement.
    pub fn distance(&self, p: &[f64]) -> f64 {
        let step = 2.0 * PI / DENSE as f64;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..DENSE {
            let phi = i as f64 * step;
            let d = dist(&self.point(phi), p);
            if d < best.0 {
                best = (d, phi);
            }
        }
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (best.1 - step, best.1 + step);
        let f = |phi: f64| dist(&self.point(phi), p);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
            if b - a < 1e-13 {
                break;
            }
        }
        best.0.min(fc).min(fd)
    }
}

/// Options for [`fit_curve`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub harmonics: usize,
    /// Angular bins; defaults to `max(8H, 64)`.
    pub bins: Option<usize>,
    /// Ridge weight `λ k⁴` on harmonic `k`, stabilizing sparse coverage.
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            harmonics: 16,
            bins: None,
            ridge: 1e-6,
        }
    }
}

fn basis(h: usize, phi: f64) -> Vec<f64> {
    let mut r = vec![1.0];
    for k in 1..=h {
        r.push((k as f64 * phi).cos());
        r.push((k as f64 * phi).sin());
    }
    r
}

/// Fits a closed curve to `points` around `frame` (principal components when `None`).
///
/// Each point is weighted by the inverse population of its angular bin so
/// dense and sparse arcs weigh equally.
pub fn fit_curve(points: &[Vec<f64>], frame: Option<&CurveFrame>, opts: &FitOptions) -> Result<ClosedCurve, CurveError> {
    let frame = match frame {
        Some(f) => f.clone(),
        None => CurveFrame::from_points(points)?,
    };
    let h = opts.harmonics;
    let bins = opts.bins.unwrap_or((8 * h).max(64));
    let axial_dim = frame.normals.len();
    let polar: Vec<(f64, f64, Vec<f64>, usize)> = points
        .iter()
        .map(|p| {
            let (a, b, ax) = frame.coords(p);
            let phi = b.atan2(a);
            let idx = (((phi + PI) / (2.0 * PI) * bins as f64) as usize).min(bins - 1);
            (phi, a.hypot(b), ax, idx)
        })
        .collect();
    let mut counts = vec![0usize; bins];
    polar.iter().for_each(|q| counts[q.3] += 1);
    let filled = counts.iter().filter(|&&c| c > 0).count();
    if filled < 3 {
        return Err(CurveError::TooFewPoints(filled));
    }
    let m = 2 * h + 1;
    let mut ata = DMatrix::zeros(m, m);
    let mut aty = DMatrix::zeros(m, 1 + axial_dim);
    for (phi, r, ax, idx) in &polar {
        let w = 1.0 / counts[*idx] as f64;
        let row = basis(h, *phi);
        for i in 0..m {
            let wi = w * row[i];
            aty[(i, 0)] += wi * r;
            for (k, v) in ax.iter().enumerate() {
                aty[(i, k + 1)] += wi * v;
            }
            for j in 0..=i {
                ata[(i, j)] += wi * row[j];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            ata[(j, i)] = ata[(i, j)];
        }
    }
    for i in 1..m {
        let k = ((i + 1) / 2) as f64;
        ata[(i, i)] += opts.ridge * k.powi(4);
    }
    let sol = ata.cholesky().ok_or(CurveError::Singular)?.solve(&aty);
    let radial: Vec<f64> = sol.column(0).iter().copied().collect();
    let axial: Vec<Vec<f64>> = (0..axial_dim).map(|k| sol.column(k + 1).iter().copied().collect()).collect();
    let curve = ClosedCurve {
        frame,
        harmonics: h,
        radial,
        axial,
    };
    let min_r = curve.min_radius();
    if min_r <= 0.0 {
        return Err(CurveError::SelfIntersecting(min_r));
    }
    Ok(curve)
}

fn point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let ap: Vec<f64> = p.iter().zip(a).map(|(x, y)| x - y).collect();
    let len2 = dot(&ab, &ab);
    let t = if len2 == 0.0 { 0.0 } else { (dot(&ap, &ab) / len2).clamp(0.0, 1.0) };
    let q: Vec<f64> = a.iter().zip(&ab).map(|(x, d)| x + t * d).collect();
    dist(p, &q)
}

/// Distance from `p` to a closed polyline.
pub fn polyline_distance(p: &[f64], poly: &[Vec<f64>]) -> f64 {
    (0..poly.len())
        .map(|i| point_segment(p, &poly[i], &poly[(i + 1) % poly.len()]))
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric Hausdorff distance between a curve and a closed polyline.
pub fn hausdorff_to_polyline(curve: &ClosedCurve, poly: &[Vec<f64>]) -> f64 {
    let forward = curve
        .sample(DENSE)
        .iter()
        .map(|p| polyline_distance(p, poly))
        .fold(0.0, f64::max);
    let backward = poly.iter().map(|p| curve.distance(p)).fold(0.0, f64::max);
    forward.max(backward)
}

/// Symmetric Hausdorff distance between two fitted curves.
pub fn hausdorff_curves(a: &ClosedCurve, b: &ClosedCurve) -> f64 {
    let ab = a.sample(DENSE).iter().map(|p| b.distance(p)).fold(0.0, f64::max);
    let ba = b.sample(DENSE).iter().map(|p| a.distance(p)).fold(0.0, f64::max);
    ab.max(ba)
}
