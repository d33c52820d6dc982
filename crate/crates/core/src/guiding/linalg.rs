use nalgebra::{Complex, DMatrix, Schur};

/// Diagonal similarity `D⁻¹ A D` with power-of-two entries that equalizes
/// row and column norms (Parlett–Reinsch). Eigenvalues are unchanged.
pub fn balance(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut b = a.clone();
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c > g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
    }
    b
}

/// Cap on Schur sweeps in [`eigenvalues`].
pub const EIGEN_MAX_ITER: usize = 10_000;

/// Eigenvalues of a real square matrix, computed after balancing; `None`
/// if the Schur iteration does not converge.
pub fn eigenvalues(a: &DMatrix<f64>) -> Option<Vec<Complex<f64>>> {
    let schur = Schur::try_new(balance(a), f64::EPSILON, EIGEN_MAX_ITER)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Principal square root by the Denman–Beavers iteration.
pub fn sqrtm(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if !y.iter().all(|v| v.is_finite()) {
            return None;
        }
        if delta <= 1e-15 * y.norm() {
            return Some(y);
        }
    }
    Some(y)
}

/// Principal logarithm by inverse scaling and squaring.
///
/// Repeated square roots bring the matrix within 1/4 of the identity, then
/// the series `log X = 2 Σ Y^{2j+1}/(2j+1)` with `Y = (X−I)(X+I)⁻¹` is summed.
/// Fails when the spectrum touches the closed negative real axis.
pub fn logm(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut x = a.clone();
    let mut k = 0u32;
    while (&x - &eye).norm() > 0.25 {
        if k >= 60 {
            return None;
        }
        x = sqrtm(&x)?;
        k += 1;
    }
    let y = (&x - &eye) * (&x + &eye).try_inverse()?;
    let y2 = &y * &y;
    let mut term = y.clone();
    let mut sum = y.clone();
    for j in 1..200 {
        term = &term * &y2;
        let add = &term / (2 * j + 1) as f64;
        sum += &add;
        if add.norm() <= 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    let scale = 2.0 * 2f64.powi(k as i32);
    Some(sum * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balance_preserves_spectrum() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1e6, 0.0, 1e-6, 2.0, 1e5, 0.0, 1e-5, 3.0]);
        let mut ev: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|c| c.re).collect();
        ev.sort_by(f64::total_cmp);
        let mut raw: Vec<f64> = a.complex_eigenvalues().iter().map(|c| c.re).collect();
        raw.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&raw) {
            assert!((x - y).abs() < 1e-9);
        }
        let b = balance(&a);
        assert!(b.norm() < a.norm());
    }

    #[test]
    fn sqrt_and_log() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 0.0, 9.0]);
        let s = sqrtm(&a).unwrap();
        assert!((&s * &s - &a).norm() < 1e-12);
        let l = logm(&a).unwrap();
        assert!((l.exp() - &a).norm() < 1e-12 * a.norm());
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let l = logm(&rot).unwrap();
        assert!((l[(1, 0)] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(logm(&DMatrix::from_diagonal_element(2, 2, -1.0)).is_none());
    }
}
