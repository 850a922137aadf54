//! Cyclic Jacobi eigensolver for complex Hermitian matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{HeffError, Result};

const MAX_SWEEPS: usize = 100;

fn off_norm_sqr(a: &DMatrix<Complex64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s
}

/// Eigenvalues (ascending) and, if requested, unit eigenvectors as columns.
///
/// Each rotation zeroes `a[p][q]` with the unitary
/// `J = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]` on rows/columns `p, q`,
/// `phi` the phase of `a[p][q]`.
pub fn jacobi_eigen(
    m: &DMatrix<Complex64>,
    vectors: bool,
) -> Result<(Vec<f64>, Option<DMatrix<Complex64>>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(HeffError::invalid(
            "eigendecomposition needs a square matrix",
        ));
    }
    let mut a = m.clone();
    let mut v = vectors.then(|| DMatrix::<Complex64>::identity(n, n));
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let target = (f64::EPSILON * f64::EPSILON) * scale;

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged || off_norm_sqr(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b == 0.0 || b * b <= target / (n * n) as f64 {
                    continue;
                }
                let phase = apq / b;
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                let theta = (aqq - app) / (2.0 * b);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let e = phase.conj();
                // A <- A J
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * c - akq * e * s;
                    a[(k, q)] = akp * s + akq * e * c;
                }
                // A <- J^H A
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = apk * c - aqk * e.conj() * s;
                    a[(q, k)] = apk * s + aqk * e.conj() * c;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = vkp * c - vkq * e * s;
                        v[(k, q)] = vkp * s + vkq * e * c;
                    }
                }
            }
        }
    }
    if !converged && off_norm_sqr(&a) > target {
        return Err(HeffError::invalid(format!(
            "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.map(|v| DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]));
    Ok((values, vectors))
}
