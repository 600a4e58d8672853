//! Small dense complex solvers for the per-bin filter computation.

use num_complex::Complex64;

use crate::covariance::HermitianMatrix;

/// Solves `A·x = b` for Hermitian positive-definite `A` by Cholesky
/// factorization, falling back to Gaussian elimination with partial
/// pivoting when `A` is not numerically positive definite.
///
/// Returns `None` when neither route yields a finite solution.
pub fn hermitian_solve(a: &HermitianMatrix, b: &[Complex64]) -> Option<Vec<Complex64>> {
    cholesky_solve(a.dim(), a.entries(), b).or_else(|| pivoted_solve(a.dim(), a.entries(), b))
}

fn all_finite(x: &[Complex64]) -> bool {
    x.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

pub(crate) fn cholesky_solve(n: usize, a: &[Complex64], b: &[Complex64]) -> Option<Vec<Complex64>> {
    // Lower factor, row-major; the diagonal is real and positive.
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        l[j * n + j] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / ljj;
        }
    }

    // Forward: L·z = b.
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i].re;
    }
    // Backward: Lᴴ·x = z.
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * z[k];
        }
        z[i] = s / l[i * n + i].re;
    }
    all_finite(&z).then_some(z)
}

pub(crate) fn pivoted_solve(n: usize, a: &[Complex64], b: &[Complex64]) -> Option<Vec<Complex64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i * n + col].norm().total_cmp(&m[j * n + col].norm()))?;
        let p = m[pivot * n + col];
        if p.norm() == 0.0 || !p.norm().is_finite() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            x.swap(pivot, col);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / p;
            if f.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[row * n + k] -= f * v;
            }
            let v = x[col];
            x[row] -= f * v;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    all_finite(&x).then_some(x)
}
