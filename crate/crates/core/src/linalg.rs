//! Small dense linear algebra over the [`Scalar`] trait.
//!
//! All matrices here are tiny (m <= 3 inputs, n <= 6 states); everything is
//! row-major `Vec<Vec<_>>` and direct factorizations.

use crate::error::FilterError;
use crate::scalar::Scalar;

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<T: Scalar>(a: &[T], s: T) -> Vec<T> {
    a.iter().map(|&x| x * s).collect()
}

/// `y + s * x`
pub fn axpy<T: Scalar>(y: &[T], s: T, x: &[T]) -> Vec<T> {
    y.iter().zip(x).map(|(&yi, &xi)| yi + s * xi).collect()
}

/// Constant (f64) matrix times a generic vector.
pub fn mat_vec_f64<T: Scalar>(m: &[Vec<f64>], v: &[T]) -> Vec<T> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(T::zero(), |acc, (&mij, &vj)| acc + T::from_f64(mij) * vj)
        })
        .collect()
}

pub fn mat_vec<T: Scalar>(m: &[Vec<T>], v: &[T]) -> Vec<T> {
    m.iter().map(|row| dot(row, v)).collect()
}

pub fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn mat_mul_f64(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let p = b[0].len();
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for (k, &aik) in a[i].iter().enumerate() {
            for j in 0..p {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
///
/// Pivots are checked on the primal value so the factorization also works
/// on dual numbers.
pub fn cholesky<T: Scalar>(m: &[Vec<T>]) -> Result<Vec<Vec<T>>, FilterError> {
    let n = m.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            if i == j {
                let p = s.primal();
                if !(p.is_finite() && p > 0.0) {
                    return Err(FilterError::SolveFailure);
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solve `L L^T x = b` given the lower factor.
pub fn cholesky_solve<T: Scalar>(l: &[Vec<T>], b: &[T]) -> Vec<T> {
    let n = l.len();
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Direct SPD solve `m x = b`.
pub fn solve_spd<T: Scalar>(m: &[Vec<T>], b: &[T]) -> Result<Vec<T>, FilterError> {
    let l = cholesky(m)?;
    Ok(cholesky_solve(&l, b))
}

/// Inverse of a symmetric positive-definite f64 matrix.
pub fn invert_spd(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, FilterError> {
    let n = m.len();
    let l = cholesky(m)?;
    let mut inv = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = cholesky_solve(&l, &e);
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solve_roundtrip() {
        let m: Vec<Vec<f64>> = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let b = vec![1.0, 2.0];
        let x = solve_spd(&m, &b).unwrap();
        let r = mat_vec(&m, &x);
        assert!((r[0] - b[0]).abs() < 1e-12);
        assert!((r[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn invert_spd_gives_identity_product() {
        let m = vec![vec![2.0, 0.5, 0.0], vec![0.5, 1.5, 0.2], vec![0.0, 0.2, 1.0]];
        let inv = invert_spd(&m).unwrap();
        let prod = mat_mul_f64(&m, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i][j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(cholesky(&m).is_err());
    }
}
