//! Small dense linear algebra over [`Scalar`], row-major `Vec<Vec<R>>`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Matrix<R> = Vec<Vec<R>>;

/// Pivots whose value falls below this fraction of the largest entry are
/// treated as zero.
const SINGULAR_RATIO: f64 = 1e-13;

fn max_abs<R: Scalar>(a: &Matrix<R>) -> f64 {
    a.iter()
        .flat_map(|row| row.iter())
        .fold(0.0, |m, v| m.max(v.value().abs()))
}

/// LU with partial pivoting on the base-point values. Returns the factored
/// matrix, the permutation and its sign.
fn lu<R: Scalar>(a: &Matrix<R>) -> Result<(Matrix<R>, Vec<usize>, f64)> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension {
            expected: n,
            got: a.iter().map(|r| r.len()).find(|&l| l != n).unwrap_or(n),
        });
    }
    let scale = max_abs(a);
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                lu[i][col]
                    .value()
                    .abs()
                    .total_cmp(&lu[j][col].value().abs())
            })
            .unwrap();
        let pv = lu[pivot][col].value();
        if pv.abs() <= SINGULAR_RATIO * scale || pv == 0.0 {
            return Err(Error::SingularJacobian { det: 0.0 });
        }
        if pivot != col {
            lu.swap(pivot, col);
            perm.swap(pivot, col);
            sign = -sign;
        }
        for row in col + 1..n {
            let factor = lu[row][col].checked_div(&lu[col][col])?;
            for k in col + 1..n {
                let delta = factor.clone() * lu[col][k].clone();
                lu[row][k] = lu[row][k].clone() - delta;
            }
            lu[row][col] = factor;
        }
    }
    Ok((lu, perm, sign))
}

pub fn determinant<R: Scalar>(a: &Matrix<R>) -> Result<R> {
    match lu(a) {
        Ok((lu, _, sign)) => {
            let mut det = lu[0][0].scale(sign);
            for (i, row) in lu.iter().enumerate().skip(1) {
                det = det * row[i].clone();
            }
            Ok(det)
        }
        Err(Error::SingularJacobian { .. }) => Ok(a[0][0].lift(0.0)),
        Err(e) => Err(e),
    }
}

fn lu_solve<R: Scalar>(lu: &Matrix<R>, perm: &[usize], b: &[R]) -> Result<Vec<R>> {
    let n = lu.len();
    let mut y: Vec<R> = perm.iter().map(|&p| b[p].clone()).collect();
    for i in 0..n {
        for k in 0..i {
            let d = lu[i][k].clone() * y[k].clone();
            y[i] = y[i].clone() - d;
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let d = lu[i][k].clone() * y[k].clone();
            y[i] = y[i].clone() - d;
        }
        y[i] = y[i].checked_div(&lu[i][i])?;
    }
    Ok(y)
}

pub fn solve<R: Scalar>(a: &Matrix<R>, b: &[R]) -> Result<Vec<R>> {
    if b.len() != a.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (lu, perm, _) = lu(a).map_err(|e| with_det(e, a))?;
    lu_solve(&lu, &perm, b)
}

pub fn inverse<R: Scalar>(a: &Matrix<R>) -> Result<Matrix<R>> {
    let n = a.len();
    let (lu, perm, _) = lu(a).map_err(|e| with_det(e, a))?;
    let zero = a[0][0].lift(0.0);
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![zero.clone(); n];
        e[j] = zero.lift(1.0);
        cols.push(lu_solve(&lu, &perm, &e)?);
    }
    Ok((0..n)
        .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
        .collect())
}

fn with_det<R: Scalar>(e: Error, a: &Matrix<R>) -> Error {
    match e {
        Error::SingularJacobian { .. } => Error::SingularJacobian {
            det: plain_det(a),
        },
        other => other,
    }
}

/// Determinant of the base values by cofactor expansion (n ≤ 4 here).
fn plain_det<R: Scalar>(a: &Matrix<R>) -> f64 {
    let v: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| x.value()).collect()).collect();
    fn rec(m: &[Vec<f64>]) -> f64 {
        if m.len() == 1 {
            return m[0][0];
        }
        (0..m.len())
            .map(|j| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, x)| *x).collect())
                    .collect();
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * m[0][j] * rec(&minor)
            })
            .sum()
    }
    rec(&v)
}

pub fn mat_vec<R: Scalar>(a: &Matrix<R>, x: &[R]) -> Vec<R> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .map(|(a, b)| a.clone() * b.clone())
                .reduce(|s, v| s + v)
                .expect("non-empty row")
        })
        .collect()
}

pub fn mat_mul(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
    let n = a.len();
    let p = b[0].len();
    (0..n)
        .map(|i| (0..p).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn identity(n: usize) -> Matrix<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}
