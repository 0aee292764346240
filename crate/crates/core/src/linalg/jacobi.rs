use super::{Matrix, SymmetricEigen};
use crate::error::{Error, Result};

const SWEEP_CAP: usize = 100;
const RELATIVE_TOL: f64 = 1e-12;

/// Cyclic Jacobi eigensolver for a dense symmetric matrix.
///
/// Rotations are applied in row-major (p, q) order every sweep. The
/// iteration stops once the largest off-diagonal magnitude drops to
/// `1e-12 * ||A||_F`; more than 100 sweeps is reported as
/// [`Error::NoConvergence`].
pub fn jacobi_eigen(matrix: &Matrix) -> Result<SymmetricEigen> {
    let n = matrix.rows();
    debug_assert_eq!(n, matrix.cols());
    let mut a = matrix.clone();
    // rows of `vt` accumulate the eigenvectors
    let mut vt = Matrix::identity(n);
    let tol = RELATIVE_TOL * a.frobenius_norm();

    for sweep in 0..=SWEEP_CAP {
        let max_off = max_off_diagonal(&a);
        if max_off <= tol {
            break;
        }
        if sweep == SWEEP_CAP {
            return Err(Error::NoConvergence {
                iterations: SWEEP_CAP,
                max_off_diagonal: max_off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut vt, p, q);
            }
        }
    }

    let values = (0..n).map(|i| a[(i, i)]).collect();
    Ok(SymmetricEigen::sorted(values, vt))
}

fn max_off_diagonal(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m: f64 = 0.0;
    for i in 0..n {
        for x in &a.row(i)[i + 1..] {
            m = m.max(x.abs());
        }
    }
    m
}

fn rotate(a: &mut Matrix, vt: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.rows();

    // A <- A J (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    // A <- J^T A (rows p, q)
    rotate_rows(a, p, q, c, s);
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    rotate_rows(vt, p, q, c, s);
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    for k in 0..cols {
        let xp = m[(p, k)];
        let xq = m[(q, k)];
        m[(p, k)] = c * xp - s * xq;
        m[(q, k)] = s * xp + c * xq;
    }
}
