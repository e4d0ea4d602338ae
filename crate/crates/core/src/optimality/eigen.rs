//! Symmetric eigenvalue routines.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Largest eigenvalue of a symmetric matrix and a unit eigenvector whose
/// largest-magnitude entry is positive.
pub fn largest_eigenpair(k: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let n = k.nrows();
    if n == 0 || n != k.ncols() {
        return Err(Error::InvalidArgument("eigenproblem needs a non-empty square matrix".into()));
    }
    if k.iter().all(|&v| v == 0.0) {
        let mut e = DVector::zeros(n);
        e[0] = 1.0;
        return Ok((0.0, e));
    }
    let max_iter = 200 * n;
    let eig = SymmetricEigen::try_new(k.clone(), f64::EPSILON, max_iter).ok_or_else(|| {
        Error::NoConvergence {
            what: "symmetric eigensolve".into(),
            iterations: max_iter,
        }
    })?;
    let i = eig.eigenvalues.imax();
    let mut v = eig.eigenvectors.column(i).into_owned();
    let j = v.iamax();
    if v[j] < 0.0 {
        v.neg_mut();
    }
    Ok((eig.eigenvalues[i], v))
}

/// Cyclic Jacobi rotations. Returns eigenvalues in ascending order and the
/// matching eigenvectors as columns.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    const MAX_SWEEPS: usize = 100;
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let total = m.norm();
    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)] * a[(p, q)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Jacobi eigensolve".into(),
                iterations: sweeps,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (arp, arq) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = c * arp - s * arq;
                    a[(r, q)] = s * arp + c * arq;
                }
                for r in 0..n {
                    let (apr, aqr) = (a[(p, r)], a[(q, r)]);
                    a[(p, r)] = c * apr - s * aqr;
                    a[(q, r)] = s * apr + c * aqr;
                }
                for r in 0..n {
                    let (vrp, vrq) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}
