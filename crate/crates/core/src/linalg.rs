//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::design::DesignMatrix;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators keep the loop vectorizable
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = 4 * i;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn l1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Gram matrix X_Sᵀ X_S for the listed columns.
pub fn gram(x: &DesignMatrix, cols: &[usize]) -> DMatrix<f64> {
    let k = cols.len();
    let mut g = DMatrix::zeros(k, k);
    for a in 0..k {
        let ca = x.col(cols[a]);
        for b in 0..=a {
            let v = dot(ca, x.col(cols[b]));
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

/// Solves `G v = rhs` for symmetric positive definite `G`, rejecting
/// numerically singular systems.
pub fn spd_solve(g: DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    spd_solve_many(g, &[rhs]).map(|mut v| v.remove(0))
}

/// [`spd_solve`] for several right-hand sides sharing one factorization.
pub fn spd_solve_many(g: DMatrix<f64>, rhs: &[&[f64]]) -> Option<Vec<Vec<f64>>> {
    let k = g.nrows();
    if k == 0 {
        return Some(vec![Vec::new(); rhs.len()]);
    }
    let max_diag = (0..k).map(|i| g[(i, i)]).fold(0.0f64, f64::max);
    let chol = g.cholesky()?;
    let l = chol.l_dirty();
    let min_pivot = (0..k)
        .map(|i| l[(i, i)] * l[(i, i)])
        .fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-12 * max_diag) {
        return None;
    }
    rhs.iter()
        .map(|b| {
            let sol = chol.solve(&DVector::from_column_slice(b));
            sol.iter()
                .all(|v| v.is_finite())
                .then(|| sol.as_slice().to_vec())
        })
        .collect()
}

/// X_S v as an n-vector.
pub fn mul_cols(x: &DesignMatrix, cols: &[usize], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.n()];
    for (&j, &c) in cols.iter().zip(v) {
        if c != 0.0 {
            axpy(c, x.col(j), &mut out);
        }
    }
    out
}
