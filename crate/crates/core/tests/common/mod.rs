#![allow(dead_code)]

use covtest_core::{ColumnScaling, DesignMatrix, Response};
use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn gaussian_design(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: usize,
    scaling: ColumnScaling,
) -> DesignMatrix {
    DesignMatrix::from_col_major(n, p, normals(rng, n * p), scaling).unwrap()
}

/// Gaussian design with Toeplitz correlation ρ^|i−j| between columns.
pub fn ar1_design(rng: &mut ChaCha8Rng, n: usize, p: usize, rho: f64) -> DesignMatrix {
    let mut vals = vec![0.0; n * p];
    let s = (1.0 - rho * rho).sqrt();
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 { z } else { rho * prev + s * z };
            vals[j * n + i] = v;
            prev = v;
        }
    }
    DesignMatrix::from_col_major(n, p, vals, ColumnScaling::UnitNorm).unwrap()
}

pub fn response(rng: &mut ChaCha8Rng, n: usize) -> Response {
    Response::new(normals(rng, n)).unwrap()
}

/// n×p matrix with orthonormal columns (Q factor of a Gaussian matrix).
pub fn orthonormal_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DesignMatrix {
    let g = DMatrix::from_column_slice(n, p, &normals(rng, n * p));
    let q = g.qr().q();
    DesignMatrix::from_col_major(n, p, q.as_slice()[..n * p].to_vec(), ColumnScaling::Raw).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
