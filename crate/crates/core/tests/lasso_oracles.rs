mod common;

use common::*;
use covtest_core::lasso::kkt_violation_on;
use covtest_core::{
    lambda_max, objective, solve_lasso, solve_lasso_restricted, ColumnScaling, Response,
    DEFAULT_TOL,
};
use proptest::prelude::*;
use rand::RngExt;

#[test]
fn lambda_max_matches_columnwise_maximum() {
    let mut r = rng(11);
    let x = gaussian_design(&mut r, 10, 20, ColumnScaling::Raw);
    let y = response(&mut r, 10);
    let mut brute = 0.0f64;
    for j in 0..20 {
        let mut s = 0.0;
        for i in 0..10 {
            s += x.get(i, j) * y.as_slice()[i];
        }
        brute = brute.max(s.abs());
    }
    assert!((lambda_max(&x, &y).unwrap() - brute).abs() < 1e-12);
    // the solution at λ_max is zero, and just below it is not
    let lm = lambda_max(&x, &y).unwrap();
    assert!(solve_lasso(&x, &y, lm, DEFAULT_TOL)
        .unwrap()
        .active_set
        .is_empty());
    assert_eq!(
        solve_lasso(&x, &y, 0.99 * lm, DEFAULT_TOL)
            .unwrap()
            .active_set
            .len(),
        1
    );
}

/// Minimizes over a shrinking grid centred on the best point so far.
fn grid_minimum(f: impl Fn(&[f64]) -> f64, start: [f64; 3], half_width: f64) -> f64 {
    let mut center = start;
    let mut width = half_width;
    let mut best = f(&center);
    let m = 10i32;
    for _ in 0..80 {
        let step = width / m as f64;
        let mut improved = center;
        for a in -m..=m {
            for b in -m..=m {
                for c in -m..=m {
                    let pt = [
                        center[0] + a as f64 * step,
                        center[1] + b as f64 * step,
                        center[2] + c as f64 * step,
                    ];
                    // include exact zeros so kinks are reachable
                    for cand in [pt, pt.map(|v| if v.abs() < step / 2.0 { 0.0 } else { v })] {
                        let v = f(&cand);
                        if v < best {
                            best = v;
                            improved = cand;
                        }
                    }
                }
            }
        }
        center = improved;
        width *= 0.5;
    }
    best
}

#[test]
fn small_instances_match_grid_search() {
    let mut r = rng(5);
    for _ in 0..4 {
        let x = gaussian_design(&mut r, 8, 3, ColumnScaling::Raw);
        let y = response(&mut r, 8);
        let lm = lambda_max(&x, &y).unwrap();
        let lambda = lm * r.random_range(0.05..0.9);
        let fit = solve_lasso(&x, &y, lambda, DEFAULT_TOL).unwrap();
        let solver = objective(&x, &y, &fit.beta, lambda).unwrap();
        let f = |b: &[f64]| objective(&x, &y, b, lambda).unwrap();
        let width = 2.0 * fit.beta.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let grid = grid_minimum(f, [0.0; 3], width);
        assert!(
            solver <= grid + 1e-12,
            "solver {solver} worse than grid {grid}"
        );
        assert!(
            grid - solver < 1e-8,
            "grid {grid} did not reach solver {solver}"
        );
    }
}

#[test]
fn restricted_on_full_set_and_support() {
    let mut r = rng(7);
    for _ in 0..10 {
        let x = gaussian_design(&mut r, 15, 25, ColumnScaling::UnitNorm);
        let y = response(&mut r, 15);
        let lambda = 0.3 * lambda_max(&x, &y).unwrap();
        let full = solve_lasso(&x, &y, lambda, DEFAULT_TOL).unwrap();
        let all: Vec<usize> = (0..25).collect();
        let same = solve_lasso_restricted(&x, &all, &y, lambda, DEFAULT_TOL).unwrap();
        assert_eq!(same, full);
        let on_support =
            solve_lasso_restricted(&x, &full.active_set, &y, lambda, DEFAULT_TOL).unwrap();
        assert!(max_abs_diff(&on_support.beta, &full.beta) < 1e-8);
        // coefficients outside S are exactly zero
        let s = [1usize, 4, 9];
        let sub = solve_lasso_restricted(&x, &s, &y, lambda, DEFAULT_TOL).unwrap();
        assert!(sub
            .beta
            .iter()
            .enumerate()
            .all(|(j, b)| s.contains(&j) || *b == 0.0));
        assert!(kkt_violation_on(&x, y.as_slice(), &sub.beta, lambda, &s) < 1e-8);
    }
}

#[test]
fn objective_is_minimized() {
    let mut r = rng(8);
    let x = gaussian_design(&mut r, 12, 30, ColumnScaling::UnitNorm);
    let y = response(&mut r, 12);
    let lambda = 0.2 * lambda_max(&x, &y).unwrap();
    let fit = solve_lasso(&x, &y, lambda, DEFAULT_TOL).unwrap();
    let best = fit.objective(&x, &y).unwrap();
    let tol = DEFAULT_TOL * y.as_slice().iter().map(|v| v * v).sum::<f64>();
    for _ in 0..200 {
        let scale = r.random_range(0.01..2.0);
        let beta: Vec<f64> = fit
            .beta
            .iter()
            .map(|b| b + scale * r.random_range(-1.0..1.0))
            .collect();
        assert!(objective(&x, &y, &beta, lambda).unwrap() >= best - tol);
    }
}

#[test]
fn sparsity_and_l1_norm_monotone_in_lambda() {
    let mut r = rng(9);
    let x = gaussian_design(&mut r, 20, 40, ColumnScaling::UnitNorm);
    let y = response(&mut r, 20);
    let lm = lambda_max(&x, &y).unwrap();
    for f in [1.0, 1.5, 3.0] {
        assert!(solve_lasso(&x, &y, f * lm, DEFAULT_TOL)
            .unwrap()
            .active_set
            .is_empty());
    }
    let mut prev = f64::INFINITY;
    for i in 1..=40 {
        let lambda = lm * (1.0 - i as f64 / 41.0);
        let b = solve_lasso(&x, &y, lambda, DEFAULT_TOL).unwrap();
        let l1: f64 = b.beta.iter().map(|v| v.abs()).sum();
        // nonincreasing in λ means nondecreasing along this decreasing grid
        assert!(l1 >= prev.min(l1) && (prev == f64::INFINITY || l1 + 1e-10 >= prev));
        prev = l1;
    }
}

#[test]
fn zero_response_is_not_an_error() {
    let mut r = rng(10);
    let x = gaussian_design(&mut r, 5, 3, ColumnScaling::Raw);
    let y = Response::new(vec![0.0; 5]).unwrap();
    let fit = solve_lasso(&x, &y, 0.1, DEFAULT_TOL).unwrap();
    assert_eq!(fit.beta, vec![0.0; 3]);
    assert_eq!(fit.duality_gap, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kkt_certificate(seed in any::<u64>(), n in 5usize..30, p in 2usize..60, frac in 0.02f64..1.2) {
        let mut r = rng(seed);
        let x = gaussian_design(&mut r, n, p, ColumnScaling::UnitNorm);
        let y = response(&mut r, n);
        let lambda = frac * lambda_max(&x, &y).unwrap();
        let fit = solve_lasso(&x, &y, lambda, DEFAULT_TOL).unwrap();
        let y_sq: f64 = y.as_slice().iter().map(|v| v * v).sum();
        prop_assert!(fit.duality_gap <= DEFAULT_TOL * y_sq);
        prop_assert!(fit.kkt_violation(&x, &y) < 1e-6 * (1.0 + lambda));
        let support: Vec<usize> = (0..p).filter(|&j| fit.beta[j] != 0.0).collect();
        prop_assert_eq!(support, fit.active_set.clone());
    }
}
