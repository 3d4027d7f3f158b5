mod common;

use common::*;
use covtest_core::lasso::kkt_violation_on;
use covtest_core::{
    coef_at, compute_path, compute_path_with, lambda_max, solve_lasso, ColumnScaling, EventKind,
    PathEnd, PathLimits, Response,
};
use proptest::prelude::*;
use rand::RngExt;

fn kkt_scale(y: &Response) -> f64 {
    y.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Fresh fixed-λ solves agree with interpolation along the path.
#[test]
fn coef_at_matches_fixed_lambda_solver() {
    let mut r = rng(2024);
    let mut worst = 0.0f64;
    for inst in 0..100 {
        let n = r.random_range(5..=30);
        let p = r.random_range(2..=60);
        let x = gaussian_design(&mut r, n, p, ColumnScaling::UnitNorm);
        let y = response(&mut r, n);
        let path = compute_path(&x, &y, 10 * (n + p)).unwrap();
        let lo = if path.end == PathEnd::Exhausted {
            0.0
        } else {
            *path.knots.last().unwrap()
        };
        let hi = lambda_max(&x, &y).unwrap();
        for t in 0..20 {
            let lambda = lo + (hi - lo) * (t as f64 + 0.5) / 20.0;
            let a = coef_at(&path, lambda).unwrap();
            let b = solve_lasso(&x, &y, lambda, 1e-14).unwrap().beta;
            let d = max_abs_diff(&a, &b);
            worst = worst.max(d);
            assert!(
                d < 1e-6,
                "instance {inst} (n={n}, p={p}) λ={lambda}: deviation {d}"
            );
        }
    }
    assert!(worst < 1e-6);
}

#[test]
fn every_knot_satisfies_kkt() {
    let mut r = rng(99);
    for _ in 0..40 {
        let n = r.random_range(5..=30);
        let p = r.random_range(2..=60);
        let x = ar1_design(&mut r, n, p, 0.6);
        let y = response(&mut r, n);
        let path = compute_path(&x, &y, 10 * (n + p)).unwrap();
        let all: Vec<usize> = (0..p).collect();
        let tol = 1e-9 * kkt_scale(&y);
        for (k, beta) in path.betas.iter().enumerate() {
            let v = kkt_violation_on(&x, y.as_slice(), beta, path.knots[k], &all);
            assert!(v < tol, "knot {k}: KKT violation {v}");
        }
        if let Some(t) = &path.terminal_beta {
            assert!(kkt_violation_on(&x, y.as_slice(), t, 0.0, &all) < tol);
        }
    }
}

#[test]
fn knots_are_nonincreasing_and_sets_follow_events() {
    let mut r = rng(5);
    for _ in 0..30 {
        let x = ar1_design(&mut r, 25, 40, 0.8);
        let y = response(&mut r, 25);
        let path = compute_path(&x, &y, 500).unwrap();
        assert!(path.knots.windows(2).all(|w| w[1] <= w[0]));
        let mut set: Vec<usize> = Vec::new();
        for (k, e) in path.events.iter().enumerate() {
            assert_eq!(e.step, k + 1);
            match e.kind {
                EventKind::Enter => set.push(e.variable),
                EventKind::Leave => set.retain(|&j| j != e.variable),
            }
            let mut sorted = set.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, path.active_sets[k]);
            // support at the next knot lies inside the segment's active set
            let next = path.betas.get(k + 1).or(path.terminal_beta.as_ref());
            if let Some(b) = next {
                assert!(b
                    .iter()
                    .enumerate()
                    .all(|(j, &v)| v == 0.0 || sorted.contains(&j)));
            }
        }
    }
}

#[test]
fn first_knot_is_lambda_max_and_orthonormal_knots_are_sorted_correlations() {
    let mut r = rng(8);
    let x = orthonormal_design(&mut r, 30, 8);
    let y = response(&mut r, 30);
    let path = compute_path(&x, &y, 100).unwrap();
    let mut corr: Vec<f64> = x.t_mul(y.as_slice()).iter().map(|c| c.abs()).collect();
    corr.sort_by(|a, b| b.partial_cmp(a).unwrap());
    assert_eq!(path.len(), 8);
    assert!(max_abs_diff(&path.knots, &corr) < 1e-12);
    assert_eq!(path.end, PathEnd::Exhausted);
    assert!(path.events.iter().all(|e| e.kind == EventKind::Enter));
}

#[test]
fn terminal_solution_is_least_squares_when_n_exceeds_p() {
    let mut r = rng(12);
    let x = gaussian_design(&mut r, 30, 6, ColumnScaling::UnitNorm);
    let y = response(&mut r, 30);
    let path = compute_path(&x, &y, 200).unwrap();
    let t = path.terminal_beta.as_ref().unwrap();
    let ls = covtest_core::ls_refit(&x, &[0, 1, 2, 3, 4, 5], &y).unwrap();
    assert!(max_abs_diff(t, &ls.coef) < 1e-9);
}

#[test]
fn wide_design_stops_with_n_active() {
    let mut r = rng(13);
    let x = gaussian_design(&mut r, 12, 40, ColumnScaling::UnitNorm);
    let y = response(&mut r, 12);
    let path = compute_path(&x, &y, 1000).unwrap();
    assert_eq!(path.end, PathEnd::RankDeficient);
    assert_eq!(path.final_active_set().len(), 12);
    assert!(*path.knots.last().unwrap() > 0.0);
    assert!(coef_at(&path, 0.5 * path.knots.last().unwrap()).is_err());
}

#[test]
fn entry_budget_truncates_after_distinct_entries() {
    let mut r = rng(21);
    let x = ar1_design(&mut r, 30, 50, 0.5);
    let y = response(&mut r, 30);
    let limits = PathLimits {
        max_steps: 1000,
        max_distinct_entries: Some(4),
    };
    let path = compute_path_with(&x, &y, limits).unwrap();
    assert!(path.max_steps_reached);
    let mut distinct: Vec<usize> = path.entries().map(|(_, j)| j).collect();
    distinct.sort_unstable();
    distinct.dedup();
    assert_eq!(distinct.len(), 4);
    let full = compute_path(&x, &y, 1000).unwrap();
    assert_eq!(full.knots[..path.len()], path.knots[..]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn path_solutions_match_solver(seed in any::<u64>(), n in 4usize..20, p in 2usize..25, frac in 0.05f64..0.95) {
        let mut r = rng(seed);
        let x = ar1_design(&mut r, n, p, 0.4);
        let y = response(&mut r, n);
        let path = compute_path(&x, &y, 20 * (n + p)).unwrap();
        let lo = if path.end == PathEnd::Exhausted { 0.0 } else { *path.knots.last().unwrap() };
        let lambda = lo + frac * (path.knots[0] - lo);
        let a = coef_at(&path, lambda).unwrap();
        let b = solve_lasso(&x, &y, lambda, 1e-14).unwrap().beta;
        prop_assert!(max_abs_diff(&a, &b) < 1e-6);
    }
}
