mod common;

use common::*;
use covtest_core::{
    assign_cov_pvals, computable_cov_steps, compute_path, cov_drop, cov_sequence, lambda_max,
    refit_sequence, select_cov_stop, solve_lasso, ColumnScaling, DesignMatrix, EventKind, Response,
    DEFAULT_TOL,
};
use proptest::prelude::*;
use rand::RngExt;

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1.0)
}

#[test]
fn two_forms_agree_on_random_instances() {
    let mut r = rng(600);
    for _ in 0..200 {
        let n = r.random_range(5..=25);
        let p = r.random_range(2..=40);
        let x = gaussian_design(&mut r, n, p, ColumnScaling::UnitNorm);
        let y = response(&mut r, n);
        let lambda = r.random_range(0.05..0.95) * lambda_max(&x, &y).unwrap();
        let s: Vec<usize> = (0..p).filter(|_| r.random_bool(0.4)).collect();
        let d = cov_drop(&x, &y, &s, lambda, 1.3).unwrap();
        let scale: f64 = y.as_slice().iter().map(|v| v * v).sum::<f64>() / 1.3;
        assert!(rel(d.value_objective_form, d.value_inner_product_form, scale) < 1e-6);
    }
}

#[test]
fn superset_of_support_gives_zero() {
    let mut r = rng(601);
    let x = gaussian_design(&mut r, 10, 15, ColumnScaling::UnitNorm);
    let y = response(&mut r, 10);
    let lambda = 0.4 * lambda_max(&x, &y).unwrap();
    let full = solve_lasso(&x, &y, lambda, DEFAULT_TOL).unwrap();
    let mut s = full.active_set.clone();
    s.push((0..15).find(|j| !s.contains(j)).unwrap());
    assert!(cov_drop(&x, &y, &s, lambda, 1.0).unwrap().value().abs() < 1e-6);
}

#[test]
fn active_set_at_its_own_knot_gives_zero() {
    let mut r = rng(602);
    let x = ar1_design(&mut r, 20, 30, 0.5);
    let y = response(&mut r, 20);
    let path = compute_path(&x, &y, 10).unwrap();
    for k in 1..path.len() {
        let d = cov_drop(&x, &y, &path.active_sets[k - 1], path.knots[k], 1.0).unwrap();
        assert!(d.value().abs() < 1e-6, "step {k}: {}", d.value());
    }
}

#[test]
fn orthonormal_design_closed_forms() {
    let mut r = rng(603);
    for _ in 0..20 {
        let x = orthonormal_design(&mut r, 40, 12);
        let y = response(&mut r, 40);
        let sigma2 = r.random_range(0.5..2.0);
        let path = compute_path(&x, &y, 100).unwrap();
        let steps = computable_cov_steps(&path);
        assert_eq!(steps, 12);
        let seq = cov_sequence(&x, &y, &path, sigma2, steps).unwrap();
        for e in &seq.entries {
            let expected = (e.lambda_k * e.lambda_k - e.lambda_k * e.lambda_next) / sigma2;
            assert!(
                (e.statistic - expected).abs() < 1e-8,
                "T_{} = {} vs {expected}",
                e.k,
                e.statistic
            );
            assert!((e.p_value - (-e.statistic.max(0.0)).exp()).abs() < 1e-15);
        }
        let refit = refit_sequence(&x, &y, &path, sigma2, 12).unwrap();
        for (s, e) in refit.iter().zip(&seq.entries) {
            let expected = e.lambda_k * e.lambda_k / sigma2;
            assert!((s.drop.as_ref().unwrap().value - expected).abs() < 1e-8);
        }
    }
}

#[test]
fn scale_equivariance() {
    let mut r = rng(604);
    for _ in 0..10 {
        let x = ar1_design(&mut r, 30, 20, 0.5);
        let y = response(&mut r, 30);
        let c = r.random_range(0.2..5.0);
        let a = compute_path(&x, &y, 8).unwrap();
        let b = compute_path(&x, &y.scaled(c), 8).unwrap();
        let steps = computable_cov_steps(&a)
            .min(computable_cov_steps(&b))
            .min(6);
        let ta = cov_sequence(&x, &y, &a, 1.0, steps).unwrap();
        let tb = cov_sequence(&x, &y.scaled(c), &b, c * c, steps).unwrap();
        for (u, v) in ta.entries.iter().zip(&tb.entries) {
            assert_eq!(u.entered_variable, v.entered_variable);
            assert!((u.statistic - v.statistic).abs() < 1e-8 * (1.0 + u.statistic.abs()));
        }
    }
}

/// Columns 0 and 1 carry equal large coefficients; the remaining columns are noise.
fn equal_coefficient_data(r: &mut rand_chacha::ChaCha8Rng, b: f64) -> (DesignMatrix, Response) {
    let (n, p) = (100, 20);
    let x = gaussian_design(r, n, p, ColumnScaling::UnitNorm);
    let noise = normals(r, n);
    let y: Vec<f64> = (0..n)
        .map(|i| b * (x.get(i, 0) + x.get(i, 1)) + noise[i])
        .collect();
    (x, Response::new(y).unwrap())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

#[test]
fn equal_coefficients_shrink_first_statistic_but_not_refit() {
    let mut r = rng(605);
    let (mut t1, mut r1) = (Vec::new(), Vec::new());
    for _ in 0..100 {
        let (x, y) = equal_coefficient_data(&mut r, 10.0);
        let path = compute_path(&x, &y, 10).unwrap();
        t1.push(cov_sequence(&x, &y, &path, 1.0, 1).unwrap().entries[0].statistic);
        r1.push(
            refit_sequence(&x, &y, &path, 1.0, 1).unwrap()[0]
                .drop
                .as_ref()
                .unwrap()
                .value,
        );
    }
    let (mt, mr) = (median(t1), median(r1));
    // λ̂_1 ≈ λ̂_2, so T_1 is small relative to the signal
    assert!(mt < 0.1 * mr, "median T_1 {mt}, median refit {mr}");
}

#[test]
fn stop_rule_and_assignment_on_real_path() {
    let mut r = rng(606);
    let x = ar1_design(&mut r, 50, 10, 0.3);
    let noise = normals(&mut r, 50);
    let y: Vec<f64> = (0..50)
        .map(|i| 8.0 * x.get(i, 3) + 6.0 * x.get(i, 7) + 0.3 * noise[i])
        .collect();
    let y = Response::new(y).unwrap();
    let path = compute_path(&x, &y, 100).unwrap();
    let seq = cov_sequence(&x, &y, &path, 0.09, computable_cov_steps(&path)).unwrap();
    assert_eq!(select_cov_stop(&seq, 0.05), vec![3, 7]);
    let map = assign_cov_pvals(&seq, &path);
    assert_eq!(
        map.keys().copied().collect::<Vec<_>>(),
        path.final_active_set().to_vec()
    );
}

/// Searches small correlated instances for an enter–leave–enter history.
#[test]
fn reentry_receives_last_entry_pvalue() {
    let mut r = rng(607);
    let mut found = false;
    for _ in 0..2000 {
        let x = ar1_design(&mut r, 8, 4, 0.9);
        let y = response(&mut r, 8);
        let path = compute_path(&x, &y, 100).unwrap();
        let Some(left) = path
            .events
            .iter()
            .find(|e| e.kind == EventKind::Leave)
            .map(|e| e.variable)
        else {
            continue;
        };
        let enters: Vec<usize> = path
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Enter && e.variable == left)
            .map(|e| e.step)
            .collect();
        if enters.len() < 2 || !path.final_active_set().contains(&left) {
            continue;
        }
        let seq = cov_sequence(&x, &y, &path, 1.0, computable_cov_steps(&path)).unwrap();
        let last = *enters.last().unwrap();
        let Some(expected) = seq
            .entries
            .iter()
            .find(|e| e.step == last)
            .map(|e| e.p_value)
        else {
            continue;
        };
        let map = assign_cov_pvals(&seq, &path);
        assert_eq!(map[&left], expected);
        found = true;
        break;
    }
    assert!(found, "no re-entry instance found");
}

#[test]
fn left_variable_is_absent_from_assignment() {
    let mut r = rng(608);
    for _ in 0..2000 {
        let x = ar1_design(&mut r, 8, 12, 0.9);
        let y = response(&mut r, 8);
        let path = compute_path(&x, &y, 100).unwrap();
        let seq = cov_sequence(&x, &y, &path, 1.0, computable_cov_steps(&path)).unwrap();
        let map = assign_cov_pvals(&seq, &path);
        for e in path.events.iter().filter(|e| e.kind == EventKind::Leave) {
            if !path.final_active_set().contains(&e.variable) {
                assert!(!map.contains_key(&e.variable));
                return;
            }
        }
    }
    panic!("no instance with a permanent leave");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn statistics_are_nonnegative(seed in any::<u64>(), n in 6usize..25, p in 2usize..30) {
        let mut r = rng(seed);
        let x = ar1_design(&mut r, n, p, 0.5);
        let y = response(&mut r, n);
        let path = compute_path(&x, &y, 4 * (n + p)).unwrap();
        let steps = computable_cov_steps(&path);
        let seq = cov_sequence(&x, &y, &path, 1.0, steps).unwrap();
        for e in &seq.entries {
            prop_assert!(e.statistic >= -1e-8);
            prop_assert!((0.0..=1.0).contains(&e.p_value));
        }
    }
}
