use covtest_core::{compute_path, ColumnScaling, DesignMatrix};
use covtest_sim::config::{ScenarioConfig, SignPattern};
use covtest_sim::diagnostics::{irrepresentable_eta, irrepresentable_report, screening_rate};
use covtest_sim::generate::replicate_rng;
use covtest_sim::{gen_ar1_design, Replicate};
use nalgebra::{DMatrix, DVector};

fn cfg(n: usize, p: usize, k0: usize, coef_size: f64, runs: usize) -> ScenarioConfig {
    ScenarioConfig {
        n,
        p,
        rho: 0.5,
        k0,
        coef_size,
        sigma: 1.0,
        runs,
        seed: 77,
        column_scaling: ColumnScaling::UnitNorm,
        signs: SignPattern::Positive,
    }
}

fn to_matrix(x: &DesignMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(x.n(), x.p(), |i, j| x.get(i, j))
}

/// max_j max_τ |X_jᵀ X_A0 (X_A0ᵀ X_A0)⁻¹ τ| over sign vertices, with an LU inverse.
fn vertex_sup(x: &DesignMatrix, a0: &[usize]) -> f64 {
    let m = to_matrix(x);
    let xa = m.select_columns(a0);
    let ginv = (xa.transpose() * &xa).lu().try_inverse().unwrap();
    let proj = &xa * ginv;
    let k = a0.len();
    let mut best = 0.0f64;
    for j in (0..x.p()).filter(|j| !a0.contains(j)) {
        let row = proj.transpose() * m.column(j);
        for mask in 0u32..(1 << k) {
            let tau = DVector::from_fn(k, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 });
            best = best.max(row.dot(&tau).abs());
        }
    }
    best
}

#[test]
fn eta_matches_vertex_enumeration() {
    for inst in 0..50 {
        let p = 14 + inst % 10;
        let c = cfg(40, p, 1, 1.0, 1);
        let x = gen_ar1_design(&c, &mut replicate_rng(100, inst)).unwrap();
        let k = 1 + inst % 10;
        let a0: Vec<usize> = (0..k)
            .map(|i| (i * 7 + inst) % p)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let eta = irrepresentable_eta(&x, &a0).unwrap();
        let brute = vertex_sup(&x, &a0);
        assert!(
            (eta - brute).abs() < 1e-10,
            "instance {inst}: {eta} vs {brute}"
        );
    }
}

#[test]
fn eta_special_cases() {
    let cols = vec![
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 2.0, 0.0, 0.0],
        vec![0.0, 0.0, 3.0, 0.0],
    ];
    let x = DesignMatrix::from_columns(&cols, ColumnScaling::Raw).unwrap();
    assert_eq!(irrepresentable_eta(&x, &[0, 2]).unwrap(), 0.0);
    let dup = vec![
        vec![1.0, 2.0, 0.5, 1.0],
        vec![0.0, 1.0, 3.0, -1.0],
        vec![1.0, 2.0, 0.5, 1.0],
    ];
    let x = DesignMatrix::from_columns(&dup, ColumnScaling::Raw).unwrap();
    assert!((irrepresentable_eta(&x, &[0, 1]).unwrap() - 1.0).abs() < 1e-12);
    assert!(irrepresentable_eta(&x, &[0, 2]).is_err());
}

#[test]
fn report_with_zero_noise() {
    let c = cfg(30, 10, 2, 3.0, 1);
    let rep = Replicate::draw(&c, 0).unwrap();
    let data = rep.scenario(&c);
    let path = compute_path(&rep.x, &data.y, 200).unwrap();
    let r = irrepresentable_report(&rep.x, &data.a_star, &vec![0.0; 30], &path).unwrap();
    assert_eq!(r.lambda_eps, 0.0);
    if r.eta < 1.0 {
        assert_eq!(r.lambda_eta, Some(0.0));
        assert_eq!(r.k_hat_eta, Some(path.len()));
    }
}

#[test]
fn report_flags_eta_at_least_one() {
    let dup = vec![
        vec![1.0, 2.0, 0.5, 1.0],
        vec![0.0, 1.0, 3.0, -1.0],
        vec![1.0, 2.0, 0.5, 1.0],
    ];
    let x = DesignMatrix::from_columns(&dup, ColumnScaling::Raw).unwrap();
    let y = covtest_core::Response::new(vec![1.0, 0.5, -0.2, 0.3]).unwrap();
    let path = compute_path(&x, &y, 20).unwrap();
    let r = irrepresentable_report(&x, &[0, 1], &[0.1, -0.1, 0.2, 0.0], &path).unwrap();
    assert!(r.eta >= 1.0 - 1e-12);
    assert!(r.lambda_eta.is_none() && r.k_hat_eta.is_none() && r.support_within_a0.is_none());
}

#[test]
fn support_at_lambda_eta_stays_inside_a0() {
    let c = cfg(100, 40, 3, 1.0, 200);
    let (mut eligible, mut inside) = (0, 0);
    for run in 0..c.runs {
        let rep = Replicate::draw(&c, run).unwrap();
        let data = rep.scenario(&c);
        let path = compute_path(&rep.x, &data.y, 400).unwrap();
        let r = irrepresentable_report(&rep.x, &data.a_star, &data.eps, &path).unwrap();
        if let Some(ok) = r.support_within_a0 {
            let lambda_eta = r.lambda_eta.unwrap();
            let k = r.k_hat_eta.unwrap();
            assert!(path.knots[..k].iter().all(|&l| l >= lambda_eta));
            assert!(path.knots.get(k).is_none_or(|&l| l < lambda_eta));
            eligible += 1;
            inside += usize::from(ok);
        }
    }
    assert!(eligible > 50, "only {eligible} runs with η < 1");
    assert!(
        inside as f64 >= 0.95 * eligible as f64,
        "{inside}/{eligible}"
    );
}

#[test]
fn screening_examples_and_monotonicity() {
    let base = cfg(100, 60, 3, 1.0, 100);
    let huge = screening_rate(&base.with_coef_size(50.0), 1.0, 1).unwrap();
    assert!(huge.value > 0.95);
    let zero = screening_rate(&base.with_coef_size(0.0), 1.0, 1).unwrap();
    assert!(zero.value < 0.05);
    let mut prev = None;
    for s in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let f = screening_rate(&base.with_coef_size(s), 1.0, 1).unwrap();
        if let Some((v, se)) = prev {
            assert!(
                f.value + 2.0 * ((f.se * f.se + se * se) as f64).sqrt() >= v,
                "size {s}"
            );
        }
        prev = Some((f.value, f.se));
    }
}
