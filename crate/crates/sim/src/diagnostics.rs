//! Irrepresentable-condition constants and the screening property.

use covtest_core::linalg::{dot, gram, spd_solve};
use covtest_core::{coef_at, solve_lasso, DesignMatrix, Error, LassoPath, DEFAULT_TOL};

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::generate::Replicate;
use crate::runner::run_replicates;

/// `max_{j ∉ A0} ‖(X_A0ᵀX_A0)⁻¹ X_A0ᵀ X_j‖₁`, which equals
/// `max_{j ∉ A0} sup_{‖τ‖∞ ≤ 1} |X_jᵀ X_A0 (X_A0ᵀX_A0)⁻¹ τ|`.
pub fn irrepresentable_eta(x: &DesignMatrix, a0: &[usize]) -> covtest_core::Result<f64> {
    x.check_index_set(a0)?;
    let mut a = a0.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.is_empty() {
        return Ok(0.0);
    }
    let g = gram(x, &a);
    let mut eta = 0.0f64;
    for j in (0..x.p()).filter(|j| a.binary_search(j).is_err()) {
        let rhs: Vec<f64> = a.iter().map(|&k| dot(x.col(k), x.col(j))).collect();
        let w = spd_solve(g.clone(), &rhs).ok_or_else(|| Error::Singular { set: a.clone() })?;
        eta = eta.max(w.iter().map(|v| v.abs()).sum());
    }
    Ok(eta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrrepresentableReport {
    pub eta: f64,
    /// `max_j |⟨ε, X_j⟩|`
    pub lambda_eps: f64,
    /// `λ_ε (1 + η)/(1 − η)`; `None` when η ≥ 1.
    pub lambda_eta: Option<f64>,
    /// `max{k : λ̂_k ≥ λ_η}` (0 when no knot qualifies).
    pub k_hat_eta: Option<usize>,
    /// Whether the lasso support at `λ_η` lies inside `A0`; `None` when
    /// undefined or outside the computed path.
    pub support_within_a0: Option<bool>,
}

pub fn irrepresentable_report(
    x: &DesignMatrix,
    a0: &[usize],
    eps: &[f64],
    path: &LassoPath,
) -> covtest_core::Result<IrrepresentableReport> {
    if eps.len() != x.n() {
        return Err(Error::DimensionMismatch(format!(
            "noise length {} != n = {}",
            eps.len(),
            x.n()
        )));
    }
    let eta = irrepresentable_eta(x, a0)?;
    let lambda_eps = x.t_mul(eps).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if eta >= 1.0 {
        return Ok(IrrepresentableReport {
            eta,
            lambda_eps,
            lambda_eta: None,
            k_hat_eta: None,
            support_within_a0: None,
        });
    }
    let lambda_eta = lambda_eps * (1.0 + eta) / (1.0 - eta);
    let k_hat_eta = path.knots.iter().take_while(|&&l| l >= lambda_eta).count();
    let support_within_a0 = coef_at(path, lambda_eta).ok().map(|b| {
        b.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .all(|(j, _)| a0.contains(&j))
    });
    Ok(IrrepresentableReport {
        eta,
        lambda_eps,
        lambda_eta: Some(lambda_eta),
        k_hat_eta: Some(k_hat_eta),
        support_within_a0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fraction {
    pub value: f64,
    pub se: f64,
    pub runs: usize,
    pub failures: usize,
}

/// Fraction of replicates whose lasso support at
/// `λ = c·σ·sqrt(log p / n)` (averaged form) contains the true active set.
pub fn screening_rate(cfg: &ScenarioConfig, c: f64, jobs: usize) -> Result<Fraction> {
    cfg.validate()?;
    let outcomes = run_replicates(cfg.runs, jobs, |run| -> Option<bool> {
        let rep = Replicate::draw(cfg, run).ok()?;
        let data = rep.scenario(cfg);
        let lambda =
            c * cfg.sigma * ((cfg.p as f64).ln() / cfg.n as f64).sqrt() * rep.x.penalty_scale();
        if !(lambda > 0.0) {
            return None;
        }
        let fit = solve_lasso(&rep.x, &data.y, lambda, DEFAULT_TOL).ok()?;
        Some(data.a_star.iter().all(|j| fit.beta[*j] != 0.0))
    })?;
    let ok: Vec<bool> = outcomes.iter().flatten().copied().collect();
    let runs = ok.len();
    let value = ok.iter().filter(|&&b| b).count() as f64 / runs.max(1) as f64;
    Ok(Fraction {
        value,
        se: (value * (1.0 - value) / runs.max(1) as f64).sqrt(),
        runs,
        failures: cfg.runs - runs,
    })
}
