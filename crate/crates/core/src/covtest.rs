//! Covariance test: the drop in penalized fit when the lasso is restricted
//! to a subset, evaluated along the path with an Exp(1) reference.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::design::{normalize_set, DesignMatrix, Response};
use crate::error::{Error, Result};
use crate::lasso::{
    kkt_violation_on, solve_lasso, solve_lasso_restricted, solve_restricted_warm, DEFAULT_TOL,
};
use crate::linalg::{dot, l1, norm2_sq};
use crate::path::{restricted_descent, EventKind, LassoPath};
use crate::refit::{check_sigma2, ls_refit_slice};

/// Agreement required between the two forms of `T(S, λ)`, relative to
/// `‖y‖²/σ²` (the size of the objective values being differenced).
pub const COV_FORM_TOL: f64 = 1e-6;

/// Largest KKT residual accepted from the homotopy restricted solve before
/// falling back to coordinate descent.
const KKT_ACCEPT: f64 = 1e-9;

/// Default level for [`select_cov_stop`].
pub const DEFAULT_ALPHA: f64 = 0.05;

/// `T(S, λ)` in both algebraic forms.
#[derive(Debug, Clone, PartialEq)]
pub struct CovDrop {
    pub subset: Vec<usize>,
    pub lambda: f64,
    /// `[‖y − X_S β̂_S‖² + λ‖β̂_S‖₁ − ‖y − Xβ̂‖² − λ‖β̂‖₁] / σ²`
    pub value_objective_form: f64,
    /// `(⟨y, Xβ̂⟩ − ⟨y, X_S β̂_S⟩) / σ²`
    pub value_inner_product_form: f64,
    pub sigma2: f64,
}

impl CovDrop {
    pub fn value(&self) -> f64 {
        self.value_objective_form
    }
}

/// Penalized fit in the unhalved form and the explained inner product.
fn fit_terms(x: &DesignMatrix, y: &[f64], beta: &[f64], lambda: f64) -> (f64, f64) {
    let fit = x.mul(beta);
    let rss: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum();
    (rss + lambda * l1(beta), dot(y, &fit))
}

fn assemble(
    x: &DesignMatrix,
    y: &[f64],
    subset: Vec<usize>,
    lambda: f64,
    sigma2: f64,
    full_beta: &[f64],
    restricted: (f64, f64),
) -> Result<CovDrop> {
    let (full_obj, full_inner) = fit_terms(x, y, full_beta, lambda);
    let (sub_obj, sub_inner) = restricted;
    let objective = (sub_obj - full_obj) / sigma2;
    let inner = (full_inner - sub_inner) / sigma2;
    let scale = (norm2_sq(y) / sigma2).max(f64::MIN_POSITIVE);
    if (objective - inner).abs() > COV_FORM_TOL * scale {
        return Err(Error::FormMismatch { objective, inner });
    }
    Ok(CovDrop {
        subset,
        lambda,
        value_objective_form: objective,
        value_inner_product_form: inner,
        sigma2,
    })
}

/// `T(S, λ)` from fresh fixed-penalty fits.
pub fn cov_drop(
    x: &DesignMatrix,
    y: &Response,
    subset: &[usize],
    lambda: f64,
    sigma2: f64,
) -> Result<CovDrop> {
    check_sigma2(sigma2)?;
    let full = solve_lasso(x, y, lambda, DEFAULT_TOL)?;
    let sub = solve_lasso_restricted(x, subset, y, lambda, DEFAULT_TOL)?;
    let terms = fit_terms(x, y.as_slice(), &sub.beta, lambda);
    assemble(
        x,
        y.as_slice(),
        normalize_set(subset),
        lambda,
        sigma2,
        &full.beta,
        terms,
    )
}

/// One covariance-test step.
#[derive(Debug, Clone, PartialEq)]
pub struct CovStep {
    /// Entry index: the k-th variable to enter.
    pub k: usize,
    /// Knot step of that entry.
    pub step: usize,
    pub entered_variable: usize,
    pub lambda_k: f64,
    pub lambda_next: f64,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CovSequence {
    pub entries: Vec<CovStep>,
}

/// Exp(1) upper tail; negative statistics are clamped to zero.
pub fn exp1_pvalue(stat: f64) -> f64 {
    (-stat.max(0.0)).exp().clamp(0.0, 1.0)
}

/// Reference distribution for `T_k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CovReference {
    /// Exp(1), for known σ.
    #[default]
    Exp1,
    /// F(2, df), for σ² estimated from a residual sum of squares with `df`
    /// degrees of freedom.
    F2 { df: usize },
}

impl CovReference {
    pub fn p_value(self, stat: f64) -> f64 {
        match self {
            CovReference::Exp1 => exp1_pvalue(stat),
            CovReference::F2 { df } => FisherSnedecor::new(2.0, df as f64)
                .map(|f| f.sf(stat.max(0.0)))
                .unwrap_or(f64::NAN)
                .clamp(0.0, 1.0),
        }
    }

    pub fn name(self) -> String {
        match self {
            CovReference::Exp1 => "exp1".into(),
            CovReference::F2 { df } => format!("f2_{df}"),
        }
    }
}

/// Number of entry events for which the next knot (or λ = 0 at the end of
/// an exhausted path) is available.
pub fn computable_cov_steps(path: &LassoPath) -> usize {
    path.entries()
        .take_while(|&(step, _)| path.next_lambda(step).is_some())
        .count()
}

/// `T_k = T(Â_{k−1}, λ̂_{k+1})` for the first `steps` entry events, with
/// Exp(1) p-values.
pub fn cov_sequence(
    x: &DesignMatrix,
    y: &Response,
    path: &LassoPath,
    sigma2: f64,
    steps: usize,
) -> Result<CovSequence> {
    cov_sequence_with(x, y, path, sigma2, steps, CovReference::Exp1)
}

/// [`cov_sequence`] with a chosen reference distribution.
pub fn cov_sequence_with(
    x: &DesignMatrix,
    y: &Response,
    path: &LassoPath,
    sigma2: f64,
    steps: usize,
    reference: CovReference,
) -> Result<CovSequence> {
    x.check_response(y)?;
    if let CovReference::F2 { df: 0 } = reference {
        return Err(Error::InvalidArgument(
            "F reference needs positive degrees of freedom".into(),
        ));
    }
    check_sigma2(sigma2)?;
    let computable = computable_cov_steps(path);
    if steps > computable {
        return Err(Error::PathTooShort {
            requested: steps,
            computable,
        });
    }
    let yv = y.as_slice();
    let mut entries = Vec::with_capacity(steps);
    for (idx, (step, variable)) in path.entries().take(steps).enumerate() {
        let subset = path.active_before(step).to_vec();
        let lambda_next = path.next_lambda(step).expect("computable step");
        let full_beta: &[f64] = if step < path.len() {
            &path.betas[step]
        } else {
            path.terminal_beta.as_deref().expect("exhausted path")
        };
        let restricted = if lambda_next > 0.0 {
            let start = &path.betas[step - 1];
            let beta = match restricted_descent(
                x,
                &subset,
                yv,
                start,
                path.knots[step - 1],
                lambda_next,
            ) {
                Some(b)
                    if kkt_violation_on(x, yv, &b, lambda_next, &subset)
                        <= KKT_ACCEPT * lambda_next.max(1.0) =>
                {
                    b
                }
                _ => {
                    solve_restricted_warm(x, &subset, yv, lambda_next, DEFAULT_TOL, Some(start))?
                        .beta
                }
            };
            fit_terms(x, yv, &beta, lambda_next)
        } else {
            // unpenalized end of the path
            let ls = ls_refit_slice(x, &subset, yv)?;
            (ls.rss, ls.explained)
        };
        let drop = assemble(x, yv, subset, lambda_next, sigma2, full_beta, restricted)?;
        let statistic = drop.value();
        entries.push(CovStep {
            k: idx + 1,
            step,
            entered_variable: variable,
            lambda_k: path.knots[step - 1],
            lambda_next,
            statistic,
            p_value: reference.p_value(statistic),
        });
    }
    Ok(CovSequence { entries })
}

/// Variables entering before the first step whose p-value is at least `alpha`.
pub fn select_cov_stop(seq: &CovSequence, alpha: f64) -> Vec<usize> {
    let selected: Vec<usize> = seq
        .entries
        .iter()
        .take_while(|e| e.p_value < alpha)
        .map(|e| e.entered_variable)
        .collect();
    normalize_set(&selected)
}

/// For each variable active at the end of the computed path, the p-value of
/// its last entry. Variables whose last entry has no statistic are omitted.
pub fn assign_cov_pvals(seq: &CovSequence, path: &LassoPath) -> BTreeMap<usize, f64> {
    let mut last_entry: BTreeMap<usize, usize> = BTreeMap::new();
    for e in path.events.iter().filter(|e| e.kind == EventKind::Enter) {
        last_entry.insert(e.variable, e.step);
    }
    let by_step: BTreeMap<usize, f64> = seq.entries.iter().map(|e| (e.step, e.p_value)).collect();
    path.final_active_set()
        .iter()
        .filter_map(|&j| {
            let step = last_entry.get(&j)?;
            by_step.get(step).map(|&p| (j, p))
        })
        .collect()
}

/// Like [`assign_cov_pvals`], but a variable whose last entry carries no
/// statistic (the sequence stopped earlier) takes the p-value of its latest
/// entry that does.
pub fn assign_cov_pvals_latest_tested(seq: &CovSequence, path: &LassoPath) -> BTreeMap<usize, f64> {
    let mut latest: BTreeMap<usize, f64> = BTreeMap::new();
    for e in &seq.entries {
        latest.insert(e.entered_variable, e.p_value);
    }
    path.final_active_set()
        .iter()
        .filter_map(|&j| latest.get(&j).map(|&p| (j, p)))
        .collect()
}

/// Number of entry events at knot steps `1..=max_step` that have a statistic.
pub fn cov_steps_within(path: &LassoPath, max_step: usize) -> usize {
    path.entries()
        .take_while(|&(step, _)| step <= max_step && path.next_lambda(step).is_some())
        .count()
}
