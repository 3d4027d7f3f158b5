//! Desparsified (debiased) lasso with nodewise-lasso relaxed inverse, and
//! the scaled lasso noise estimator.
//!
//! Penalties in this module are given in the averaged form
//! `(1/2n)‖y − Xβ‖² + λ‖β‖₁` for standardized columns and converted to the
//! unaveraged objective of [`crate::lasso`] through
//! [`DesignMatrix::penalty_scale`], so results do not depend on how the
//! columns happen to be scaled.

use rayon::prelude::*;

use crate::design::{DesignMatrix, Response};
use crate::error::{Error, Result};
use crate::lasso::{solve_lasso, solve_restricted_warm, DEFAULT_TOL};
use crate::linalg::{dot, l1, norm2_sq};
use crate::refit::ls_refit_slice;
use crate::stats::{normal_quantile, two_sided_normal_pvalue};

/// Multiplier on the universal penalty for the initial lasso.
pub const DEFAULT_KAPPA: f64 = 1.1;

/// Multiplier on the universal penalty for the nodewise regressions. The
/// full universal level over-shrinks γ when the model is not very sparse,
/// leaving a bias in b̂ of the order of its standard error.
pub const DEFAULT_NODEWISE_FACTOR: f64 = 0.35;

/// `sqrt(2 log p / n)`.
pub fn universal_lambda(n: usize, p: usize) -> f64 {
    (2.0 * (p as f64).ln().max(0.0) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLassoFit {
    pub sigma: f64,
    pub beta: Vec<f64>,
    /// Penalty of the last lasso solve, unaveraged form.
    pub lambda: f64,
    pub iterations: usize,
}

/// Joint estimate of coefficients and noise level: alternate
/// `β ← lasso(λ0·σ̂)` and `σ̂² ← ‖y − Xβ‖²/n` until the relative change in
/// σ̂ drops below 1e-6 (at most 100 rounds).
pub fn scaled_lasso(x: &DesignMatrix, y: &Response, lambda0: f64) -> Result<ScaledLassoFit> {
    x.check_response(y)?;
    if !(lambda0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda0 must be positive, got {lambda0}"
        )));
    }
    let n = x.n() as f64;
    let scale = x.penalty_scale();
    let mut sigma = (norm2_sq(y.as_slice()) / n).sqrt();
    let mut beta = vec![0.0; x.p()];
    let mut lambda = 0.0;
    let cols: Vec<usize> = (0..x.p()).collect();
    for it in 1..=100 {
        if sigma < 1e-8 {
            return Err(Error::Degenerate(format!(
                "scaled lasso noise level collapsed to {sigma:.3e}"
            )));
        }
        lambda = lambda0 * sigma * scale;
        let fit = solve_restricted_warm(x, &cols, y.as_slice(), lambda, DEFAULT_TOL, Some(&beta))?;
        beta = fit.beta;
        let fitted = x.mul(&beta);
        let rss: f64 = y
            .as_slice()
            .iter()
            .zip(&fitted)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let next = (rss / n).sqrt();
        let change = (next - sigma).abs() / sigma;
        sigma = next;
        if change < 1e-6 {
            if sigma < 1e-8 {
                break;
            }
            return Ok(ScaledLassoFit {
                sigma,
                beta,
                lambda,
                iterations: it,
            });
        }
    }
    if sigma < 1e-8 {
        return Err(Error::Degenerate(format!(
            "scaled lasso noise level collapsed to {sigma:.3e}"
        )));
    }
    Ok(ScaledLassoFit {
        sigma,
        beta,
        lambda,
        iterations: 100,
    })
}

/// Noise level from the full least-squares residual, `RSS/(n − p)`.
pub fn ols_residual_sigma(x: &DesignMatrix, y: &Response) -> Result<f64> {
    x.check_response(y)?;
    if x.n() <= x.p() {
        return Err(Error::InvalidArgument(format!(
            "OLS residual variance needs n > p (n = {}, p = {})",
            x.n(),
            x.p()
        )));
    }
    let cols: Vec<usize> = (0..x.p()).collect();
    let ls = ls_refit_slice(x, &cols, y.as_slice())?;
    let s2 = ls.rss / (x.n() - x.p()) as f64;
    if !(s2 > 0.0) {
        return Err(Error::Degenerate("zero residual variance".into()));
    }
    Ok(s2.sqrt())
}

/// One row of the relaxed inverse: lasso of `X_j` on the other columns.
#[derive(Debug, Clone, PartialEq)]
pub struct NodewiseRow {
    pub j: usize,
    /// Coefficients on the other columns; `gamma[j]` is zero and unused.
    pub gamma: Vec<f64>,
    /// `‖X_j − X_{−j}γ‖²/n + λ_j‖γ‖₁`
    pub tau2: f64,
    /// Averaged-form penalty on this design (unaveraged penalty is `n·λ_j`).
    pub lambda_j: f64,
    /// `z_j = X_j − X_{−j}γ`
    pub residual: Vec<f64>,
}

/// Universal nodewise penalty for column `j`: `sqrt(2 log p / n)` in
/// standardized units, scaled by the size of `X_j`. [`nodewise_rows`]
/// applies [`DEFAULT_NODEWISE_FACTOR`] on top of this.
pub fn default_nodewise_lambda(x: &DesignMatrix, j: usize) -> f64 {
    let n = x.n() as f64;
    let unaveraged =
        universal_lambda(x.n(), x.p()) * x.penalty_scale() * x.col_norms()[j] / n.sqrt();
    unaveraged / n
}

pub fn nodewise_lasso(x: &DesignMatrix, j: usize, lambda_j: f64) -> Result<NodewiseRow> {
    if x.p() < 2 {
        return Err(Error::InvalidArgument(
            "nodewise regression needs p >= 2".into(),
        ));
    }
    x.check_index_set(&[j])?;
    if !(lambda_j > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda_j must be positive, got {lambda_j}"
        )));
    }
    let n = x.n() as f64;
    let others: Vec<usize> = (0..x.p()).filter(|&k| k != j).collect();
    let target = x.col(j);
    let fit = solve_restricted_warm(x, &others, target, n * lambda_j, DEFAULT_TOL, None)?;
    let mut residual = target.to_vec();
    for &k in &fit.active_set {
        crate::linalg::axpy(-fit.beta[k], x.col(k), &mut residual);
    }
    let tau2 = norm2_sq(&residual) / n + lambda_j * l1(&fit.beta);
    if !(tau2 > 0.0) {
        return Err(Error::Degenerate(format!(
            "nodewise tau^2 is zero for column {j}"
        )));
    }
    Ok(NodewiseRow {
        j,
        gamma: fit.beta,
        tau2,
        lambda_j,
        residual,
    })
}

/// Nodewise rows for every column with the default penalties. Columns are
/// processed in parallel; the result does not depend on scheduling.
pub fn nodewise_rows(x: &DesignMatrix) -> Result<Vec<NodewiseRow>> {
    nodewise_rows_scaled(x, DEFAULT_NODEWISE_FACTOR)
}

/// Nodewise rows at `factor` times the universal penalty.
pub fn nodewise_rows_scaled(x: &DesignMatrix, factor: f64) -> Result<Vec<NodewiseRow>> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "nodewise factor must be positive, got {factor}"
        )));
    }
    (0..x.p())
        .into_par_iter()
        .map(|j| nodewise_lasso(x, j, factor * default_nodewise_lambda(x, j)))
        .collect()
}

fn check_rows(x: &DesignMatrix, rows: &[NodewiseRow]) -> Result<()> {
    if rows.len() != x.p()
        || rows
            .iter()
            .enumerate()
            .any(|(j, r)| r.j != j || r.gamma.len() != x.p())
    {
        return Err(Error::InvalidArgument(format!(
            "need one nodewise row per coordinate in order (p = {}, got {})",
            x.p(),
            rows.len()
        )));
    }
    Ok(())
}

/// `b̂ = β̂ + Θ̂Xᵀ(y − Xβ̂)/n` with `Θ̂_j = C_j/τ̂_j²`, `C_j` the contrast
/// with 1 at `j` and `−γ_j` elsewhere.
pub fn debias(
    x: &DesignMatrix,
    y: &Response,
    beta_lasso: &[f64],
    rows: &[NodewiseRow],
) -> Result<Vec<f64>> {
    x.check_response(y)?;
    if beta_lasso.len() != x.p() {
        return Err(Error::DimensionMismatch(format!(
            "beta length {} != p = {}",
            beta_lasso.len(),
            x.p()
        )));
    }
    check_rows(x, rows)?;
    let n = x.n() as f64;
    let fitted = x.mul(beta_lasso);
    let resid: Vec<f64> = y
        .as_slice()
        .iter()
        .zip(&fitted)
        .map(|(a, b)| a - b)
        .collect();
    let score = x.t_mul(&resid);
    Ok(rows
        .iter()
        .map(|row| {
            let j = row.j;
            let contrast: f64 = score[j]
                - row
                    .gamma
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(k, g)| g * score[k])
                    .sum::<f64>();
            beta_lasso[j] + contrast / (n * row.tau2)
        })
        .collect())
}

/// Where the noise level comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSource {
    Known(f64),
    ScaledLasso,
    OlsResidual,
    /// Scaled lasso when `p ≥ n`, OLS residual otherwise.
    Auto,
}

impl SigmaSource {
    pub fn resolve(self, n: usize, p: usize) -> SigmaSource {
        match self {
            SigmaSource::Auto if p >= n => SigmaSource::ScaledLasso,
            SigmaSource::Auto => SigmaSource::OlsResidual,
            other => other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SigmaSource::Known(_) => "known",
            SigmaSource::ScaledLasso => "scaled_lasso",
            SigmaSource::OlsResidual => "ols_residual",
            SigmaSource::Auto => "auto",
        }
    }
}

/// Noise level from `source` (after resolving `Auto`).
pub fn estimate_sigma(x: &DesignMatrix, y: &Response, source: SigmaSource) -> Result<f64> {
    match source.resolve(x.n(), x.p()) {
        SigmaSource::Known(s) if s > 0.0 && s.is_finite() => Ok(s),
        SigmaSource::Known(s) => Err(Error::InvalidArgument(format!(
            "known sigma must be positive, got {s}"
        ))),
        SigmaSource::ScaledLasso => Ok(scaled_lasso(x, y, universal_lambda(x.n(), x.p()))?.sigma),
        SigmaSource::OlsResidual => ols_residual_sigma(x, y),
        SigmaSource::Auto => unreachable!("resolved above"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesparsConfig {
    pub kappa: f64,
    pub nodewise_factor: f64,
    pub alpha: f64,
    pub sigma_source: SigmaSource,
}

impl Default for DesparsConfig {
    fn default() -> Self {
        DesparsConfig {
            kappa: DEFAULT_KAPPA,
            nodewise_factor: DEFAULT_NODEWISE_FACTOR,
            alpha: 0.05,
            sigma_source: SigmaSource::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebiasedFit {
    pub b_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub p_values: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub sigma_eps_hat: f64,
    /// Initial lasso penalty, unaveraged form.
    pub lambda_used: f64,
    pub beta_lasso: Vec<f64>,
    pub alpha: f64,
}

/// Lasso fit, nodewise rows, debiasing, standard errors and two-sided
/// Gaussian inference.
pub fn despars_inference(
    x: &DesignMatrix,
    y: &Response,
    cfg: &DesparsConfig,
) -> Result<DebiasedFit> {
    let rows = nodewise_rows_scaled(x, cfg.nodewise_factor)?;
    despars_inference_with_rows(x, y, cfg, &rows)
}

/// Same as [`despars_inference`] with precomputed nodewise rows (they
/// depend on the design only).
pub fn despars_inference_with_rows(
    x: &DesignMatrix,
    y: &Response,
    cfg: &DesparsConfig,
    rows: &[NodewiseRow],
) -> Result<DebiasedFit> {
    x.check_response(y)?;
    check_rows(x, rows)?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be in (0, 1), got {}",
            cfg.alpha
        )));
    }
    let sigma = estimate_sigma(x, y, cfg.sigma_source)?;
    let lambda = cfg.kappa * sigma * universal_lambda(x.n(), x.p()) * x.penalty_scale();
    let beta_lasso = solve_lasso(x, y, lambda, DEFAULT_TOL)?.beta;
    let b_hat = debias(x, y, &beta_lasso, rows)?;
    let n = x.n() as f64;
    let z = normal_quantile(1.0 - cfg.alpha / 2.0);
    let se: Vec<f64> = rows
        .iter()
        .map(|r| sigma * norm2_sq(&r.residual).sqrt() / (n * r.tau2))
        .collect();
    let p_values = b_hat
        .iter()
        .zip(&se)
        .map(|(b, s)| two_sided_normal_pvalue(b / s))
        .collect();
    let ci_low = b_hat.iter().zip(&se).map(|(b, s)| b - z * s).collect();
    let ci_high = b_hat.iter().zip(&se).map(|(b, s)| b + z * s).collect();
    Ok(DebiasedFit {
        b_hat,
        se,
        p_values,
        ci_low,
        ci_high,
        sigma_eps_hat: sigma,
        lambda_used: lambda,
        beta_lasso,
        alpha: cfg.alpha,
    })
}

/// `⟨z_j, X_j⟩ / n`, which equals `τ_j²` at an exact nodewise solution.
pub fn nodewise_normalizer(x: &DesignMatrix, row: &NodewiseRow) -> f64 {
    dot(&row.residual, x.col(row.j)) / x.n() as f64
}
