//! Lasso at a fixed penalty: `½‖y − Xβ‖² + λ‖β‖₁`.
//!
//! Cyclic coordinate descent with a duality-gap stopping rule. Once the
//! gap target is met the solution is polished by solving the active-set
//! stationarity equations exactly, which brings the KKT residual down to
//! rounding level whenever the sign pattern is stable.

use crate::design::{normalize_set, DesignMatrix, Response};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, gram, l1, mul_cols, norm2_sq, spd_solve};

/// Relative duality-gap tolerance: the solver stops once
/// `gap ≤ tol · ‖y‖²`.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Sweep budget before coordinate descent reports non-convergence.
pub const MAX_SWEEPS: usize = 100_000;

/// Solution of a single lasso problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub lambda: f64,
    pub beta: Vec<f64>,
    /// Sorted indices of the nonzero coefficients.
    pub active_set: Vec<usize>,
    pub duality_gap: f64,
}

impl LassoFit {
    fn from_beta(lambda: f64, beta: Vec<f64>, duality_gap: f64) -> Self {
        let active_set = support(&beta);
        LassoFit {
            lambda,
            beta,
            active_set,
            duality_gap,
        }
    }

    /// Penalized objective `½‖y − Xβ‖² + λ‖β‖₁` at this fit.
    pub fn objective(&self, x: &DesignMatrix, y: &Response) -> Result<f64> {
        objective(x, y, &self.beta, self.lambda)
    }

    /// Largest violation of the stationarity conditions over all columns.
    pub fn kkt_violation(&self, x: &DesignMatrix, y: &Response) -> f64 {
        let cols: Vec<usize> = (0..x.p()).collect();
        kkt_violation_on(x, y.as_slice(), &self.beta, self.lambda, &cols)
    }
}

/// Indices with nonzero entries.
pub fn support(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Smallest λ whose solution is zero: `max_j |⟨X_j, y⟩|`.
pub fn lambda_max(x: &DesignMatrix, y: &Response) -> Result<f64> {
    x.check_response(y)?;
    Ok((0..x.p())
        .map(|j| dot(x.col(j), y.as_slice()).abs())
        .fold(0.0, f64::max))
}

/// `½‖y − Xβ‖² + λ‖β‖₁`.
pub fn objective(x: &DesignMatrix, y: &Response, beta: &[f64], lambda: f64) -> Result<f64> {
    x.check_response(y)?;
    if beta.len() != x.p() {
        return Err(Error::DimensionMismatch(format!(
            "beta length {} != p = {}",
            beta.len(),
            x.p()
        )));
    }
    let fit = x.mul(beta);
    let rss: f64 = y
        .as_slice()
        .iter()
        .zip(&fit)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(0.5 * rss + lambda * l1(beta))
}

/// Solves the lasso over all columns.
pub fn solve_lasso(x: &DesignMatrix, y: &Response, lambda: f64, tol: f64) -> Result<LassoFit> {
    x.check_response(y)?;
    check_lambda(lambda, tol)?;
    let cols: Vec<usize> = (0..x.p()).collect();
    let (beta, gap) = coordinate_descent(x, &cols, y.as_slice(), lambda, tol, None)?;
    Ok(LassoFit::from_beta(lambda, beta, gap))
}

/// Solves the lasso using only the columns in `subset`; all other
/// coefficients are exactly zero.
pub fn solve_lasso_restricted(
    x: &DesignMatrix,
    subset: &[usize],
    y: &Response,
    lambda: f64,
    tol: f64,
) -> Result<LassoFit> {
    x.check_response(y)?;
    x.check_index_set(subset)?;
    check_lambda(lambda, tol)?;
    let cols = normalize_set(subset);
    let (beta, gap) = coordinate_descent(x, &cols, y.as_slice(), lambda, tol, None)?;
    Ok(LassoFit::from_beta(lambda, beta, gap))
}

/// Restricted solve with a warm start (full-length vector, entries outside
/// `cols` ignored). Used along the path where good starting points exist.
pub(crate) fn solve_restricted_warm(
    x: &DesignMatrix,
    cols: &[usize],
    y: &[f64],
    lambda: f64,
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<LassoFit> {
    check_lambda(lambda, tol)?;
    let (beta, gap) = coordinate_descent(x, cols, y, lambda, tol, warm)?;
    Ok(LassoFit::from_beta(lambda, beta, gap))
}

fn check_lambda(lambda: f64, tol: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

/// Max stationarity violation of `beta` over `cols` for target `y`.
pub fn kkt_violation_on(
    x: &DesignMatrix,
    y: &[f64],
    beta: &[f64],
    lambda: f64,
    cols: &[usize],
) -> f64 {
    let mut r = y.to_vec();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            axpy(-b, x.col(j), &mut r);
        }
    }
    cols.iter()
        .map(|&j| {
            let g = dot(x.col(j), &r);
            if beta[j] != 0.0 {
                (g - lambda * beta[j].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

struct Problem<'a> {
    x: &'a DesignMatrix,
    cols: &'a [usize],
    y: &'a [f64],
    lambda: f64,
    y_sq: f64,
}

impl Problem<'_> {
    /// Primal-dual gap using the rescaled residual as the dual point.
    fn gap(&self, beta: &[f64], r: &[f64]) -> f64 {
        let max_corr = self
            .cols
            .iter()
            .map(|&j| dot(self.x.col(j), r).abs())
            .fold(0.0, f64::max);
        let s = if max_corr > self.lambda {
            self.lambda / max_corr
        } else {
            1.0
        };
        let r_sq = norm2_sq(r);
        let pen: f64 = self.cols.iter().map(|&j| beta[j].abs()).sum();
        let primal = 0.5 * r_sq + self.lambda * pen;
        let dual = s * dot(self.y, r) - 0.5 * s * s * r_sq;
        (primal - dual).max(0.0)
    }

    fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let mut r = self.y.to_vec();
        for &j in self.cols {
            if beta[j] != 0.0 {
                axpy(-beta[j], self.x.col(j), &mut r);
            }
        }
        r
    }

    /// Solves the stationarity system on the current support and sign
    /// pattern. Returns the polished vector and residual when it is sign
    /// consistent and satisfies the inactive KKT conditions.
    fn polish(&self, beta: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let active: Vec<usize> = self
            .cols
            .iter()
            .copied()
            .filter(|&j| beta[j] != 0.0)
            .collect();
        if active.is_empty() || active.len() > self.x.n() {
            return None;
        }
        let signs: Vec<f64> = active.iter().map(|&j| beta[j].signum()).collect();
        let rhs: Vec<f64> = active
            .iter()
            .zip(&signs)
            .map(|(&j, s)| dot(self.x.col(j), self.y) - self.lambda * s)
            .collect();
        let sol = spd_solve(gram(self.x, &active), &rhs)?;
        if sol.iter().zip(&signs).any(|(v, s)| v * s <= 0.0) {
            return None;
        }
        let mut out = vec![0.0; beta.len()];
        for (&j, &v) in active.iter().zip(&sol) {
            out[j] = v;
        }
        let fit = mul_cols(self.x, &active, &sol);
        let r: Vec<f64> = self.y.iter().zip(&fit).map(|(a, b)| a - b).collect();
        let slack = self.lambda * 1e-9;
        let feasible = self
            .cols
            .iter()
            .filter(|&&j| out[j] == 0.0)
            .all(|&j| dot(self.x.col(j), &r).abs() <= self.lambda + slack);
        feasible.then_some((out, r))
    }
}

/// Coordinate descent over `cols`; returns a full-length coefficient vector
/// and the final duality gap.
fn coordinate_descent(
    x: &DesignMatrix,
    cols: &[usize],
    y: &[f64],
    lambda: f64,
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<(Vec<f64>, f64)> {
    let p = x.p();
    let mut beta = vec![0.0; p];
    let y_sq = norm2_sq(y);
    if cols.is_empty() || y_sq == 0.0 {
        return Ok((beta, 0.0));
    }
    let prob = Problem {
        x,
        cols,
        y,
        lambda,
        y_sq,
    };
    let target = tol * prob.y_sq;

    if let Some(w) = warm {
        for &j in cols {
            beta[j] = w[j];
        }
    }
    let mut r = prob.residual(&beta);
    let mut col_sq = vec![0.0; p];
    for &j in cols {
        col_sq[j] = x.col_norms()[j].powi(2);
    }

    let update = |j: usize, beta: &mut [f64], r: &mut [f64]| -> f64 {
        let nsq = col_sq[j];
        if nsq == 0.0 {
            return 0.0;
        }
        let old = beta[j];
        let z = old + dot(x.col(j), r) / nsq;
        let new = soft_threshold(z, lambda / nsq);
        if new != old {
            axpy(old - new, x.col(j), r);
            beta[j] = new;
        }
        (new - old).abs() * nsq.sqrt()
    };

    let y_norm = prob.y_sq.sqrt();
    let mut gap = prob.gap(&beta, &r);
    let mut sweeps = 0;
    while gap > target {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NonConvergence {
                iterations: sweeps,
                gap,
                target,
            });
        }
        for &j in cols {
            update(j, &mut beta, &mut r);
        }
        sweeps += 1;
        // inner passes over the current support
        let active: Vec<usize> = cols.iter().copied().filter(|&j| beta[j] != 0.0).collect();
        for _ in 0..200 {
            let mut max_step = 0.0f64;
            for &j in &active {
                max_step = max_step.max(update(j, &mut beta, &mut r));
            }
            sweeps += 1;
            if max_step <= 1e-13 * y_norm {
                break;
            }
        }
        gap = prob.gap(&beta, &r);
        if gap > target && sweeps % 50 == 0 {
            if let Some((b, rr)) = prob.polish(&beta) {
                let g = prob.gap(&b, &rr);
                if g < gap {
                    beta = b;
                    r = rr;
                    gap = g;
                }
            }
        }
    }
    if let Some((b, rr)) = prob.polish(&beta) {
        let g = prob.gap(&b, &rr);
        if g <= gap.max(target) {
            beta = b;
            gap = g;
        }
    }
    Ok((beta, gap))
}
