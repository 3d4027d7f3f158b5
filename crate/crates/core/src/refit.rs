//! Least-squares refit statistics `T(S, S̃) = (RSS_S − RSS_S̃)/σ²` and their
//! reference distributions.

use nalgebra::{DMatrix, DVector};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;

use crate::design::{normalize_set, DesignMatrix, Response};
use crate::error::{Error, Result};
use crate::linalg::{dot, mul_cols, norm2_sq};
use crate::path::LassoPath;

/// Relative pivot size below which a column set counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Unpenalized least-squares coefficients on `subset` (sorted order).
#[derive(Debug, Clone, PartialEq)]
pub struct LsFit {
    pub subset: Vec<usize>,
    pub coef: Vec<f64>,
    pub rss: f64,
    /// ⟨y, X_S β̂_S⟩
    pub explained: f64,
}

/// Least-squares fit of `y` on the columns in `subset`.
pub fn ls_refit(x: &DesignMatrix, subset: &[usize], y: &Response) -> Result<LsFit> {
    x.check_response(y)?;
    x.check_index_set(subset)?;
    ls_refit_slice(x, &normalize_set(subset), y.as_slice())
}

pub(crate) fn ls_refit_slice(x: &DesignMatrix, subset: &[usize], y: &[f64]) -> Result<LsFit> {
    let n = x.n();
    let k = subset.len();
    if k == 0 {
        let rss = norm2_sq(y);
        return Ok(LsFit {
            subset: Vec::new(),
            coef: Vec::new(),
            rss,
            explained: 0.0,
        });
    }
    if k > n {
        return Err(Error::Singular {
            set: subset.to_vec(),
        });
    }
    let mut a = DMatrix::zeros(n, k);
    for (c, &j) in subset.iter().enumerate() {
        a.column_mut(c).copy_from_slice(x.col(j));
    }
    let qr = a.qr();
    let r = qr.r();
    let max_diag = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| !(r[(i, i)].abs() > RANK_TOL * max_diag)) {
        return Err(Error::Singular {
            set: subset.to_vec(),
        });
    }
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular {
            set: subset.to_vec(),
        })?;
    let coef = coef.as_slice().to_vec();
    let fit = mul_cols(x, subset, &coef);
    let rss: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum();
    let explained = dot(y, &fit);
    Ok(LsFit {
        subset: subset.to_vec(),
        coef,
        rss,
        explained,
    })
}

/// The refit drop `T(S, S̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefitDrop {
    pub subset: Vec<usize>,
    pub superset: Vec<usize>,
    /// `(RSS_S − RSS_S̃)/σ²`
    pub value: f64,
    /// `(⟨y, X_S̃ β̂_S̃⟩ − ⟨y, X_S β̂_S⟩)/σ²`
    pub value_inner_product_form: f64,
    pub sigma2: f64,
}

/// Relative agreement required between the two forms of a refit drop.
pub const REFIT_FORM_TOL: f64 = 1e-8;

pub fn refit_drop(
    x: &DesignMatrix,
    y: &Response,
    subset: &[usize],
    superset: &[usize],
    sigma2: f64,
) -> Result<RefitDrop> {
    x.check_response(y)?;
    x.check_index_set(subset)?;
    x.check_index_set(superset)?;
    check_sigma2(sigma2)?;
    let s = normalize_set(subset);
    let st = normalize_set(superset);
    if let Some(j) = s.iter().find(|j| st.binary_search(j).is_err()) {
        return Err(Error::InvalidArgument(format!(
            "variable {j} of S is not in the superset"
        )));
    }
    refit_drop_sorted(x, y.as_slice(), &s, &st, sigma2)
}

fn refit_drop_sorted(
    x: &DesignMatrix,
    y: &[f64],
    s: &[usize],
    st: &[usize],
    sigma2: f64,
) -> Result<RefitDrop> {
    let small = ls_refit_slice(x, s, y)?;
    let big = ls_refit_slice(x, st, y)?;
    let value = (small.rss - big.rss) / sigma2;
    let inner = (big.explained - small.explained) / sigma2;
    let scale = norm2_sq(y) / sigma2;
    if (value - inner).abs() > REFIT_FORM_TOL * scale.max(1.0) {
        return Err(Error::FormMismatch {
            objective: value,
            inner,
        });
    }
    Ok(RefitDrop {
        subset: s.to_vec(),
        superset: st.to_vec(),
        value,
        value_inner_product_form: inner,
        sigma2,
    })
}

pub(crate) fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "sigma2 must be positive and finite, got {sigma2}"
        )))
    }
}

/// Upper tail of χ²(1): `erfc(sqrt(stat / 2))`.
pub fn refit_fixed_pvalue(stat: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    erfc((stat / 2.0).sqrt()).clamp(0.0, 1.0)
}

/// P[k-th largest of `p` independent χ²(1) draws exceeds `stat`], i.e.
/// P[Binomial(p, q) ≥ k] with `q` the χ²(1) survival at `stat`.
pub fn order_statistic_null_pvalue(stat: f64, k: usize, p: usize) -> Result<f64> {
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!(
            "order statistic k = {k} outside 1..={p}"
        )));
    }
    let q = refit_fixed_pvalue(stat);
    if q >= 1.0 {
        return Ok(1.0);
    }
    if q <= 0.0 {
        return Ok(0.0);
    }
    // P[Bin(p, q) ≥ k] = I_q(k, p − k + 1)
    Ok(beta_reg(k as f64, (p - k + 1) as f64, q).clamp(0.0, 1.0))
}

/// Reference distribution attached to a refit p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefitReference {
    /// χ²(1), valid for a fixed nested comparison.
    ChiSquare1,
    /// k-th largest of p χ²(1) draws (orthogonal global null).
    OrderStatistic,
}

impl RefitReference {
    pub fn name(self) -> &'static str {
        match self {
            RefitReference::ChiSquare1 => "chi2_1",
            RefitReference::OrderStatistic => "chi2_1_order_stat",
        }
    }
}

/// One path step of the refit sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RefitStep {
    /// Entry index (1 for the first variable to enter).
    pub k: usize,
    /// Knot step of the entry event.
    pub step: usize,
    pub variable: usize,
    /// `None` when one of the refits was rank deficient.
    pub drop: Option<RefitDrop>,
    pub p_fixed: Option<f64>,
    pub p_order_stat: Option<f64>,
}

/// `T(Â_{k−1}, Â_k)` at every entry event of the path; leave events are skipped.
pub fn refit_sequence(
    x: &DesignMatrix,
    y: &Response,
    path: &LassoPath,
    sigma2: f64,
    steps: usize,
) -> Result<Vec<RefitStep>> {
    x.check_response(y)?;
    check_sigma2(sigma2)?;
    let available = path.entries().count();
    if steps > available {
        return Err(Error::PathTooShort {
            requested: steps,
            computable: available,
        });
    }
    let mut out = Vec::with_capacity(steps);
    for (k, (step, variable)) in path.entries().take(steps).enumerate() {
        let before = path.active_before(step);
        let after = &path.active_sets[step - 1];
        let drop = match refit_drop_sorted(x, y.as_slice(), before, after, sigma2) {
            Ok(d) => Some(d),
            Err(Error::Singular { .. }) => None,
            Err(e) => return Err(e),
        };
        let p_fixed = drop.as_ref().map(|d| refit_fixed_pvalue(d.value.max(0.0)));
        let p_order_stat = match &drop {
            Some(d) => Some(order_statistic_null_pvalue(d.value.max(0.0), k + 1, x.p())?),
            None => None,
        };
        out.push(RefitStep {
            k: k + 1,
            step,
            variable,
            drop,
            p_fixed,
            p_order_stat,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::ColumnScaling;

    #[test]
    fn empty_subset() {
        let x = DesignMatrix::from_row_major(2, 1, &[1.0, 1.0], ColumnScaling::Raw).unwrap();
        let y = Response::new(vec![3.0, 4.0]).unwrap();
        let fit = ls_refit(&x, &[], &y).unwrap();
        assert!(fit.coef.is_empty());
        assert_eq!(fit.rss, 25.0);
    }

    #[test]
    fn orthonormal_projection() {
        let x =
            DesignMatrix::from_row_major(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0], ColumnScaling::Raw)
                .unwrap();
        let y = Response::new(vec![2.0, -1.0, 5.0]).unwrap();
        let fit = ls_refit(&x, &[0, 1], &y).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-14);
        assert!((fit.coef[1] + 1.0).abs() < 1e-14);
        let d = refit_drop(&x, &y, &[0], &[0, 1], 2.0).unwrap();
        assert!((d.value - 0.5).abs() < 1e-14);
        let same = refit_drop(&x, &y, &[0], &[0], 1.0).unwrap();
        assert_eq!(same.value, 0.0);
    }

    #[test]
    fn singular_refit_names_set() {
        let x =
            DesignMatrix::from_row_major(2, 2, &[1.0, 2.0, 1.0, 2.0], ColumnScaling::Raw).unwrap();
        let y = Response::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            ls_refit(&x, &[1, 0], &y).unwrap_err(),
            Error::Singular { set: vec![0, 1] }
        );
    }

    #[test]
    fn drop_requires_nesting() {
        let x =
            DesignMatrix::from_row_major(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0], ColumnScaling::Raw)
                .unwrap();
        let y = Response::new(vec![2.0, -1.0, 5.0]).unwrap();
        assert!(matches!(
            refit_drop(&x, &y, &[1], &[0], 1.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(refit_drop(&x, &y, &[], &[0], 0.0).is_err());
    }

    #[test]
    fn chi2_tail_values() {
        assert_eq!(refit_fixed_pvalue(0.0), 1.0);
        assert!((refit_fixed_pvalue(3.841459) - 0.05).abs() < 1e-6);
        assert!(
            (order_statistic_null_pvalue(2.0, 1, 1).unwrap() - refit_fixed_pvalue(2.0)).abs()
                < 1e-14
        );
        assert_eq!(order_statistic_null_pvalue(0.0, 3, 10).unwrap(), 1.0);
        assert!(order_statistic_null_pvalue(1.0, 0, 10).is_err());
        assert!(order_statistic_null_pvalue(1.0, 11, 10).is_err());
    }

    #[test]
    fn order_statistic_matches_binomial_sum() {
        // direct binomial tail as a check on the incomplete-beta route
        let (stat, k, p) = (1.3, 3usize, 7usize);
        let q = refit_fixed_pvalue(stat);
        let mut direct = 0.0;
        for i in k..=p {
            let c = (0..i).fold(1.0, |acc, t| acc * (p - t) as f64 / (t + 1) as f64);
            direct += c * q.powi(i as i32) * (1.0 - q).powi((p - i) as i32);
        }
        assert!((order_statistic_null_pvalue(stat, k, p).unwrap() - direct).abs() < 1e-12);
    }
}
