//! Holm step-down adjustment for familywise error control.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedPValues {
    pub raw: Vec<f64>,
    pub adjusted: Vec<f64>,
    /// Input indices sorted by ascending raw p-value (stable).
    pub order: Vec<usize>,
}

fn check_pvalues(pvals: &[f64]) -> Result<()> {
    if pvals.is_empty() {
        return Err(Error::InvalidArgument("no p-values to adjust".into()));
    }
    match pvals.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(i) => Err(Error::InvalidArgument(format!(
            "p-value {i} is {} (outside [0, 1])",
            pvals[i]
        ))),
        None => Ok(()),
    }
}

/// adjusted_(i) = max_{l ≤ i} min(1, (m − l + 1)·p_(l)).
pub fn holm_adjust(pvals: &[f64]) -> Result<AdjustedPValues> {
    check_pvalues(pvals)?;
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        let v = ((m - rank) as f64 * pvals[i]).min(1.0);
        running = running.max(v);
        adjusted[i] = running;
    }
    Ok(AdjustedPValues {
        raw: pvals.to_vec(),
        adjusted,
        order,
    })
}

/// Indices with adjusted p-value at most `alpha`, ascending.
pub fn reject_at(adj: &AdjustedPValues, alpha: f64) -> Vec<usize> {
    (0..adj.adjusted.len())
        .filter(|&i| adj.adjusted[i] <= alpha)
        .collect()
}

/// Plain Bonferroni rejections, `m·p_i ≤ alpha`.
pub fn bonferroni_reject(pvals: &[f64], alpha: f64) -> Result<Vec<usize>> {
    check_pvalues(pvals)?;
    let m = pvals.len() as f64;
    Ok((0..pvals.len())
        .filter(|&i| (m * pvals[i]).min(1.0) <= alpha)
        .collect())
}
