//! Familywise error and true-positive comparison of the desparsified lasso
//! against the two covariance-test protocols.

use std::fmt;

use covtest_core::desparsified::estimate_sigma;
use covtest_core::desparsified::DEFAULT_NODEWISE_FACTOR;
use covtest_core::{
    assign_cov_pvals_latest_tested, compute_path, cov_sequence_with, cov_steps_within,
    despars_inference_with_rows, holm_adjust, nodewise_rows_scaled, reject_at, select_cov_stop,
    CovReference, DesparsConfig, NodewiseRow, SigmaSource,
};

use crate::config::{CovReferenceRule, CovWindow, ScenarioConfig, SigmaRule, TableSection};
use crate::error::Result;
use crate::generate::{Replicate, ScenarioData};
use crate::runner::run_replicates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Desparsified lasso p-values with Holm adjustment.
    Despars,
    /// Follow the path until the first nonsignificant covariance p-value.
    Cov,
    /// Covariance p-value of each variable's last entry, Holm adjusted.
    CovPval,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Despars, Method::Cov, Method::CovPval];

    pub fn name(self) -> &'static str {
        match self {
            Method::Despars => "de-spars",
            Method::Cov => "cov",
            Method::CovPval => "cov.pval",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Selection made by one method in one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub selected: Vec<usize>,
    pub false_positive: bool,
    pub true_positives: usize,
}

impl Selection {
    fn new(selected: Vec<usize>, a_star: &[usize]) -> Self {
        let true_positives = selected
            .iter()
            .filter(|j| a_star.binary_search(j).is_ok())
            .count();
        let false_positive = true_positives < selected.len();
        Selection {
            selected,
            false_positive,
            true_positives,
        }
    }
}

/// Per-replicate outcome; `None` marks a method that failed numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Noise level used by the desparsified lasso.
    pub sigma_hat: Option<f64>,
    /// Noise level used by the covariance tests.
    pub sigma_hat_cov: Option<f64>,
    pub despars: Option<Selection>,
    pub cov: Option<Selection>,
    pub cov_pval: Option<Selection>,
}

impl RunRecord {
    fn failed() -> Self {
        RunRecord {
            sigma_hat: None,
            sigma_hat_cov: None,
            despars: None,
            cov: None,
            cov_pval: None,
        }
    }

    pub fn get(&self, m: Method) -> Option<&Selection> {
        match m {
            Method::Despars => self.despars.as_ref(),
            Method::Cov => self.cov.as_ref(),
            Method::CovPval => self.cov_pval.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    /// Fraction of successful runs selecting at least one inactive variable.
    pub fwer: f64,
    /// Mean number of selected active variables.
    pub tp: f64,
    pub runs_ok: usize,
    pub failures: usize,
}

/// Aggregated results of one scenario point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub coef_size: f64,
    pub methods: Vec<MethodSummary>,
    pub runs_completed: usize,
    pub mean_sigma_hat: f64,
    pub mean_sigma_hat_cov: f64,
}

impl ScenarioSummary {
    pub fn method(&self, m: Method) -> &MethodSummary {
        self.methods
            .iter()
            .find(|s| s.method == m)
            .expect("all methods summarized")
    }

    pub fn from_records(coef_size: f64, records: &[RunRecord]) -> Self {
        let methods = Method::ALL
            .iter()
            .map(|&m| {
                let ok: Vec<&Selection> = records.iter().filter_map(|r| r.get(m)).collect();
                let runs_ok = ok.len();
                let (fwer, tp) = if runs_ok == 0 {
                    (f64::NAN, f64::NAN)
                } else {
                    (
                        ok.iter().filter(|s| s.false_positive).count() as f64 / runs_ok as f64,
                        ok.iter().map(|s| s.true_positives as f64).sum::<f64>() / runs_ok as f64,
                    )
                };
                MethodSummary {
                    method: m,
                    fwer,
                    tp,
                    runs_ok,
                    failures: records.len() - runs_ok,
                }
            })
            .collect();
        let mean = |v: Vec<f64>| {
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        ScenarioSummary {
            coef_size,
            methods,
            runs_completed: records.len(),
            mean_sigma_hat: mean(records.iter().filter_map(|r| r.sigma_hat).collect()),
            mean_sigma_hat_cov: mean(records.iter().filter_map(|r| r.sigma_hat_cov).collect()),
        }
    }
}

/// Settings shared by all methods in a comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub alpha: f64,
    pub sigma_rule: SigmaRule,
    pub nodewise_factor: f64,
    pub cov_reference: CovReferenceRule,
    pub cov_window: CovWindow,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            alpha: 0.05,
            sigma_rule: SigmaRule::default(),
            nodewise_factor: DEFAULT_NODEWISE_FACTOR,
            cov_reference: CovReferenceRule::default(),
            cov_window: CovWindow::default(),
        }
    }
}

impl From<&TableSection> for CompareOptions {
    fn from(t: &TableSection) -> Self {
        CompareOptions {
            alpha: t.alpha,
            sigma_rule: t.sigma_rule,
            nodewise_factor: t.nodewise_factor,
            cov_reference: t.cov_reference,
            cov_window: t.cov_window,
        }
    }
}

/// Knot budget for the covariance-test paths.
fn path_budget(cfg: &ScenarioConfig) -> usize {
    8 * cfg.n.min(cfg.p) + 50
}

fn run_cov_methods(
    rep: &Replicate,
    data: &ScenarioData,
    cfg: &ScenarioConfig,
    sigma2: f64,
    opts: &CompareOptions,
    reference: CovReference,
) -> covtest_core::Result<(Selection, Selection)> {
    let alpha = opts.alpha;
    let path = compute_path(&rep.x, &data.y, path_budget(cfg))?;
    let steps = cov_steps_within(&path, opts.cov_window.max_step(cfg.n, cfg.p));
    let seq = cov_sequence_with(&rep.x, &data.y, &path, sigma2, steps, reference)?;
    let cov = Selection::new(select_cov_stop(&seq, alpha), &data.a_star);
    let assigned = assign_cov_pvals_latest_tested(&seq, &path);
    let mut pvals = vec![1.0; cfg.p];
    for (j, p) in assigned {
        pvals[j] = p;
    }
    let adj = holm_adjust(&pvals)?;
    let cov_pval = Selection::new(reject_at(&adj, alpha), &data.a_star);
    Ok((cov, cov_pval))
}

/// Runs the three methods on one replicate at scenario point `cfg`.
pub fn analyze_point(
    rep: &Replicate,
    rows: Option<&[NodewiseRow]>,
    cfg: &ScenarioConfig,
    opts: &CompareOptions,
) -> RunRecord {
    let data = rep.scenario(cfg);
    let despars_source = opts.sigma_rule.despars_source(cfg.sigma);
    let cov_source = opts.sigma_rule.cov_source(cfg.sigma);
    let sigma_hat = estimate_sigma(&rep.x, &data.y, despars_source).ok();
    let sigma_hat_cov = if cov_source.resolve(cfg.n, cfg.p) == despars_source.resolve(cfg.n, cfg.p)
    {
        sigma_hat
    } else {
        estimate_sigma(&rep.x, &data.y, cov_source).ok()
    };
    let despars = sigma_hat.zip(rows).and_then(|(sigma, rows)| {
        let dcfg = DesparsConfig {
            alpha: opts.alpha,
            sigma_source: SigmaSource::Known(sigma),
            nodewise_factor: opts.nodewise_factor,
            ..Default::default()
        };
        let fit = despars_inference_with_rows(&rep.x, &data.y, &dcfg, rows).ok()?;
        let adj = holm_adjust(&fit.p_values).ok()?;
        Some(Selection::new(reject_at(&adj, opts.alpha), &data.a_star))
    });
    let (cov, cov_pval) = sigma_hat_cov
        .and_then(|s| {
            let reference = opts.cov_reference.reference(cov_source, cfg.n, cfg.p);
            run_cov_methods(rep, &data, cfg, s * s, opts, reference).ok()
        })
        .map_or((None, None), |(a, b)| (Some(a), Some(b)));
    RunRecord {
        sigma_hat,
        sigma_hat_cov,
        despars,
        cov,
        cov_pval,
    }
}

/// All coefficient sizes of a table section. Designs, noise and nodewise
/// rows are shared across sizes within a replicate.
pub fn run_table(
    base: &ScenarioConfig,
    table: &TableSection,
    jobs: usize,
) -> Result<Vec<ScenarioSummary>> {
    base.validate()?;
    let opts = CompareOptions::from(table);
    let points: Vec<ScenarioConfig> = table
        .coef_sizes
        .iter()
        .map(|&s| base.with_coef_size(s))
        .collect();
    let per_run = run_replicates(base.runs, jobs, |run| {
        let Ok(rep) = Replicate::draw(base, run) else {
            return vec![RunRecord::failed(); points.len()];
        };
        let rows = nodewise_rows_scaled(&rep.x, opts.nodewise_factor).ok();
        points
            .iter()
            .map(|cfg| analyze_point(&rep, rows.as_deref(), cfg, &opts))
            .collect::<Vec<_>>()
    })?;
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, cfg)| {
            let col: Vec<RunRecord> = per_run.iter().map(|r| r[i].clone()).collect();
            ScenarioSummary::from_records(cfg.coef_size, &col)
        })
        .collect())
}

/// Single scenario point with default options.
pub fn run_table_comparison(
    cfg: &ScenarioConfig,
    alpha: f64,
    jobs: usize,
) -> Result<ScenarioSummary> {
    let table = TableSection {
        alpha,
        ..TableSection::new(vec![cfg.coef_size])
    };
    Ok(run_table(cfg, &table, jobs)?.remove(0))
}

/// Confidence-interval coverage of the desparsified lasso for the
/// lowest-index active and the lowest-index inactive coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageSummary {
    pub active_coverage: f64,
    pub inactive_coverage: f64,
    pub runs_ok: usize,
    pub failures: usize,
}

pub fn despars_coverage(
    cfg: &ScenarioConfig,
    opts: &CompareOptions,
    jobs: usize,
) -> Result<CoverageSummary> {
    cfg.validate()?;
    let per_run = run_replicates(cfg.runs, jobs, |run| -> Option<(bool, bool)> {
        let rep = Replicate::draw(cfg, run).ok()?;
        let data = rep.scenario(cfg);
        let sigma =
            estimate_sigma(&rep.x, &data.y, opts.sigma_rule.despars_source(cfg.sigma)).ok()?;
        let rows = nodewise_rows_scaled(&rep.x, opts.nodewise_factor).ok()?;
        let dcfg = DesparsConfig {
            alpha: opts.alpha,
            sigma_source: SigmaSource::Known(sigma),
            nodewise_factor: opts.nodewise_factor,
            ..Default::default()
        };
        let fit = despars_inference_with_rows(&rep.x, &data.y, &dcfg, &rows).ok()?;
        let covers = |j: usize| {
            fit.ci_low[j] <= data.beta_analysis[j] && data.beta_analysis[j] <= fit.ci_high[j]
        };
        let active = data.a_star[0];
        let inactive = (0..cfg.p).find(|j| data.a_star.binary_search(j).is_err())?;
        Some((covers(active), covers(inactive)))
    })?;
    let ok: Vec<(bool, bool)> = per_run.iter().flatten().copied().collect();
    let runs_ok = ok.len();
    let frac = |f: fn(&(bool, bool)) -> bool| {
        ok.iter().filter(|v| f(v)).count() as f64 / runs_ok.max(1) as f64
    };
    Ok(CoverageSummary {
        active_coverage: frac(|v| v.0),
        inactive_coverage: frac(|v| v.1),
        runs_ok,
        failures: cfg.runs - runs_ok,
    })
}
